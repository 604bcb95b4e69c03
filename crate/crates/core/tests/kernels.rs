//! Finite-difference and re-evaluation oracles for the analytic kernels:
//! effective-energy gradients, Hessian-vector products, and swap deltas.

use cubopt::instance::generate_instance;
use cubopt::model::{
    eval_effective, eval_selection, gradient, hessian_vector, EnergyParams, Portfolio, SwapCache,
};
use rand::Rng;

/// Test instances spanning sizes, cardinalities, and seeds.
fn corpus() -> Vec<cubopt::PortfolioInstance> {
    let specs = [(10, 3, 1), (15, 4, 2), (20, 4, 42), (25, 5, 1042), (30, 6, 2042)];
    specs
        .iter()
        .map(|&(n, k, seed)| generate_instance(n, k, seed).expect("corpus instance"))
        .collect()
}

fn random_point<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| rng.random::<f64>()).collect()
}

#[test]
fn gradient_matches_central_differences_everywhere() {
    let mut rng = cubopt::rng::seeded(1, 100);
    let mut cases = 0;
    for inst in &corpus() {
        let n = inst.n();
        for _ in 0..20 {
            let x = random_point(n, &mut rng);
            let beta: f64 = rng.random::<f64>();
            let params = EnergyParams { beta };
            let g = gradient(inst, &x, params);
            let h = 1e-5;
            for i in 0..n {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[i] += h;
                xm[i] -= h;
                let fd = (eval_effective(inst, &xp, params) - eval_effective(inst, &xm, params))
                    / (2.0 * h);
                let err = (g[i] - fd).abs() / fd.abs().max(1.0);
                assert!(
                    err <= 1e-5,
                    "n={n} case {cases} coord {i}: analytic {} vs fd {}",
                    g[i],
                    fd
                );
            }
            cases += 1;
        }
    }
    assert!(cases >= 100, "oracle must cover at least 100 states");
}

#[test]
fn hessian_vector_matches_differenced_gradients() {
    let mut rng = cubopt::rng::seeded(2, 100);
    let mut cases = 0;
    for inst in &corpus() {
        let n = inst.n();
        for _ in 0..20 {
            let x = random_point(n, &mut rng);
            let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let beta: f64 = rng.random::<f64>();
            let params = EnergyParams { beta };
            let hv = hessian_vector(inst, &x, &v, params);
            let h = 1e-5;
            let xp: Vec<f64> = x.iter().zip(&v).map(|(a, b)| a + h * b).collect();
            let xm: Vec<f64> = x.iter().zip(&v).map(|(a, b)| a - h * b).collect();
            let gp = gradient(inst, &xp, params);
            let gm = gradient(inst, &xm, params);
            for i in 0..n {
                let fd = (gp[i] - gm[i]) / (2.0 * h);
                let err = (hv[i] - fd).abs() / fd.abs().max(1.0);
                assert!(
                    err <= 1e-4,
                    "n={n} case {cases} coord {i}: analytic {} vs fd {}",
                    hv[i],
                    fd
                );
            }
            cases += 1;
        }
    }
    assert!(cases >= 100, "oracle must cover at least 100 states");
}

#[test]
fn swap_deltas_match_full_reevaluation_across_corpus() {
    let mut rng = cubopt::rng::seeded(3, 100);
    let mut cases = 0;
    for inst in &corpus() {
        let n = inst.n();
        let k = inst.k();
        for _ in 0..5 {
            let idx = rand::seq::index::sample(&mut rng, n, k).into_vec();
            let p = Portfolio::from_indices(n, &idx);
            let cache = SwapCache::new(inst, &p);
            let f0 = eval_selection(inst, &p);
            for &o in &idx {
                for a in 0..n {
                    if p.is_selected(a) {
                        continue;
                    }
                    let mut q = p.clone();
                    q.swap(o, a);
                    let full = eval_selection(inst, &q) - f0;
                    let fast = cache.delta(o, a);
                    assert!(
                        (full - fast).abs() <= 1e-10,
                        "n={n} swap ({o} -> {a}): {fast} vs {full}"
                    );
                    cases += 1;
                }
            }
        }
    }
    assert!(cases >= 100, "oracle must cover at least 100 swaps");
}

#[test]
fn swap_deltas_stay_exact_after_many_applications() {
    let inst = generate_instance(30, 6, 7).expect("generate");
    let mut rng = cubopt::rng::seeded(4, 100);
    let idx = rand::seq::index::sample(&mut rng, 30, 6).into_vec();
    let mut cache = SwapCache::new(&inst, &Portfolio::from_indices(30, &idx));
    for step in 0..200 {
        let sel = cache.portfolio().indices();
        let unsel: Vec<usize> = (0..30).filter(|&i| !cache.is_selected(i)).collect();
        let o = sel[rng.random_range(0..sel.len())];
        let a = unsel[rng.random_range(0..unsel.len())];
        let before = eval_selection(&inst, &cache.portfolio());
        let predicted = cache.delta(o, a);
        cache.apply(o, a);
        let after = eval_selection(&inst, &cache.portfolio());
        assert!(
            (after - before - predicted).abs() <= 1e-10,
            "step {step}: predicted {predicted} vs actual {}",
            after - before
        );
    }
}
