//! Native cubic objective, bifurcation-well relaxation, analytic
//! derivatives, and exact-cardinality swap machinery.
//!
//! The native objective over `x in {0,1}^n` (or its continuous relaxation
//! over `[0,1]^n`) is
//!
//! ```text
//! f(x) = x' Sigma x - mu' x + sum_t c_t * x_i(t) * x_j(t) * x_a(t)
//! ```
//!
//! The effective energy adds a double-well term `beta * sum_i x_i^2 (x_i-1)^2`
//! that is zero exactly on binary states, so ramping `beta` from 0 to 1
//! deforms the relaxed landscape toward the hypercube corners without
//! changing any binary value.
//!
//! All evaluation functions take slices of the instance's dimension and
//! panic on length mismatches; they are pure and accumulate in ascending
//! index order, so results are bit-reproducible.

use crate::instance::PortfolioInstance;

/// Double-well value `x^2 (x-1)^2` per coordinate.
#[inline]
fn well_value(x: f64) -> f64 {
    let d = x - 1.0;
    x * x * d * d
}

/// Derivative of the double-well: `4x^3 - 6x^2 + 2x`.
#[inline]
fn well_grad(x: f64) -> f64 {
    ((4.0 * x - 6.0) * x + 2.0) * x
}

/// Second derivative of the double-well: `12x^2 - 12x + 2`.
#[inline]
fn well_curv(x: f64) -> f64 {
    (12.0 * x - 12.0) * x + 2.0
}

/// Relaxation parameters for the effective energy. The well is centered on
/// the hypercube (midpoint 0.5 per coordinate); only its weight varies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyParams {
    /// Double-well weight in `[0, 1]`; 0 recovers the bare objective.
    pub beta: f64,
}

impl EnergyParams {
    /// Midpoint of the well along every coordinate.
    pub const DOMAIN_CENTER: f64 = 0.5;
}

/// An exact-cardinality selection of assets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Portfolio {
    bits: Vec<bool>,
    ones: usize,
}

impl Portfolio {
    /// Builds from a dense selection mask.
    pub fn from_bits(bits: Vec<bool>) -> Self {
        let ones = bits.iter().filter(|&&b| b).count();
        Self { bits, ones }
    }

    /// Builds an `n`-asset portfolio selecting exactly `idx`.
    ///
    /// Panics on out-of-range or repeated indices.
    pub fn from_indices(n: usize, idx: &[usize]) -> Self {
        let mut bits = vec![false; n];
        for &i in idx {
            assert!(i < n, "portfolio index {i} out of range for n={n}");
            assert!(!bits[i], "portfolio index {i} repeated");
            bits[i] = true;
        }
        Self { bits, ones: idx.len() }
    }

    pub fn n(&self) -> usize {
        self.bits.len()
    }

    pub fn cardinality(&self) -> usize {
        self.ones
    }

    #[inline]
    pub fn is_selected(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Selected asset indices in ascending order.
    pub fn indices(&self) -> Vec<usize> {
        (0..self.bits.len()).filter(|&i| self.bits[i]).collect()
    }

    /// Dense 0.0/1.0 vector.
    pub fn to_dense(&self) -> Vec<f64> {
        self.bits.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()
    }

    /// Replaces selected `out_idx` with unselected `in_idx`.
    ///
    /// Panics if the indices are not in the required states.
    pub fn swap(&mut self, out_idx: usize, in_idx: usize) {
        assert!(self.bits[out_idx], "swap out_idx {out_idx} is not selected");
        assert!(!self.bits[in_idx], "swap in_idx {in_idx} is already selected");
        self.bits[out_idx] = false;
        self.bits[in_idx] = true;
    }
}

/// Native objective on a real or binary vector of length `n`.
pub fn eval_native(inst: &PortfolioInstance, x: &[f64]) -> f64 {
    let n = inst.n();
    assert_eq!(x.len(), n, "eval_native vector length mismatch");
    let mut quad = 0.0;
    for i in 0..n {
        let row = inst.cov_row(i);
        let mut acc = 0.0;
        for (rv, xv) in row.iter().zip(x) {
            acc += rv * xv;
        }
        quad += x[i] * acc;
    }
    let lin: f64 = inst.returns().iter().zip(x).map(|(m, xv)| m * xv).sum();
    let mut cubic = 0.0;
    for t in inst.cubic() {
        cubic += t.coeff * x[t.i] * x[t.j] * x[t.anchor];
    }
    quad - lin + cubic
}

/// Native objective of an exact selection in `O(K^2 + |triples|)`.
///
/// Agrees with [`eval_native`] on the dense 0/1 embedding of the portfolio.
pub fn eval_selection(inst: &PortfolioInstance, p: &Portfolio) -> f64 {
    assert_eq!(p.n(), inst.n(), "eval_selection portfolio size mismatch");
    let idx = p.indices();
    let mut quad = 0.0;
    for (a, &i) in idx.iter().enumerate() {
        quad += inst.cov(i, i);
        for &j in &idx[a + 1..] {
            quad += 2.0 * inst.cov(i, j);
        }
    }
    let lin: f64 = idx.iter().map(|&i| inst.returns()[i]).sum();
    let mut cubic = 0.0;
    for t in inst.cubic() {
        if p.is_selected(t.i) && p.is_selected(t.j) && p.is_selected(t.anchor) {
            cubic += t.coeff;
        }
    }
    quad - lin + cubic
}

/// Effective energy `f(x) + beta * sum_i x_i^2 (x_i - 1)^2`.
pub fn eval_effective(inst: &PortfolioInstance, x: &[f64], params: EnergyParams) -> f64 {
    let well: f64 = x.iter().map(|&v| well_value(v)).sum();
    eval_native(inst, x) + params.beta * well
}

/// Effective energy and its gradient in one pass (one covariance product).
///
/// `grad` receives `2 Sigma x - mu + cubic terms + beta * well'(x)`, where
/// each cubic term contributes to all three participating coordinates.
/// Returns the effective energy at `x`.
pub fn effective_energy_and_gradient(
    inst: &PortfolioInstance,
    x: &[f64],
    params: EnergyParams,
    grad: &mut [f64],
) -> f64 {
    let n = inst.n();
    assert_eq!(x.len(), n, "gradient input length mismatch");
    assert_eq!(grad.len(), n, "gradient output length mismatch");
    inst.cov_mul(x, grad); // grad temporarily holds Sigma * x
    let mut energy = 0.0;
    for i in 0..n {
        energy += x[i] * grad[i] - inst.returns()[i] * x[i] + params.beta * well_value(x[i]);
        grad[i] = 2.0 * grad[i] - inst.returns()[i] + params.beta * well_grad(x[i]);
    }
    for t in inst.cubic() {
        let (xi, xj, xa) = (x[t.i], x[t.j], x[t.anchor]);
        energy += t.coeff * xi * xj * xa;
        grad[t.i] += t.coeff * xj * xa;
        grad[t.j] += t.coeff * xi * xa;
        grad[t.anchor] += t.coeff * xi * xj;
    }
    energy
}

/// Gradient of the effective energy.
pub fn gradient(inst: &PortfolioInstance, x: &[f64], params: EnergyParams) -> Vec<f64> {
    let mut g = vec![0.0; inst.n()];
    effective_energy_and_gradient(inst, x, params, &mut g);
    g
}

/// Hessian-vector product of the effective energy, written into `out`.
///
/// `(H v)_i = 2 (Sigma v)_i + sum over triples at i of c * (x_b v_c + x_c v_b)
/// + beta * well''(x_i) * v_i`, with `(b, c)` the other two members of each
/// triple.
pub fn hessian_vector_into(
    inst: &PortfolioInstance,
    x: &[f64],
    v: &[f64],
    params: EnergyParams,
    out: &mut [f64],
) {
    let n = inst.n();
    assert_eq!(x.len(), n, "hvp state length mismatch");
    assert_eq!(v.len(), n, "hvp direction length mismatch");
    assert_eq!(out.len(), n, "hvp output length mismatch");
    inst.cov_mul(v, out);
    for i in 0..n {
        out[i] = 2.0 * out[i] + params.beta * well_curv(x[i]) * v[i];
    }
    for t in inst.cubic() {
        let (i, j, a) = (t.i, t.j, t.anchor);
        out[i] += t.coeff * (x[j] * v[a] + x[a] * v[j]);
        out[j] += t.coeff * (x[i] * v[a] + x[a] * v[i]);
        out[a] += t.coeff * (x[i] * v[j] + x[j] * v[i]);
    }
}

/// Allocating wrapper around [`hessian_vector_into`].
pub fn hessian_vector(
    inst: &PortfolioInstance,
    x: &[f64],
    v: &[f64],
    params: EnergyParams,
) -> Vec<f64> {
    let mut out = vec![0.0; inst.n()];
    hessian_vector_into(inst, x, v, params, &mut out);
    out
}

/// Incremental state for exact-cardinality swap search.
///
/// Maintains, for the current selection, the covariance image `Sigma x`,
/// per-triple selected-member counts, and two per-asset aggregates: the
/// coefficient mass an asset's removal would release from fully selected
/// triples, and the mass an asset's insertion would complete from triples
/// missing only that asset. Together these give any single swap's objective
/// delta in `O(degree)` and a full `K x (n-K)` scan in `O(K(n-K) + K*deg)`.
pub struct SwapCache<'a> {
    inst: &'a PortfolioInstance,
    selected: Vec<bool>,
    ones: usize,
    sigma_x: Vec<f64>,
    /// Selected members (0..=3) per triple.
    triple_sel: Vec<u8>,
    /// For selected `i`: total coeff of triples containing `i` with all
    /// three members selected (removing `i` subtracts this). Zero otherwise.
    complete_weight: Vec<f64>,
    /// For unselected `a`: total coeff of triples containing `a` whose other
    /// two members are selected (adding `a` adds this). Zero otherwise.
    add_gain: Vec<f64>,
}

impl<'a> SwapCache<'a> {
    /// Builds the cache for `p` in `O(n^2 + |triples|)`.
    pub fn new(inst: &'a PortfolioInstance, p: &Portfolio) -> Self {
        assert_eq!(p.n(), inst.n(), "swap cache portfolio size mismatch");
        let n = inst.n();
        let x = p.to_dense();
        let mut sigma_x = vec![0.0; n];
        inst.cov_mul(&x, &mut sigma_x);
        let mut cache = Self {
            inst,
            selected: p.bits().to_vec(),
            ones: p.cardinality(),
            sigma_x,
            triple_sel: vec![0; inst.cubic().len()],
            complete_weight: vec![0.0; n],
            add_gain: vec![0.0; n],
        };
        for t in 0..inst.cubic().len() {
            cache.triple_sel[t] = cache.count_selected(t);
            cache.deposit(t, 1.0);
        }
        cache
    }

    fn count_selected(&self, t: usize) -> u8 {
        let term = &self.inst.cubic()[t];
        self.selected[term.i] as u8 + self.selected[term.j] as u8 + self.selected[term.anchor] as u8
    }

    /// Adds (`sign = 1.0`) or removes (`sign = -1.0`) triple `t`'s
    /// contribution to the per-asset aggregates.
    fn deposit(&mut self, t: usize, sign: f64) {
        let term = &self.inst.cubic()[t];
        let c = sign * term.coeff;
        match self.triple_sel[t] {
            3 => {
                self.complete_weight[term.i] += c;
                self.complete_weight[term.j] += c;
                self.complete_weight[term.anchor] += c;
            }
            2 => {
                let u = [term.i, term.j, term.anchor]
                    .into_iter()
                    .find(|&m| !self.selected[m])
                    .expect("count 2 leaves one unselected member");
                self.add_gain[u] += c;
            }
            _ => {}
        }
    }

    pub fn cardinality(&self) -> usize {
        self.ones
    }

    pub fn is_selected(&self, i: usize) -> bool {
        self.selected[i]
    }

    /// Current selection as a portfolio.
    pub fn portfolio(&self) -> Portfolio {
        Portfolio::from_bits(self.selected.clone())
    }

    /// Native-objective change of swapping selected `out_idx` for unselected
    /// `in_idx`, equal to the full re-evaluation difference.
    ///
    /// Panics if the indices are not in the required states.
    pub fn delta(&self, out_idx: usize, in_idx: usize) -> f64 {
        assert!(self.selected[out_idx], "delta out_idx {out_idx} is not selected");
        assert!(!self.selected[in_idx], "delta in_idx {in_idx} is already selected");
        self.base_out(out_idx) + self.base_in(in_idx)
            - 2.0 * self.inst.cov(out_idx, in_idx)
            - self.cross_correction(out_idx, in_idx)
    }

    /// Out-asset part of the swap delta (independent of the in-asset).
    fn base_out(&self, o: usize) -> f64 {
        -2.0 * self.sigma_x[o] + self.inst.cov(o, o) + self.inst.returns()[o]
            - self.complete_weight[o]
    }

    /// In-asset part of the swap delta (independent of the out-asset).
    fn base_in(&self, a: usize) -> f64 {
        2.0 * self.sigma_x[a] + self.inst.cov(a, a) - self.inst.returns()[a] + self.add_gain[a]
    }

    /// Coefficient mass double-counted by `add_gain[a]` when `o` and `a`
    /// share a triple that `a` would complete but `o`'s departure breaks.
    fn cross_correction(&self, o: usize, a: usize) -> f64 {
        let mut corr = 0.0;
        for &t in self.inst.triples_of(o) {
            if self.triple_sel[t as usize] == 2 && self.inst.cubic()[t as usize].touches(a) {
                corr += self.inst.cubic()[t as usize].coeff;
            }
        }
        corr
    }

    /// Per-out-asset corrections as sorted `(in_asset, coeff)` pairs, for
    /// merge-scanning a whole row of swap candidates.
    fn corrections_for(&self, o: usize) -> Vec<(usize, f64)> {
        let mut list: Vec<(usize, f64)> = Vec::new();
        for &t in self.inst.triples_of(o) {
            let t = t as usize;
            if self.triple_sel[t] == 2 {
                let term = &self.inst.cubic()[t];
                let u = [term.i, term.j, term.anchor]
                    .into_iter()
                    .find(|&m| !self.selected[m])
                    .expect("count 2 leaves one unselected member");
                list.push((u, term.coeff));
            }
        }
        list.sort_unstable_by_key(|&(u, _)| u);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(list.len());
        for (u, c) in list {
            match merged.last_mut() {
                Some((lu, lc)) if *lu == u => *lc += c,
                _ => merged.push((u, c)),
            }
        }
        merged
    }

    /// Best single swap over all `K (n-K)` candidates, or `None` when no
    /// swap strictly improves. Scans out-assets then in-assets in ascending
    /// index order and keeps the first strict minimum, so ties resolve to
    /// the lexicographically smallest `(out, in)` pair.
    pub fn best_swap(&self) -> Option<(usize, usize, f64)> {
        let n = self.inst.n();
        let sel: Vec<usize> = (0..n).filter(|&i| self.selected[i]).collect();
        let unsel: Vec<usize> = (0..n).filter(|&i| !self.selected[i]).collect();
        let base_in: Vec<f64> = unsel.iter().map(|&a| self.base_in(a)).collect();
        let mut best: Option<(usize, usize, f64)> = None;
        for &o in &sel {
            let corr = self.corrections_for(o);
            let base_o = self.base_out(o);
            let row = self.inst.cov_row(o);
            let mut cp = 0;
            for (&a, &bi) in unsel.iter().zip(&base_in) {
                while cp < corr.len() && corr[cp].0 < a {
                    cp += 1;
                }
                let c = if cp < corr.len() && corr[cp].0 == a { corr[cp].1 } else { 0.0 };
                let d = base_o + bi - 2.0 * row[a] - c;
                if best.map_or(true, |(_, _, bd)| d < bd) {
                    best = Some((o, a, d));
                }
            }
        }
        best.filter(|&(_, _, d)| d < 0.0)
    }

    /// Applies the swap and updates all incremental state in
    /// `O(n + degree)`.
    ///
    /// Panics if the indices are not in the required states.
    pub fn apply(&mut self, out_idx: usize, in_idx: usize) {
        assert!(self.selected[out_idx], "apply out_idx {out_idx} is not selected");
        assert!(!self.selected[in_idx], "apply in_idx {in_idx} is already selected");
        let mut affected: Vec<u32> = Vec::with_capacity(
            self.inst.triples_of(out_idx).len() + self.inst.triples_of(in_idx).len(),
        );
        affected.extend_from_slice(self.inst.triples_of(out_idx));
        affected.extend_from_slice(self.inst.triples_of(in_idx));
        affected.sort_unstable();
        affected.dedup();
        for &t in &affected {
            self.deposit(t as usize, -1.0);
        }
        self.selected[out_idx] = false;
        self.selected[in_idx] = true;
        for &t in &affected {
            self.triple_sel[t as usize] = self.count_selected(t as usize);
        }
        for &t in &affected {
            self.deposit(t as usize, 1.0);
        }
        let n = self.inst.n();
        let row_in = self.inst.cov_row(in_idx);
        let row_out = self.inst.cov_row(out_idx);
        for i in 0..n {
            self.sigma_x[i] += row_in[i] - row_out[i];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate_instance, CubicTerm, InstanceParts, PortfolioInstance};
    use rand::Rng;

    /// 3-asset identity-covariance instance with one unit cubic term.
    fn tiny() -> PortfolioInstance {
        PortfolioInstance::from_parts(InstanceParts {
            n: 3,
            k: 1,
            seed: 7,
            n_sectors: 1,
            alpha_cubic: 4.0,
            quad_scale: 0.1,
            covariance: vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
            returns: vec![0.1, 0.1, 0.1],
            sector_of: vec![0, 0, 0],
            loadings: vec![1.0, 1.0, 1.0],
            cubic: vec![CubicTerm { i: 0, j: 1, anchor: 2, coeff: 1.0 }],
        })
        .expect("tiny instance is valid")
    }

    #[test]
    fn native_value_matches_hand_computation() {
        let inst = tiny();
        assert_eq!(eval_native(&inst, &[0.0, 0.0, 0.0]), 0.0);
        // f(1,1,1) = 3 (diag) - 0.3 (returns) + 1 (cubic) = 3.7
        assert!((eval_native(&inst, &[1.0, 1.0, 1.0]) - 3.7).abs() < 1e-12);
        // f(1,1,0) = 2 - 0.2 = 1.8; the triple needs all three assets.
        assert!((eval_native(&inst, &[1.0, 1.0, 0.0]) - 1.8).abs() < 1e-12);
    }

    #[test]
    fn selection_eval_agrees_with_dense_eval() {
        let inst = generate_instance(30, 6, 42).expect("generate");
        let mut rng = crate::rng::seeded(3, 99);
        for _ in 0..20 {
            let bits: Vec<bool> = (0..30).map(|_| rng.random::<f64>() < 0.3).collect();
            let p = Portfolio::from_bits(bits);
            let dense = p.to_dense();
            let a = eval_selection(&inst, &p);
            let b = eval_native(&inst, &dense);
            assert!((a - b).abs() <= 1e-10 * (1.0 + b.abs()), "{a} vs {b}");
        }
    }

    #[test]
    fn well_vanishes_on_binary_states() {
        let inst = tiny();
        let x = [1.0, 0.0, 1.0];
        let bare = eval_native(&inst, &x);
        let hot = eval_effective(&inst, &x, EnergyParams { beta: 1.0 });
        assert_eq!(bare, hot, "the well must vanish identically on binary states");
        let mid = [0.5, 0.5, 0.5];
        let lifted = eval_effective(&inst, &mid, EnergyParams { beta: 1.0 });
        assert!((lifted - eval_native(&inst, &mid) - 3.0 * 0.0625).abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_central_differences_on_tiny() {
        let inst = tiny();
        let x = [0.3, 0.7, 0.4];
        let params = EnergyParams { beta: 0.5 };
        let g = gradient(&inst, &x, params);
        let h = 1e-6;
        for i in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[i] += h;
            xm[i] -= h;
            let fd =
                (eval_effective(&inst, &xp, params) - eval_effective(&inst, &xm, params)) / (2.0 * h);
            assert!((g[i] - fd).abs() < 1e-6, "coord {i}: {} vs {}", g[i], fd);
        }
    }

    #[test]
    fn energy_and_gradient_pass_agrees_with_separate_calls() {
        let inst = generate_instance(20, 4, 9).expect("generate");
        let mut rng = crate::rng::seeded(5, 98);
        let x: Vec<f64> = (0..20).map(|_| rng.random::<f64>()).collect();
        let params = EnergyParams { beta: 0.37 };
        let mut g = vec![0.0; 20];
        let e = effective_energy_and_gradient(&inst, &x, params, &mut g);
        let e_ref = eval_effective(&inst, &x, params);
        let g_ref = gradient(&inst, &x, params);
        assert!((e - e_ref).abs() <= 1e-12 * (1.0 + e_ref.abs()));
        assert_eq!(g, g_ref);
    }

    #[test]
    fn swap_delta_matches_full_reevaluation() {
        let inst = generate_instance(20, 4, 11).expect("generate");
        let p = Portfolio::from_indices(20, &[0, 3, 7, 15]);
        let cache = SwapCache::new(&inst, &p);
        let f0 = eval_selection(&inst, &p);
        for o in [0usize, 3, 7, 15] {
            for a in 0..20 {
                if p.is_selected(a) {
                    continue;
                }
                let mut q = p.clone();
                q.swap(o, a);
                let full = eval_selection(&inst, &q) - f0;
                let fast = cache.delta(o, a);
                assert!(
                    (full - fast).abs() <= 1e-10,
                    "swap ({o} -> {a}): {fast} vs {full}"
                );
            }
        }
    }

    #[test]
    fn swap_between_decoupled_assets_is_free() {
        // Assets 0 and 2 have zero covariance rows, equal returns, and no
        // triples touching either, so exchanging them changes nothing.
        let inst = PortfolioInstance::from_parts(InstanceParts {
            n: 4,
            k: 2,
            seed: 1,
            n_sectors: 1,
            alpha_cubic: 4.0,
            quad_scale: 0.0,
            covariance: vec![
                0.0, 0.0, 0.0, 0.0, //
                0.0, 1.0, 0.0, 0.2, //
                0.0, 0.0, 0.0, 0.0, //
                0.0, 0.2, 0.0, 1.0,
            ],
            returns: vec![0.1, 0.2, 0.1, 0.3],
            sector_of: vec![0, 0, 0, 0],
            loadings: vec![1.0; 4],
            cubic: vec![],
        })
        .expect("valid");
        let p = Portfolio::from_indices(4, &[0, 1]);
        let cache = SwapCache::new(&inst, &p);
        assert_eq!(cache.delta(0, 2), 0.0);
    }

    #[test]
    fn applied_swaps_keep_cache_consistent() {
        let inst = generate_instance(25, 5, 13).expect("generate");
        let p = Portfolio::from_indices(25, &[1, 4, 9, 16, 21]);
        let mut cache = SwapCache::new(&inst, &p);
        let mut running = eval_selection(&inst, &p);
        let swaps = [(1usize, 0usize), (4, 2), (9, 4), (16, 1), (21, 9)];
        for &(o, a) in &swaps {
            let d = cache.delta(o, a);
            cache.apply(o, a);
            running += d;
            let exact = eval_selection(&inst, &cache.portfolio());
            assert!(
                (running - exact).abs() <= 1e-10 * (1.0 + exact.abs()),
                "running {running} drifted from exact {exact}"
            );
            // Fresh cache from the same portfolio must agree on every delta.
            let fresh = SwapCache::new(&inst, &cache.portfolio());
            for o2 in cache.portfolio().indices() {
                for a2 in 0..25 {
                    if !cache.is_selected(a2) {
                        let lhs = cache.delta(o2, a2);
                        let rhs = fresh.delta(o2, a2);
                        assert!((lhs - rhs).abs() <= 1e-10, "({o2},{a2}): {lhs} vs {rhs}");
                    }
                }
            }
        }
    }

    #[test]
    fn best_swap_prefers_lowest_indices_on_ties() {
        // Symmetric instance: every swap has the same delta, so the scan
        // must return the lexicographically smallest pair.
        let n = 4;
        let inst = PortfolioInstance::from_parts(InstanceParts {
            n,
            k: 2,
            seed: 1,
            n_sectors: 1,
            alpha_cubic: 4.0,
            quad_scale: 0.0,
            covariance: {
                let mut c = vec![0.0; n * n];
                for i in 0..n {
                    c[i * n + i] = 1.0;
                }
                c
            },
            returns: vec![0.0, 0.0, 0.5, 0.5],
            sector_of: vec![0; 4],
            loadings: vec![1.0; 4],
            cubic: vec![],
        })
        .expect("valid");
        let p = Portfolio::from_indices(n, &[0, 1]);
        let cache = SwapCache::new(&inst, &p);
        let (o, a, d) = cache.best_swap().expect("swapping in a higher-return asset improves");
        assert_eq!((o, a), (0, 2), "ties must resolve to the smallest (out, in) pair");
        assert!((d - (-0.5)).abs() < 1e-12);
    }
}
