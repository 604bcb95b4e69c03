//! Quadratization of the cubic objective into an augmented QUBO with
//! penalty-encoded cardinality, for baseline solvers that only speak
//! quadratic binary models.
//!
//! Each cubic term `c * x_i x_j x_a` gains one auxiliary bit `w` meant to
//! track `x_i x_j`; the term becomes `c * w * x_a` plus the penalty
//! `lambda_ros * (x_i x_j - 2 x_i w - 2 x_j w + 3 w)`, which is zero
//! exactly when `w = x_i x_j` and otherwise at least `lambda_ros`
//! (provided `c <= lambda_ros`). The exact cardinality constraint becomes
//! the soft penalty `lambda_card * (sum_i x_i - K)^2` over the original
//! bits; its constant part `lambda_card * K^2` is kept outside the matrix.
//!
//! The matrix convention is `E(s) = sum_i d_i s_i + sum_{i<j} q_ij s_i s_j`
//! with each coupling stored once.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::instance::{CubicTerm, PortfolioInstance};
use crate::model::Portfolio;

/// Per-term penalty weight enforcing `w = x_i x_j`.
pub const LAMBDA_ROSENBERG: f64 = 10.0;

/// Default multiplier on the measured cardinality-penalty base.
pub const CARD_MULTIPLIER_DEFAULT: f64 = 1.0;

/// Failure cases when assembling an augmented model.
#[derive(Debug, Error)]
pub enum QuadError {
    /// Two cubic terms were routed to the same auxiliary bit.
    #[error("auxiliary bit {0} already carries a quadratized term")]
    DuplicateAux(usize),
    /// An index fell outside the augmented variable range.
    #[error("index {0} out of range for {1} augmented variables")]
    OutOfRange(usize, usize),
}

/// Accumulates linear and coupling coefficients before freezing.
pub struct QuboBuilder {
    n_aug: usize,
    diag: Vec<f64>,
    pairs: BTreeMap<(u32, u32), f64>,
    aux_used: Vec<bool>,
}

impl QuboBuilder {
    /// Starts an empty model over `n_aug` binary variables.
    pub fn new(n_aug: usize) -> Self {
        Self {
            n_aug,
            diag: vec![0.0; n_aug],
            pairs: BTreeMap::new(),
            aux_used: vec![false; n_aug],
        }
    }

    /// Adds `v` to the linear coefficient of variable `i`.
    pub fn add_linear(&mut self, i: usize, v: f64) {
        assert!(i < self.n_aug, "linear index {i} out of range");
        self.diag[i] += v;
    }

    /// Adds `v` to the coupling of distinct variables `i` and `j`.
    pub fn add_coupling(&mut self, i: usize, j: usize, v: f64) {
        assert!(i != j, "couplings need distinct variables");
        assert!(i < self.n_aug && j < self.n_aug, "coupling index out of range");
        let key = (i.min(j) as u32, i.max(j) as u32);
        *self.pairs.entry(key).or_insert(0.0) += v;
    }

    /// Largest absolute coefficient so far, diagonal included.
    pub fn max_abs_entry(&self) -> f64 {
        let d = self.diag.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        self.pairs.values().fold(d, |m, v| m.max(v.abs()))
    }

    /// Reference energy of a state under the accumulated coefficients.
    ///
    /// Direct evaluation for audits and tests; solvers use the frozen
    /// [`AugmentedQubo`] instead.
    pub fn energy(&self, state: &[bool]) -> f64 {
        assert_eq!(state.len(), self.n_aug, "state length mismatch");
        let mut e = 0.0;
        for (i, &d) in self.diag.iter().enumerate() {
            if state[i] {
                e += d;
            }
        }
        for (&(i, j), &v) in &self.pairs {
            if state[i as usize] && state[j as usize] {
                e += v;
            }
        }
        e
    }
}

/// Quadratizes one cubic term into `builder` using auxiliary bit `aux`.
///
/// Emits the reduced objective coupling `coeff` on `(anchor, aux)` and the
/// exactness penalty weighted by `lambda_ros`. Each auxiliary bit may carry
/// only one term.
pub fn quadratize_term(
    builder: &mut QuboBuilder,
    term: &CubicTerm,
    aux: usize,
    lambda_ros: f64,
) -> Result<(), QuadError> {
    if aux >= builder.n_aug {
        return Err(QuadError::OutOfRange(aux, builder.n_aug));
    }
    for idx in [term.i, term.j, term.anchor] {
        if idx >= builder.n_aug {
            return Err(QuadError::OutOfRange(idx, builder.n_aug));
        }
    }
    if builder.aux_used[aux] {
        return Err(QuadError::DuplicateAux(aux));
    }
    builder.aux_used[aux] = true;
    builder.add_coupling(term.anchor, aux, term.coeff);
    builder.add_linear(aux, 3.0 * lambda_ros);
    builder.add_coupling(term.i, term.j, lambda_ros);
    builder.add_coupling(term.i, aux, -2.0 * lambda_ros);
    builder.add_coupling(term.j, aux, -2.0 * lambda_ros);
    Ok(())
}

/// Frozen augmented QUBO with penalty metadata.
///
/// Variables `0..n` are the asset bits; variable `n + t` is the auxiliary
/// bit of cubic term `t`.
pub struct AugmentedQubo {
    n: usize,
    k: usize,
    diag: Vec<f64>,
    /// Upper-triangular couplings `(i, j, value)`, ascending, each once.
    pairs: Vec<(u32, u32, f64)>,
    /// Symmetric adjacency (each coupling in both rows) for local updates.
    adj: Vec<Vec<(u32, f64)>>,
    triples: Vec<CubicTerm>,
    lambda_card: f64,
    lambda_ros: f64,
    /// Constant `lambda_card * K^2`, excluded from matrix energy.
    constant_offset: f64,
    /// Largest absolute coefficient before penalties were inserted.
    max_abs_pre_penalty: f64,
}

/// Matrix energy split into its modeled components.
///
/// The decomposition satisfies
/// `matrix_energy = objective_part + card_penalty + ros_penalty - constant_offset`,
/// and for a consistent, exactly-feasible state both penalties cancel the
/// offset so the matrix energy is the native objective minus the offset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBreakdown {
    /// Energy of the coefficient matrix at the state (no constant).
    pub matrix_energy: f64,
    /// Quadratic objective plus reduced cubic terms `c * w * x_anchor`.
    pub objective_part: f64,
    /// `lambda_card * (cardinality - K)^2`, constant included.
    pub card_penalty: f64,
    /// Total Rosenberg exactness penalty.
    pub ros_penalty: f64,
}

impl AugmentedQubo {
    /// Number of original asset variables.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Total number of binary variables, auxiliaries included.
    pub fn n_aug(&self) -> usize {
        self.diag.len()
    }

    /// Target cardinality encoded in the soft constraint.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Index of cubic term `t`'s auxiliary bit.
    pub fn aux_index(&self, t: usize) -> usize {
        self.n + t
    }

    /// Quadratized cubic terms, in auxiliary order.
    pub fn triples(&self) -> &[CubicTerm] {
        &self.triples
    }

    pub fn lambda_card(&self) -> f64 {
        self.lambda_card
    }

    pub fn lambda_ros(&self) -> f64 {
        self.lambda_ros
    }

    /// Constant `lambda_card * K^2` excluded from the matrix.
    pub fn constant_offset(&self) -> f64 {
        self.constant_offset
    }

    /// Largest absolute coefficient measured before penalty insertion,
    /// the base of the cardinality penalty scale.
    pub fn max_abs_pre_penalty(&self) -> f64 {
        self.max_abs_pre_penalty
    }

    /// Linear coefficients.
    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// Upper-triangular couplings, ascending, each stored once.
    pub fn pairs(&self) -> &[(u32, u32, f64)] {
        &self.pairs
    }

    /// Couplings incident to `i` (each pair appears in both rows).
    pub fn neighbors(&self, i: usize) -> &[(u32, f64)] {
        &self.adj[i]
    }

    /// Matrix energy `sum d_i s_i + sum_{i<j} q_ij s_i s_j`.
    pub fn matrix_energy(&self, state: &[bool]) -> f64 {
        assert_eq!(state.len(), self.n_aug(), "state length mismatch");
        let mut e = 0.0;
        for (&d, &s) in self.diag.iter().zip(state) {
            if s {
                e += d;
            }
        }
        for &(i, j, v) in &self.pairs {
            if state[i as usize] && state[j as usize] {
                e += v;
            }
        }
        e
    }

    /// Energy change of flipping variable `i` in `state`.
    pub fn flip_delta(&self, state: &[bool], i: usize) -> f64 {
        assert_eq!(state.len(), self.n_aug(), "state length mismatch");
        let mut field = self.diag[i];
        for &(j, v) in &self.adj[i] {
            if state[j as usize] {
                field += v;
            }
        }
        if state[i] {
            -field
        } else {
            field
        }
    }

    /// Restriction of an augmented state to the asset bits.
    pub fn decode(&self, state: &[bool]) -> Portfolio {
        assert_eq!(state.len(), self.n_aug(), "state length mismatch");
        Portfolio::from_bits(state[..self.n].to_vec())
    }

    /// Lifts a portfolio to the consistent augmented state
    /// (`w_t = x_i x_j` for every term).
    pub fn embed(&self, p: &Portfolio) -> Vec<bool> {
        assert_eq!(p.n(), self.n, "portfolio size mismatch");
        let mut state: Vec<bool> = p.bits().to_vec();
        state.reserve(self.triples.len());
        for t in &self.triples {
            state.push(p.is_selected(t.i) && p.is_selected(t.j));
        }
        state
    }

    /// Plain-text COO export: commented header (dimensions, penalty
    /// weights, constant, auxiliary map), then one `i j value` line per
    /// nonzero with diagonal entries as `i i`. Floats round-trip.
    pub fn export_coo(&self) -> String {
        let mut out = String::new();
        let nnz = self.diag.iter().filter(|v| **v != 0.0).count() + self.pairs.len();
        writeln!(out, "# augmented-qubo v1").unwrap();
        writeln!(out, "# n {} n_aug {} k {}", self.n, self.n_aug(), self.k).unwrap();
        writeln!(
            out,
            "# lambda_card {:?} lambda_ros {:?} constant {:?} max_abs_pre_penalty {:?}",
            self.lambda_card, self.lambda_ros, self.constant_offset, self.max_abs_pre_penalty
        )
        .unwrap();
        writeln!(out, "# entries {nnz}").unwrap();
        for (t, term) in self.triples.iter().enumerate() {
            writeln!(
                out,
                "# aux {} {} {} {} {:?}",
                self.aux_index(t),
                term.i,
                term.j,
                term.anchor,
                term.coeff
            )
            .unwrap();
        }
        for (i, &d) in self.diag.iter().enumerate() {
            if d != 0.0 {
                writeln!(out, "{i} {i} {d:?}").unwrap();
            }
        }
        for &(i, j, v) in &self.pairs {
            writeln!(out, "{i} {j} {v:?}").unwrap();
        }
        out
    }
}

/// Builds the augmented QUBO for `inst`.
///
/// Assembly order matters: the quadratic objective is folded first
/// (diagonal `Sigma_ii - mu_i`, couplings `2 Sigma_ij`), then the reduced
/// cubic couplings; the largest absolute coefficient is measured at that
/// point, the cardinality weight is set to
/// `card_multiplier * 4 * n * max_abs`, and only then are the Rosenberg and
/// cardinality penalties inserted.
pub fn build_augmented(inst: &PortfolioInstance, card_multiplier: f64) -> AugmentedQubo {
    assert!(
        card_multiplier > 0.0 && card_multiplier.is_finite(),
        "cardinality multiplier must be positive"
    );
    let n = inst.n();
    let triples = inst.cubic().to_vec();
    let n_aug = n + triples.len();
    let mut builder = QuboBuilder::new(n_aug);
    for i in 0..n {
        builder.add_linear(i, inst.cov(i, i) - inst.returns()[i]);
        for j in (i + 1)..n {
            let v = 2.0 * inst.cov(i, j);
            if v != 0.0 {
                builder.add_coupling(i, j, v);
            }
        }
    }
    for (t, term) in triples.iter().enumerate() {
        builder.add_coupling(term.anchor, n + t, term.coeff);
    }
    let max_abs = builder.max_abs_entry();
    let lambda_card = card_multiplier * 4.0 * n as f64 * max_abs;
    for (t, term) in triples.iter().enumerate() {
        let aux = n + t;
        builder.add_linear(aux, 3.0 * LAMBDA_ROSENBERG);
        builder.add_coupling(term.i, term.j, LAMBDA_ROSENBERG);
        builder.add_coupling(term.i, aux, -2.0 * LAMBDA_ROSENBERG);
        builder.add_coupling(term.j, aux, -2.0 * LAMBDA_ROSENBERG);
    }
    let k = inst.k() as f64;
    for i in 0..n {
        builder.add_linear(i, lambda_card * (1.0 - 2.0 * k));
        for j in (i + 1)..n {
            builder.add_coupling(i, j, 2.0 * lambda_card);
        }
    }
    let pairs: Vec<(u32, u32, f64)> =
        builder.pairs.iter().map(|(&(i, j), &v)| (i, j, v)).collect();
    let mut adj: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n_aug];
    for &(i, j, v) in &pairs {
        adj[i as usize].push((j, v));
        adj[j as usize].push((i, v));
    }
    for row in &mut adj {
        row.sort_unstable_by_key(|&(j, _)| j);
    }
    AugmentedQubo {
        n,
        k: inst.k(),
        diag: builder.diag,
        pairs,
        adj,
        triples,
        lambda_card,
        lambda_ros: LAMBDA_ROSENBERG,
        constant_offset: lambda_card * ((inst.k() * inst.k()) as f64),
        max_abs_pre_penalty: max_abs,
    }
}

/// Splits the matrix energy of `state` into objective and penalty parts.
///
/// `objective_part` uses the reduced cubic form (auxiliaries as they are,
/// consistent or not); `card_penalty` and `ros_penalty` are the modeled
/// soft constraints including their constants.
pub fn augmented_energy(
    qubo: &AugmentedQubo,
    inst: &PortfolioInstance,
    state: &[bool],
) -> EnergyBreakdown {
    assert_eq!(qubo.n, inst.n(), "model and instance disagree on n");
    assert_eq!(state.len(), qubo.n_aug(), "state length mismatch");
    let n = qubo.n;
    let x: Vec<f64> = state[..n].iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    let mut sx = vec![0.0; n];
    inst.cov_mul(&x, &mut sx);
    let mut objective = 0.0;
    for i in 0..n {
        objective += x[i] * (sx[i] - inst.returns()[i]);
    }
    for (t, term) in qubo.triples.iter().enumerate() {
        if state[qubo.aux_index(t)] && state[term.anchor] {
            objective += term.coeff;
        }
    }
    let card = state[..n].iter().filter(|&&b| b).count() as f64;
    let card_penalty = qubo.lambda_card * (card - qubo.k as f64) * (card - qubo.k as f64);
    let mut ros_penalty = 0.0;
    for (t, term) in qubo.triples.iter().enumerate() {
        let xi = state[term.i] as u8 as f64;
        let xj = state[term.j] as u8 as f64;
        let w = state[qubo.aux_index(t)] as u8 as f64;
        ros_penalty += qubo.lambda_ros * (xi * xj - 2.0 * xi * w - 2.0 * xj * w + 3.0 * w);
    }
    EnergyBreakdown {
        matrix_energy: qubo.matrix_energy(state),
        objective_part: objective,
        card_penalty,
        ros_penalty,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate_instance, InstanceParts};
    use crate::model::eval_selection;

    fn tiny() -> PortfolioInstance {
        PortfolioInstance::from_parts(InstanceParts {
            n: 3,
            k: 2,
            seed: 7,
            n_sectors: 1,
            alpha_cubic: 4.0,
            quad_scale: 0.1,
            covariance: vec![1.0, 0.3, 0.0, 0.3, 1.0, 0.1, 0.0, 0.1, 1.0],
            returns: vec![0.1, 0.2, 0.15],
            sector_of: vec![0, 0, 0],
            loadings: vec![1.0, 1.0, 1.0],
            cubic: vec![CubicTerm { i: 0, j: 1, anchor: 2, coeff: 0.8 }],
        })
        .expect("valid")
    }

    #[test]
    fn penalty_truth_table() {
        // Isolated penalty (zero objective coupling): energy over the
        // 8 states of (x_i, x_j, w) must be 0 when w = x_i x_j, else
        // lambda for one-bit errors and 3*lambda for w=1 over x=0.
        let lambda = 10.0;
        let mut b = QuboBuilder::new(3);
        let term = CubicTerm { i: 0, j: 1, anchor: 1, coeff: 0.0 };
        quadratize_term(&mut b, &term, 2, lambda).expect("first aux use");
        let energy = |s: [bool; 3]| {
            let mut e = 0.0;
            for i in 0..3 {
                if s[i] {
                    e += b.diag[i];
                }
            }
            for (&(i, j), &v) in &b.pairs {
                if s[i as usize] && s[j as usize] {
                    e += v;
                }
            }
            e
        };
        for xi in [false, true] {
            for xj in [false, true] {
                for w in [false, true] {
                    let e = energy([xi, xj, w]);
                    let expected = match (xi && xj, w) {
                        (true, true) | (false, false) => 0.0,
                        (false, true) => {
                            if xi || xj {
                                lambda
                            } else {
                                3.0 * lambda
                            }
                        }
                        (true, false) => lambda,
                    };
                    assert_eq!(e, expected, "state ({xi},{xj},{w})");
                }
            }
        }
    }

    #[test]
    fn duplicate_aux_is_rejected() {
        let mut b = QuboBuilder::new(6);
        let t1 = CubicTerm { i: 0, j: 1, anchor: 2, coeff: 1.0 };
        let t2 = CubicTerm { i: 1, j: 2, anchor: 0, coeff: 1.0 };
        quadratize_term(&mut b, &t1, 4, 10.0).expect("fresh aux");
        assert!(matches!(
            quadratize_term(&mut b, &t2, 4, 10.0),
            Err(QuadError::DuplicateAux(4))
        ));
        quadratize_term(&mut b, &t2, 5, 10.0).expect("other aux is free");
    }

    #[test]
    fn decomposition_identity_holds_on_all_states() {
        let inst = tiny();
        let qubo = build_augmented(&inst, 1.0);
        assert_eq!(qubo.n_aug(), 4);
        for bits in 0..16u32 {
            let state: Vec<bool> = (0..4).map(|b| bits >> b & 1 == 1).collect();
            let parts = augmented_energy(&qubo, &inst, &state);
            let reconstructed = parts.objective_part + parts.card_penalty + parts.ros_penalty
                - qubo.constant_offset();
            assert!(
                (parts.matrix_energy - reconstructed).abs()
                    <= 1e-9 * parts.matrix_energy.abs().max(1.0),
                "state {bits:04b}: {} vs {}",
                parts.matrix_energy,
                reconstructed
            );
        }
    }

    #[test]
    fn feasible_consistent_states_reduce_to_native() {
        let inst = tiny();
        let qubo = build_augmented(&inst, 1.0);
        for pair in [[0usize, 1], [0, 2], [1, 2]] {
            let p = Portfolio::from_indices(3, &pair);
            let state = qubo.embed(&p);
            let parts = augmented_energy(&qubo, &inst, &state);
            assert_eq!(parts.card_penalty, 0.0);
            assert_eq!(parts.ros_penalty, 0.0);
            let native = eval_selection(&inst, &p);
            let expected = native - qubo.constant_offset();
            assert!(
                (parts.matrix_energy - expected).abs() <= 1e-9 * expected.abs().max(1.0),
                "pair {pair:?}: {} vs {}",
                parts.matrix_energy,
                expected
            );
        }
    }

    #[test]
    fn flip_delta_matches_energy_difference() {
        let inst = generate_instance(20, 4, 21).expect("generate");
        let qubo = build_augmented(&inst, 1.0);
        let mut rng = crate::rng::seeded(2, 77);
        use rand::Rng;
        let mut state: Vec<bool> = (0..qubo.n_aug()).map(|_| rng.random::<f64>() < 0.3).collect();
        for _ in 0..200 {
            let i = rng.random_range(0..qubo.n_aug());
            let before = qubo.matrix_energy(&state);
            let predicted = qubo.flip_delta(&state, i);
            state[i] = !state[i];
            let after = qubo.matrix_energy(&state);
            assert!(
                (after - before - predicted).abs() <= 1e-9 * before.abs().max(1.0),
                "flip {i}: {} vs {}",
                predicted,
                after - before
            );
        }
    }

    #[test]
    fn penalty_scale_is_measured_before_penalties() {
        let inst = generate_instance(25, 5, 33).expect("generate");
        let qubo = build_augmented(&inst, 1.0);
        // The pre-penalty maximum must be reproducible from the instance:
        // max over |Sigma_ii - mu_i|, |2 Sigma_ij|, and cubic coefficients.
        let n = inst.n();
        let mut expected = 0.0_f64;
        for i in 0..n {
            expected = expected.max((inst.cov(i, i) - inst.returns()[i]).abs());
            for j in (i + 1)..n {
                expected = expected.max((2.0 * inst.cov(i, j)).abs());
            }
        }
        for t in inst.cubic() {
            expected = expected.max(t.coeff.abs());
        }
        assert_eq!(qubo.max_abs_pre_penalty(), expected);
        assert_eq!(qubo.lambda_card(), 4.0 * n as f64 * expected);
        assert_eq!(qubo.constant_offset(), qubo.lambda_card() * 25.0);
    }

    #[test]
    fn export_lists_header_aux_map_and_entries() {
        let inst = tiny();
        let qubo = build_augmented(&inst, 1.0);
        let text = qubo.export_coo();
        assert!(text.starts_with("# augmented-qubo v1\n"));
        assert!(text.contains("# n 3 n_aug 4 k 2"));
        assert!(text.contains("# aux 3 0 1 2"));
        let entries: Vec<&str> =
            text.lines().filter(|l| !l.starts_with('#') && !l.is_empty()).collect();
        let declared: usize = text
            .lines()
            .find(|l| l.starts_with("# entries "))
            .and_then(|l| l.rsplit(' ').next())
            .and_then(|v| v.parse().ok())
            .expect("entry count in header");
        assert_eq!(entries.len(), declared);
        // Every data line parses as (usize, usize, f64).
        for line in entries {
            let mut it = line.split_whitespace();
            let i: usize = it.next().unwrap().parse().unwrap();
            let j: usize = it.next().unwrap().parse().unwrap();
            let _v: f64 = it.next().unwrap().parse().unwrap();
            assert!(i <= j);
            assert!(it.next().is_none());
        }
    }
}
