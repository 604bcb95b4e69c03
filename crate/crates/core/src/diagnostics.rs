//! Decoded-feasibility diagnostics, exhaustive small-instance optima, and
//! random reference values.
//!
//! Penalty-encoded solvers report matrix energies that are meaningless on
//! their own: a state can sit low in the augmented landscape while its
//! decoded portfolio violates the cardinality constraint or carries
//! inconsistent auxiliaries. [`feasibility_record`] quantifies exactly
//! that, so solver comparisons can be made on decoded native objectives
//! instead of raw energies.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::PortfolioInstance;
use crate::model::{eval_native, eval_selection, Portfolio, SwapCache};
use crate::quad::{augmented_energy, AugmentedQubo};
use crate::rng::{seeded, stream};

/// Default number of draws for [`random_reference`].
pub const RANDOM_REFERENCE_DRAWS: usize = 1000;

/// Default combination-count cap for [`brute_force_optimum`].
pub const BRUTE_FORCE_CAP: u64 = 10_000_000;

/// Exact recomputation cadence for the incremental enumeration value.
const RESYNC_INTERVAL: u64 = 4096;

/// Failure cases of the diagnostics routines.
#[derive(Debug, Error)]
pub enum DiagError {
    /// The instance has too many feasible selections to enumerate.
    #[error("{0} candidate selections exceed the enumeration cap of {1}")]
    TooManyStates(u128, u64),
}

/// Decoded-feasibility audit of one augmented state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityRecord {
    /// Matrix energy of the augmented state (constant excluded).
    pub augmented_matrix_energy: f64,
    /// Native objective of the decoded asset bits, feasible or not.
    pub decoded_native_objective: f64,
    /// Number of selected asset bits.
    pub cardinality: usize,
    /// Absolute cardinality error `|cardinality - K|`.
    pub card_violation: usize,
    /// Auxiliaries set to 1 whose tracked pair is not fully selected.
    pub false_positive_count: usize,
    /// Auxiliaries set to 0 whose tracked pair is fully selected.
    pub false_negative_count: usize,
    /// Total inconsistent auxiliaries.
    pub aux_viol_count: usize,
    /// Inconsistent auxiliaries per quadratized term (0 when none exist).
    pub aux_viol_rate: f64,
    /// Penalty magnitude relative to the constant-corrected energy:
    /// `(|card| + |ros|) / |matrix_energy + constant|`, 0 when no penalty
    /// is active.
    pub penalty_fraction: f64,
}

impl FeasibilityRecord {
    /// True when the decoded portfolio meets the cardinality constraint.
    pub fn is_feasible(&self) -> bool {
        self.card_violation == 0
    }

    /// True when every auxiliary tracks its pair product.
    pub fn is_consistent(&self) -> bool {
        self.aux_viol_count == 0
    }
}

/// Audits an augmented state against the model it came from.
pub fn feasibility_record(
    qubo: &AugmentedQubo,
    inst: &PortfolioInstance,
    state: &[bool],
) -> FeasibilityRecord {
    let parts = augmented_energy(qubo, inst, state);
    let n = qubo.n();
    let x: Vec<f64> = state[..n].iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    let decoded_native = eval_native(inst, &x);
    let cardinality = state[..n].iter().filter(|&&b| b).count();
    let mut fp = 0_usize;
    let mut fn_ = 0_usize;
    for (t, term) in qubo.triples().iter().enumerate() {
        let pair = state[term.i] && state[term.j];
        let w = state[qubo.aux_index(t)];
        match (w, pair) {
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            _ => {}
        }
    }
    let violations = fp + fn_;
    let rate = if qubo.triples().is_empty() {
        0.0
    } else {
        violations as f64 / qubo.triples().len() as f64
    };
    let penalty_mass = parts.card_penalty.abs() + parts.ros_penalty.abs();
    let penalty_fraction = if penalty_mass == 0.0 {
        0.0
    } else {
        let denom = (parts.matrix_energy + qubo.constant_offset()).abs();
        penalty_mass / denom.max(f64::MIN_POSITIVE)
    };
    FeasibilityRecord {
        augmented_matrix_energy: parts.matrix_energy,
        decoded_native_objective: decoded_native,
        cardinality,
        card_violation: cardinality.abs_diff(qubo.k()),
        false_positive_count: fp,
        false_negative_count: fn_,
        aux_viol_count: violations,
        aux_viol_rate: rate,
        penalty_fraction,
    }
}

/// Outcome of exhaustive enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceResult {
    /// Optimal selection (the lexicographically smallest on exact ties).
    pub portfolio: Portfolio,
    /// Optimal native objective.
    pub value: f64,
    /// Selections visited; always the full binomial count.
    pub states: u64,
}

/// `n choose k`, saturating far above the enumeration cap.
fn binomial(n: u64, k: u64) -> u128 {
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 0..k {
        c = c.saturating_mul((n - i) as u128) / (i + 1) as u128;
        if c > u64::MAX as u128 {
            return u128::MAX;
        }
    }
    c
}

/// Exhaustive optimum with the default [`BRUTE_FORCE_CAP`].
pub fn brute_force_optimum(inst: &PortfolioInstance) -> Result<BruteForceResult, DiagError> {
    brute_force_optimum_capped(inst, BRUTE_FORCE_CAP)
}

/// Exhaustive optimum over all exact-cardinality selections.
///
/// Walks combinations in lexicographic order, moving between consecutive
/// selections by single-swap deltas (with periodic exact resynchronization
/// against accumulated rounding), and keeps the strictly best value, so
/// ties resolve to the lexicographically smallest selection. Errors when
/// the combination count exceeds `cap`.
pub fn brute_force_optimum_capped(
    inst: &PortfolioInstance,
    cap: u64,
) -> Result<BruteForceResult, DiagError> {
    let n = inst.n();
    let k = inst.k();
    let count = binomial(n as u64, k as u64);
    if count > cap as u128 {
        return Err(DiagError::TooManyStates(count, cap));
    }
    let mut combo: Vec<usize> = (0..k).collect();
    let first = Portfolio::from_indices(n, &combo);
    let mut cache = SwapCache::new(inst, &first);
    let mut value = eval_selection(inst, &first);
    let mut best_value = value;
    let mut best_combo = combo.clone();
    let mut states = 1_u64;
    loop {
        // Lexicographic successor: bump the rightmost index with headroom.
        let Some(pivot) = (0..k).rev().find(|&i| combo[i] < n - k + i) else {
            break;
        };
        let old = combo.clone();
        combo[pivot] += 1;
        for j in pivot + 1..k {
            combo[j] = combo[j - 1] + 1;
        }
        // Decompose the transition into single swaps: elements leaving the
        // selection pair up with elements entering it (both ascending).
        let outs = old.iter().filter(|v| !combo.contains(v));
        let ins = combo.iter().filter(|v| !old.contains(v));
        for (&o, &a) in outs.zip(ins) {
            value += cache.delta(o, a);
            cache.apply(o, a);
        }
        states += 1;
        if states % RESYNC_INTERVAL == 0 {
            value = eval_selection(inst, &cache.portfolio());
        }
        if value < best_value {
            // Candidate record: confirm with an exact evaluation so the
            // stored optimum carries no incremental drift.
            let exact = eval_selection(inst, &cache.portfolio());
            value = exact;
            if exact < best_value {
                best_value = exact;
                best_combo = combo.clone();
            }
        }
    }
    Ok(BruteForceResult {
        portfolio: Portfolio::from_indices(n, &best_combo),
        value: best_value,
        states,
    })
}

/// Best native objective among `trials` uniform exact-cardinality
/// selections, on a dedicated reproducible stream.
///
/// Use [`RANDOM_REFERENCE_DRAWS`] for the standard reference floor.
pub fn random_reference(inst: &PortfolioInstance, trials: usize, seed: u64) -> f64 {
    let mut rng = seeded(seed, stream::REFERENCE);
    let mut best = f64::INFINITY;
    for _ in 0..trials {
        let idx = rand::seq::index::sample(&mut rng, inst.n(), inst.k()).into_vec();
        let p = Portfolio::from_indices(inst.n(), &idx);
        best = best.min(eval_selection(inst, &p));
    }
    best
}
