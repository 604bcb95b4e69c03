//! Quadratic baseline solvers over the augmented QUBO: simulated
//! annealing and tabu search, both with incremental local-field updates.
//!
//! Both solvers start from the all-zeros state, meter their budget either
//! in deterministic iterations (annealing: sweeps; tabu: flips) or in
//! wall-clock seconds, and record best-state snapshots at the same budget
//! fractions the hybrid solver samples, so decoded-feasibility trajectories
//! can be compared like for like.

use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::budget::{Budget, BudgetError};
use crate::hamd::TTT_FRACTIONS;
use crate::quad::AugmentedQubo;
use crate::rng::{seeded, stream};

/// Failure cases of the baseline solvers.
#[derive(Debug, Error)]
pub enum BaselineError {
    /// The budget is unusable.
    #[error(transparent)]
    Budget(#[from] BudgetError),
}

/// Simulated-annealing parameters. Temperatures default to automatic
/// calibration from sampled flip costs at the initial state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnealConfig {
    /// Starting temperature; `None` calibrates one.
    pub t_start: Option<f64>,
    /// Final temperature; `None` calibrates one.
    pub t_end: Option<f64>,
    /// Flip costs sampled for calibration.
    pub calibration_samples: usize,
}

impl Default for AnnealConfig {
    fn default() -> Self {
        Self { t_start: None, t_end: None, calibration_samples: 100 }
    }
}

/// Tabu-search parameters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TabuConfig {
    /// Moves a flipped variable stays forbidden; `None` uses
    /// `max(10, n_aug / 50)`.
    pub tenure: Option<u64>,
}

/// Best-so-far snapshot at a budget fraction.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineCheckpoint {
    /// Fraction of the budget consumed, one of the shared sample points.
    pub fraction: f64,
    /// Best matrix energy found by that point.
    pub matrix_energy: f64,
    /// Augmented state achieving it, for later decoding.
    pub state: Vec<bool>,
}

/// Outcome of a baseline run.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineTrace {
    /// One snapshot per shared budget fraction, nonincreasing in energy.
    pub checkpoints: Vec<BaselineCheckpoint>,
    /// Best matrix energy found.
    pub best_energy: f64,
    /// Augmented state achieving it.
    pub best_state: Vec<bool>,
    /// Iterations performed (sweeps for annealing, flips for tabu).
    pub iterations: u64,
}

/// Current state plus per-variable local fields, kept incrementally.
///
/// `fields[i]` is the energy cost of setting bit `i` given the others, so
/// a flip's energy change is `fields[i]` when turning on and `-fields[i]`
/// when turning off, and a flip touches only its adjacency row.
struct FieldState<'a> {
    qubo: &'a AugmentedQubo,
    state: Vec<bool>,
    fields: Vec<f64>,
    energy: f64,
}

impl<'a> FieldState<'a> {
    fn zeros(qubo: &'a AugmentedQubo) -> Self {
        Self {
            qubo,
            state: vec![false; qubo.n_aug()],
            fields: qubo.diag().to_vec(),
            energy: 0.0,
        }
    }

    #[inline]
    fn delta(&self, i: usize) -> f64 {
        if self.state[i] {
            -self.fields[i]
        } else {
            self.fields[i]
        }
    }

    fn flip(&mut self, i: usize) {
        self.energy += self.delta(i);
        self.state[i] = !self.state[i];
        let sign = if self.state[i] { 1.0 } else { -1.0 };
        for &(j, w) in self.qubo.neighbors(i) {
            self.fields[j as usize] += sign * w;
        }
    }
}

/// Records checkpoints as budget fractions are crossed.
struct Recorder {
    checkpoints: Vec<BaselineCheckpoint>,
    next: usize,
}

impl Recorder {
    fn new() -> Self {
        Self { checkpoints: Vec::with_capacity(TTT_FRACTIONS.len()), next: 0 }
    }

    fn observe(&mut self, fraction: f64, best_energy: f64, best_state: &[bool]) {
        while self.next < TTT_FRACTIONS.len() && fraction + 1e-12 >= TTT_FRACTIONS[self.next] {
            self.checkpoints.push(BaselineCheckpoint {
                fraction: TTT_FRACTIONS[self.next],
                matrix_energy: best_energy,
                state: best_state.to_vec(),
            });
            self.next += 1;
        }
    }

    fn flush(&mut self, best_energy: f64, best_state: &[bool]) {
        self.observe(1.0 + 1e-9, best_energy, best_state);
    }
}

/// Progress meter over either budget kind.
enum Meter {
    Iterations(u64),
    Wall { start: Instant, total: f64 },
}

impl Meter {
    fn new(budget: Budget) -> Self {
        match budget {
            Budget::Iterations(n) => Meter::Iterations(n),
            Budget::WallSecs(s) => Meter::Wall { start: Instant::now(), total: s },
        }
    }

    fn done(&self, iterations: u64) -> bool {
        match self {
            Meter::Iterations(n) => iterations >= *n,
            Meter::Wall { start, total } => start.elapsed().as_secs_f64() >= *total,
        }
    }

    /// Budget fraction consumed after `iterations` completed iterations.
    fn fraction(&self, iterations: u64) -> f64 {
        match self {
            Meter::Iterations(n) => iterations as f64 / *n as f64,
            Meter::Wall { start, total } => start.elapsed().as_secs_f64() / total,
        }
    }

    /// Schedule progress in `[0, 1]` for the iteration about to run.
    fn progress(&self, iterations: u64) -> f64 {
        match self {
            Meter::Iterations(n) => {
                if *n <= 1 {
                    1.0
                } else {
                    iterations as f64 / (*n - 1) as f64
                }
            }
            Meter::Wall { start, total } => (start.elapsed().as_secs_f64() / total).min(1.0),
        }
    }
}

/// Geometric temperature between calibrated endpoints.
fn temperature(t0: f64, t1: f64, progress: f64) -> f64 {
    t0 * (t1 / t0).powf(progress)
}

/// Calibrates start and end temperatures from flip costs at the current
/// state: the start temperature accepts a mean uphill move with
/// probability 0.8, the end temperature with probability 0.01. Falls back
/// to the mean absolute cost when no sampled move is uphill, and to 1.0
/// when every sampled cost is zero.
fn calibrate<R: Rng + ?Sized>(fs: &FieldState, samples: usize, rng: &mut R) -> (f64, f64) {
    let mut positive = Vec::new();
    let mut magnitudes = Vec::new();
    for _ in 0..samples {
        let i = rng.random_range(0..fs.qubo.n_aug());
        let d = fs.delta(i);
        magnitudes.push(d.abs());
        if d > 0.0 {
            positive.push(d);
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let scale = if !positive.is_empty() {
        mean(&positive)
    } else if !magnitudes.is_empty() && magnitudes.iter().any(|&m| m > 0.0) {
        mean(&magnitudes)
    } else {
        1.0
    };
    let t0 = scale / (1.0_f64 / 0.8).ln();
    let t1 = scale / 100.0_f64.ln();
    (t0, t1)
}

/// Simulated annealing over the augmented model.
///
/// Starts from all zeros; one iteration is a sweep of `n_aug` uniformly
/// random single-flip Metropolis proposals at the sweep's temperature.
/// `Budget::Iterations` counts sweeps. Deterministic for a fixed seed and
/// iteration budget.
pub fn sa_solve(
    qubo: &AugmentedQubo,
    cfg: &AnnealConfig,
    budget: Budget,
    seed: u64,
) -> Result<BaselineTrace, BaselineError> {
    let budget = budget.validate()?;
    let meter = Meter::new(budget);
    let mut rng = seeded(seed, stream::ANNEAL);
    let mut fs = FieldState::zeros(qubo);
    let (auto_t0, auto_t1) = calibrate(&fs, cfg.calibration_samples.max(1), &mut rng);
    let t0 = cfg.t_start.unwrap_or(auto_t0).max(f64::MIN_POSITIVE);
    let t1 = cfg.t_end.unwrap_or(auto_t1).clamp(f64::MIN_POSITIVE, t0);
    let mut best_energy = fs.energy;
    let mut best_state = fs.state.clone();
    let mut recorder = Recorder::new();
    let mut sweeps = 0_u64;
    while !meter.done(sweeps) {
        let t = temperature(t0, t1, meter.progress(sweeps));
        for _ in 0..qubo.n_aug() {
            let i = rng.random_range(0..qubo.n_aug());
            let d = fs.delta(i);
            if d <= 0.0 || rng.random::<f64>() < (-d / t).exp() {
                fs.flip(i);
                if fs.energy < best_energy {
                    best_energy = fs.energy;
                    best_state.copy_from_slice(&fs.state);
                }
            }
        }
        sweeps += 1;
        recorder.observe(meter.fraction(sweeps), best_energy, &best_state);
    }
    recorder.flush(best_energy, &best_state);
    Ok(BaselineTrace {
        checkpoints: recorder.checkpoints,
        best_energy,
        best_state,
        iterations: sweeps,
    })
}

/// Tabu search over the augmented model.
///
/// Starts from all zeros; every iteration flips the lowest-cost non-tabu
/// variable (ties toward the lowest index), always moving even uphill.
/// A tabu flip is still taken when it would beat the best energy seen
/// (aspiration), and when every variable is tabu the overall best flip is
/// taken regardless. `Budget::Iterations` counts flips. The search is
/// fully deterministic.
pub fn tabu_solve(
    qubo: &AugmentedQubo,
    cfg: &TabuConfig,
    budget: Budget,
) -> Result<BaselineTrace, BaselineError> {
    let budget = budget.validate()?;
    let meter = Meter::new(budget);
    let n_aug = qubo.n_aug();
    let tenure = cfg.tenure.unwrap_or_else(|| (n_aug as u64 / 50).max(10));
    let mut fs = FieldState::zeros(qubo);
    let mut tabu_until = vec![0_u64; n_aug];
    let mut best_energy = fs.energy;
    let mut best_state = fs.state.clone();
    let mut recorder = Recorder::new();
    let mut flips = 0_u64;
    while !meter.done(flips) {
        let mut chosen: Option<(usize, f64)> = None;
        let mut fallback: Option<(usize, f64)> = None;
        for i in 0..n_aug {
            let d = fs.delta(i);
            if fallback.map_or(true, |(_, fd)| d < fd) {
                fallback = Some((i, d));
            }
            let tabu = tabu_until[i] > flips;
            let aspirates = fs.energy + d < best_energy;
            if (!tabu || aspirates) && chosen.map_or(true, |(_, cd)| d < cd) {
                chosen = Some((i, d));
            }
        }
        let (i, _) = chosen.or(fallback).expect("augmented model has variables");
        fs.flip(i);
        tabu_until[i] = flips + 1 + tenure;
        if fs.energy < best_energy {
            best_energy = fs.energy;
            best_state.copy_from_slice(&fs.state);
        }
        flips += 1;
        recorder.observe(meter.fraction(flips), best_energy, &best_state);
    }
    recorder.flush(best_energy, &best_state);
    Ok(BaselineTrace {
        checkpoints: recorder.checkpoints,
        best_energy,
        best_state,
        iterations: flips,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::generate_instance;
    use crate::quad::build_augmented;

    fn small_qubo() -> AugmentedQubo {
        let inst = generate_instance(20, 4, 17).expect("generate");
        build_augmented(&inst, 1.0)
    }

    #[test]
    fn field_state_tracks_energy_exactly() {
        let qubo = small_qubo();
        let mut fs = FieldState::zeros(&qubo);
        let mut rng = seeded(1, 70);
        for _ in 0..300 {
            let i = rng.random_range(0..qubo.n_aug());
            let predicted = fs.energy + fs.delta(i);
            fs.flip(i);
            assert!((fs.energy - predicted).abs() < 1e-9);
        }
        let direct = qubo.matrix_energy(&fs.state);
        assert!(
            (fs.energy - direct).abs() <= 1e-9 * direct.abs().max(1.0),
            "incremental {} vs direct {}",
            fs.energy,
            direct
        );
    }

    #[test]
    fn annealing_finds_negative_energy_and_reports_full_trace() {
        let qubo = small_qubo();
        let trace =
            sa_solve(&qubo, &AnnealConfig::default(), Budget::Iterations(50), 42).expect("run");
        assert_eq!(trace.iterations, 50);
        assert_eq!(trace.checkpoints.len(), TTT_FRACTIONS.len());
        for (c, f) in trace.checkpoints.iter().zip(TTT_FRACTIONS) {
            assert_eq!(c.fraction, f);
            assert_eq!(c.state.len(), qubo.n_aug());
        }
        for w in trace.checkpoints.windows(2) {
            assert!(w[1].matrix_energy <= w[0].matrix_energy);
        }
        // Selecting assets is heavily rewarded by the negative diagonal, so
        // any reasonable run beats the empty state.
        assert!(trace.best_energy < 0.0);
        assert!(
            (qubo.matrix_energy(&trace.best_state) - trace.best_energy).abs()
                <= 1e-9 * trace.best_energy.abs().max(1.0)
        );
    }

    #[test]
    fn annealing_is_deterministic_under_iteration_budget() {
        let qubo = small_qubo();
        let a = sa_solve(&qubo, &AnnealConfig::default(), Budget::Iterations(30), 5).expect("run");
        let b = sa_solve(&qubo, &AnnealConfig::default(), Budget::Iterations(30), 5).expect("run");
        assert_eq!(a, b);
        let c = sa_solve(&qubo, &AnnealConfig::default(), Budget::Iterations(30), 6).expect("run");
        assert!(a.best_state != c.best_state || a.best_energy != c.best_energy);
    }

    #[test]
    fn tabu_is_deterministic_and_always_moves() {
        let qubo = small_qubo();
        let a = tabu_solve(&qubo, &TabuConfig::default(), Budget::Iterations(2000)).expect("run");
        let b = tabu_solve(&qubo, &TabuConfig::default(), Budget::Iterations(2000)).expect("run");
        assert_eq!(a, b);
        assert_eq!(a.iterations, 2000);
        assert!(a.best_energy < 0.0);
        assert!(
            (qubo.matrix_energy(&a.best_state) - a.best_energy).abs()
                <= 1e-9 * a.best_energy.abs().max(1.0)
        );
    }

    #[test]
    fn rejects_nonpositive_budgets() {
        let qubo = small_qubo();
        assert!(sa_solve(&qubo, &AnnealConfig::default(), Budget::Iterations(0), 1).is_err());
        assert!(tabu_solve(&qubo, &TabuConfig::default(), Budget::WallSecs(-1.0)).is_err());
    }
}
