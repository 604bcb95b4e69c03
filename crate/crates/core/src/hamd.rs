//! Hybrid annealed molecular dynamics over the relaxed hypercube, with
//! top-K snapping, swap-descent polishing, and an optional iterated
//! local-search refinement phase.
//!
//! The continuous phase integrates damped inertial dynamics on the
//! effective energy (native objective plus a binarizing double-well whose
//! weight ramps linearly from 0 to 1 over the phase). A curvature-derived
//! transverse force, kept exactly orthogonal to the gradient, nudges
//! trajectories across saddle regions without fighting descent. Positions
//! bounce off the box walls with restitution, trajectories restart on
//! stall or on a hard interval, and snapshots of the relaxed state are
//! projected to exact-cardinality portfolios (optionally polished by
//! steepest swap descent). The refinement phase perturbs the incumbent
//! (two assets out, two in), re-polishes, and keeps strict improvements.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::budget::{Budget, BudgetError};
use crate::instance::PortfolioInstance;
use crate::model::{
    effective_energy_and_gradient, eval_selection, hessian_vector_into, EnergyParams, Portfolio,
    SwapCache,
};
use crate::rng::{seeded, stream};
use rand::Rng;

/// Budget fractions at which the incumbent objective is sampled.
pub const TTT_FRACTIONS: [f64; 5] = [0.10, 0.25, 0.50, 0.75, 1.00];

/// Safety cap on swap-descent iterations per polish call. Each swap
/// strictly improves the objective, so descent terminates on its own;
/// the cap only guards against pathological instances.
const MAX_POLISH_SWAPS: usize = 100_000;

/// Pipeline variant, from bare relaxation to the full hybrid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HamdMode {
    /// Single trajectory, no restarts, no polish, no refinement; the
    /// relaxed state is snapped periodically for observation only.
    Continuous,
    /// Batched trajectories with restarts; snapshots are projected to
    /// exact cardinality but never polished.
    Projected,
    /// As `Projected`, plus steepest swap descent on every snapshot.
    Polished,
    /// As `Polished`, plus an iterated local-search refinement phase on
    /// the tail of the budget.
    Full,
}

impl HamdMode {
    /// Stable lowercase name used in CLI arguments and result records.
    pub fn name(self) -> &'static str {
        match self {
            HamdMode::Continuous => "cont",
            HamdMode::Projected => "proj",
            HamdMode::Polished => "polish",
            HamdMode::Full => "full",
        }
    }

    fn polishes_snapshots(self) -> bool {
        matches!(self, HamdMode::Polished | HamdMode::Full)
    }
}

impl std::str::FromStr for HamdMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cont" | "continuous" => Ok(HamdMode::Continuous),
            "proj" | "projected" => Ok(HamdMode::Projected),
            "polish" | "polished" => Ok(HamdMode::Polished),
            "full" => Ok(HamdMode::Full),
            other => Err(format!("unknown mode `{other}` (expected cont|proj|polish|full)")),
        }
    }
}

/// Tunable parameters of the hybrid pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HamdConfig {
    /// Pipeline variant.
    pub mode: HamdMode,
    /// Number of parallel trajectories (forced to 1 in continuous mode).
    pub batch: usize,
    /// Fraction of the budget reserved for refinement in [`HamdMode::Full`].
    pub refine_fraction: f64,
    /// Velocity damping per step, in `[0, 1]`.
    pub damping: f64,
    /// Integration step size.
    pub dt: f64,
    /// Weight of the transverse force in the velocity update.
    pub zeta: f64,
    /// Regularizer for norm ratios in the transverse force.
    pub epsilon: f64,
    /// Velocity retention factor on wall bounces, in `(0, 1]`.
    pub restitution: f64,
    /// Per-coordinate gradient clip magnitude.
    pub grad_clip: f64,
    /// Steps without relative improvement before a trajectory restarts.
    pub stall_steps: u64,
    /// Relative improvement threshold for stall detection.
    pub stall_tol: f64,
    /// Snapshot cadence (in steps) for continuous-mode observation.
    pub snap_interval: u64,
}

impl Default for HamdConfig {
    fn default() -> Self {
        Self {
            mode: HamdMode::Full,
            batch: 32,
            refine_fraction: 0.20,
            damping: 0.1,
            dt: 0.05,
            zeta: 1.0,
            epsilon: 1e-9,
            restitution: 0.5,
            grad_clip: 1e3,
            stall_steps: 200,
            stall_tol: 1e-6,
            snap_interval: 100,
        }
    }
}

impl HamdConfig {
    /// Checks every field for usable values.
    pub fn validate(&self) -> Result<(), SolveError> {
        let bad = |msg: &str| Err(SolveError::InvalidConfig(msg.to_string()));
        if self.batch == 0 {
            return bad("batch must be at least 1");
        }
        if !(0.0..1.0).contains(&self.refine_fraction) {
            return bad("refine_fraction must lie in [0, 1)");
        }
        if !(0.0..=1.0).contains(&self.damping) {
            return bad("damping must lie in [0, 1]");
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt must be positive and finite");
        }
        if !self.zeta.is_finite() || self.zeta < 0.0 {
            return bad("zeta must be nonnegative and finite");
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad("epsilon must be positive and finite");
        }
        if !(self.restitution > 0.0 && self.restitution <= 1.0) {
            return bad("restitution must lie in (0, 1]");
        }
        if !(self.grad_clip > 0.0) {
            return bad("grad_clip must be positive");
        }
        if self.stall_steps == 0 {
            return bad("stall_steps must be at least 1");
        }
        if !(self.stall_tol > 0.0 && self.stall_tol.is_finite()) {
            return bad("stall_tol must be positive and finite");
        }
        if self.snap_interval == 0 {
            return bad("snap_interval must be at least 1");
        }
        Ok(())
    }
}

/// Failure cases of [`solve`].
#[derive(Debug, Error)]
pub enum SolveError {
    /// A configuration field is out of range.
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    /// The budget is unusable.
    #[error(transparent)]
    Budget(#[from] BudgetError),
}

/// Incumbent objective sampled at a budget fraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    /// Fraction of the budget consumed, one of [`TTT_FRACTIONS`].
    pub fraction: f64,
    /// Best exact-cardinality objective found by that point.
    pub objective: f64,
}

/// Outcome of a solver run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    /// Incumbent objective at each of [`TTT_FRACTIONS`], nonincreasing.
    pub samples: Vec<TracePoint>,
    /// Best objective found.
    pub best_objective: f64,
    /// Best portfolio found (always exact cardinality).
    pub portfolio: Portfolio,
    /// Trajectory restarts performed.
    pub restarts: u64,
    /// Refinement iterations performed.
    pub ils_steps: u64,
    /// Continuous-phase batch steps performed.
    pub steps: u64,
}

/// Scratch buffers reused across dynamics steps.
pub struct StepScratch {
    grad: Vec<f64>,
    curv: Vec<f64>,
    force: Vec<f64>,
}

impl StepScratch {
    /// Allocates scratch for dimension `n`.
    pub fn new(n: usize) -> Self {
        Self { grad: vec![0.0; n], curv: vec![0.0; n], force: vec![0.0; n] }
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Curvature force projected orthogonal to the gradient, written to `out`.
///
/// The raw force is `alpha * (h - (<h,g>/(|g|^2 + eps)) g)` with
/// `alpha = min(1, |g| / (|h| + eps))`, followed by one exact
/// Gram-Schmidt pass against `g` so that the result's cosine with the
/// gradient is below 1e-8 whenever `|g| > 1e-12`. At critical points
/// (`g = 0`) the force vanishes because `alpha` does.
pub fn transverse_force(grad: &[f64], curv: &[f64], epsilon: f64, out: &mut [f64]) {
    assert_eq!(grad.len(), curv.len(), "transverse force length mismatch");
    assert_eq!(grad.len(), out.len(), "transverse force output mismatch");
    let g2 = dot(grad, grad);
    let gn = g2.sqrt();
    let hn = dot(curv, curv).sqrt();
    let alpha = (gn / (hn + epsilon)).min(1.0);
    let coeff = dot(curv, grad) / (g2 + epsilon);
    for ((o, &h), &g) in out.iter_mut().zip(curv).zip(grad) {
        *o = alpha * (h - coeff * g);
    }
    if g2 > 0.0 {
        let residual = dot(out, grad) / g2;
        for (o, &g) in out.iter_mut().zip(grad) {
            *o -= residual * g;
        }
    }
}

/// Reflects one coordinate back into `[0, 1]`, damping both the overshoot
/// and the velocity by the restitution factor, repeating until inside.
pub fn reflect_into_box(x: &mut f64, v: &mut f64, restitution: f64) {
    while *x < 0.0 || *x > 1.0 {
        if *x > 1.0 {
            *x = 1.0 - restitution * (*x - 1.0);
        } else {
            *x = -restitution * *x;
        }
        *v = -restitution * *v;
    }
}

/// One damped inertial step with transverse deflection and wall bounces.
///
/// Returns the effective energy at the pre-step position. The gradient is
/// clipped per coordinate to `grad_clip` before any use.
pub fn dynamics_step(
    inst: &PortfolioInstance,
    cfg: &HamdConfig,
    beta: f64,
    x: &mut [f64],
    v: &mut [f64],
    scratch: &mut StepScratch,
) -> f64 {
    let params = EnergyParams { beta };
    let energy = effective_energy_and_gradient(inst, x, params, &mut scratch.grad);
    for g in &mut scratch.grad {
        *g = g.clamp(-cfg.grad_clip, cfg.grad_clip);
    }
    hessian_vector_into(inst, x, v, params, &mut scratch.curv);
    transverse_force(&scratch.grad, &scratch.curv, cfg.epsilon, &mut scratch.force);
    let keep = 1.0 - cfg.damping;
    for i in 0..x.len() {
        v[i] = keep * v[i] + cfg.dt * (-scratch.grad[i] + cfg.zeta * scratch.force[i]);
        x[i] += cfg.dt * v[i];
        reflect_into_box(&mut x[i], &mut v[i], cfg.restitution);
    }
    energy
}

/// Projects a relaxed state to the `k` largest coordinates (ties broken
/// toward lower indices).
pub fn project_topk(x: &[f64], k: usize) -> Portfolio {
    assert!(k <= x.len(), "cannot select {k} assets out of {}", x.len());
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_unstable_by(|&a, &b| x[b].total_cmp(&x[a]).then(a.cmp(&b)));
    Portfolio::from_indices(x.len(), &order[..k])
}

/// Steepest-descent swap polish to a 1-swap local minimum.
///
/// Repeatedly applies the best strictly improving swap (ties toward the
/// lexicographically smallest out/in pair) until none exists or `max_swaps`
/// is reached. Returns the polished portfolio, its freshly re-evaluated
/// objective, and the number of swaps applied.
pub fn kswap_polish(
    inst: &PortfolioInstance,
    start: &Portfolio,
    max_swaps: usize,
) -> (Portfolio, f64, usize) {
    let mut cache = SwapCache::new(inst, start);
    let mut swaps = 0;
    while swaps < max_swaps {
        match cache.best_swap() {
            Some((out_idx, in_idx, _)) => {
                cache.apply(out_idx, in_idx);
                swaps += 1;
            }
            None => break,
        }
    }
    let polished = cache.portfolio();
    let value = eval_selection(inst, &polished);
    (polished, value, swaps)
}

/// Random 2-out/2-in perturbation preserving cardinality.
///
/// Requires at least two selected and two unselected assets.
pub fn perturb<R: Rng + ?Sized>(p: &Portfolio, rng: &mut R) -> Portfolio {
    let selected = p.indices();
    let unselected: Vec<usize> = (0..p.n()).filter(|&i| !p.is_selected(i)).collect();
    assert!(selected.len() >= 2, "perturbation needs at least two selected assets");
    assert!(unselected.len() >= 2, "perturbation needs at least two unselected assets");
    let outs = rand::seq::index::sample(rng, selected.len(), 2);
    let ins = rand::seq::index::sample(rng, unselected.len(), 2);
    let mut q = p.clone();
    q.swap(selected[outs.index(0)], unselected[ins.index(0)]);
    q.swap(selected[outs.index(1)], unselected[ins.index(1)]);
    q
}

/// How the run's budget is metered and split across phases.
enum Driver {
    /// Deterministic: `cont` outer batch steps, then `total - cont`
    /// refinement iterations.
    Iterations { cont: u64, total: u64 },
    /// Wall clock: the continuous phase owns `cont` seconds of `total`.
    Wall { start: Instant, cont: f64, total: f64 },
}

impl Driver {
    fn new(budget: Budget, cfg: &HamdConfig) -> Self {
        let split = if cfg.mode == HamdMode::Full { 1.0 - cfg.refine_fraction } else { 1.0 };
        match budget {
            Budget::Iterations(n) => {
                let cont = ((n as f64) * split).ceil() as u64;
                Driver::Iterations { cont: cont.min(n), total: n }
            }
            Budget::WallSecs(s) => {
                Driver::Wall { start: Instant::now(), cont: s * split, total: s }
            }
        }
    }

    fn continuous_done(&self, steps: u64) -> bool {
        match self {
            Driver::Iterations { cont, .. } => steps >= *cont,
            Driver::Wall { start, cont, .. } => start.elapsed().as_secs_f64() >= *cont,
        }
    }

    fn refinement_done(&self, steps: u64, ils_steps: u64) -> bool {
        match self {
            Driver::Iterations { total, .. } => steps + ils_steps >= *total,
            Driver::Wall { start, total, .. } => start.elapsed().as_secs_f64() >= *total,
        }
    }

    /// Double-well weight for the upcoming step, ramping 0 -> 1 across the
    /// continuous window.
    fn beta(&self, steps: u64) -> f64 {
        match self {
            Driver::Iterations { cont, .. } => {
                if *cont <= 1 {
                    1.0
                } else {
                    steps as f64 / (*cont - 1) as f64
                }
            }
            Driver::Wall { start, cont, .. } => (start.elapsed().as_secs_f64() / cont).min(1.0),
        }
    }

    fn fraction(&self, steps: u64, ils_steps: u64) -> f64 {
        match self {
            Driver::Iterations { total, .. } => (steps + ils_steps) as f64 / *total as f64,
            Driver::Wall { start, total, .. } => start.elapsed().as_secs_f64() / *total,
        }
    }

    /// Hard restart interval: a third of the continuous window.
    fn restart_interval_due(&self, steps_since: u64, elapsed_since_mark: f64) -> bool {
        match self {
            Driver::Iterations { cont, .. } => steps_since >= (*cont / 3).max(1),
            Driver::Wall { cont, .. } => elapsed_since_mark >= cont / 3.0,
        }
    }

    fn now(&self) -> f64 {
        match self {
            Driver::Iterations { .. } => 0.0,
            Driver::Wall { start, .. } => start.elapsed().as_secs_f64(),
        }
    }
}

/// One relaxed trajectory with its stall bookkeeping.
struct Trajectory {
    x: Vec<f64>,
    v: Vec<f64>,
    rng: rand_chacha::ChaCha8Rng,
    best_energy: f64,
    steps_since_improve: u64,
    steps_since_restart: u64,
    time_mark: f64,
    restarts: u64,
}

impl Trajectory {
    fn fresh(n: usize, seed: u64, index: usize, now: f64) -> Self {
        let mut rng = seeded(seed, stream::TRAJECTORY + index as u64);
        let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        Self {
            x,
            v: vec![0.0; n],
            rng,
            best_energy: f64::INFINITY,
            steps_since_improve: 0,
            steps_since_restart: 0,
            time_mark: now,
            restarts: 0,
        }
    }

    fn observe_energy(&mut self, energy: f64, tol: f64) {
        let margin = tol * self.best_energy.abs().max(1.0);
        if energy < self.best_energy - margin {
            self.best_energy = energy;
            self.steps_since_improve = 0;
        } else {
            self.steps_since_improve += 1;
        }
        self.steps_since_restart += 1;
    }

    /// Re-seeds position and velocity after a restart: even restarts jitter
    /// the incumbent portfolio, odd restarts draw a fresh uniform point.
    fn reinitialize(&mut self, incumbent: &Portfolio, now: f64) {
        let near_incumbent = self.restarts % 2 == 0;
        for (i, xi) in self.x.iter_mut().enumerate() {
            *xi = if near_incumbent {
                let bit: f64 = if incumbent.is_selected(i) { 1.0 } else { 0.0 };
                (bit + self.rng.random_range(-0.2..0.2)).clamp(0.0, 1.0)
            } else {
                self.rng.random::<f64>()
            };
        }
        self.v.iter_mut().for_each(|vi| *vi = 0.0);
        self.best_energy = f64::INFINITY;
        self.steps_since_improve = 0;
        self.steps_since_restart = 0;
        self.time_mark = now;
        self.restarts += 1;
    }
}

struct Engine<'a> {
    inst: &'a PortfolioInstance,
    cfg: &'a HamdConfig,
    driver: Driver,
    trajectories: Vec<Trajectory>,
    scratch: StepScratch,
    incumbent_value: f64,
    incumbent: Portfolio,
    samples: Vec<TracePoint>,
    next_fraction: usize,
    steps: u64,
    restarts: u64,
    ils_steps: u64,
}

impl<'a> Engine<'a> {
    /// Projects trajectory `idx` to exact cardinality (polishing when the
    /// mode calls for it) and offers the result to the incumbent.
    fn snapshot(&mut self, idx: usize, polish: bool) {
        let raw = project_topk(&self.trajectories[idx].x, self.inst.k());
        let (portfolio, value) = if polish {
            let (p, val, _) = kswap_polish(self.inst, &raw, MAX_POLISH_SWAPS);
            (p, val)
        } else {
            let val = eval_selection(self.inst, &raw);
            (raw, val)
        };
        self.offer(portfolio, value);
    }

    fn offer(&mut self, portfolio: Portfolio, value: f64) {
        if value < self.incumbent_value {
            self.incumbent_value = value;
            self.incumbent = portfolio;
        }
    }

    /// Records any budget fractions crossed since the last check.
    fn record_crossings(&mut self) {
        let frac = self.driver.fraction(self.steps, self.ils_steps);
        while self.next_fraction < TTT_FRACTIONS.len()
            && frac + 1e-12 >= TTT_FRACTIONS[self.next_fraction]
        {
            self.samples.push(TracePoint {
                fraction: TTT_FRACTIONS[self.next_fraction],
                objective: self.incumbent_value,
            });
            self.next_fraction += 1;
        }
    }

    fn flush_remaining_fractions(&mut self) {
        while self.next_fraction < TTT_FRACTIONS.len() {
            self.samples.push(TracePoint {
                fraction: TTT_FRACTIONS[self.next_fraction],
                objective: self.incumbent_value,
            });
            self.next_fraction += 1;
        }
    }

    fn run_continuous(&mut self) {
        let polish = self.cfg.mode.polishes_snapshots();
        while !self.driver.continuous_done(self.steps) {
            let beta = self.driver.beta(self.steps);
            for idx in 0..self.trajectories.len() {
                let traj = &mut self.trajectories[idx];
                let energy =
                    dynamics_step(self.inst, self.cfg, beta, &mut traj.x, &mut traj.v, &mut self.scratch);
                traj.observe_energy(energy, self.cfg.stall_tol);
            }
            self.steps += 1;
            if self.cfg.mode == HamdMode::Continuous && self.steps % self.cfg.snap_interval == 0 {
                self.snapshot(0, false);
            }
            if self.cfg.mode != HamdMode::Continuous && !self.driver.continuous_done(self.steps) {
                let now = self.driver.now();
                for idx in 0..self.trajectories.len() {
                    let traj = &self.trajectories[idx];
                    let stalled = traj.steps_since_improve >= self.cfg.stall_steps;
                    let interval = self
                        .driver
                        .restart_interval_due(traj.steps_since_restart, now - traj.time_mark);
                    if stalled || interval {
                        self.snapshot(idx, polish);
                        let incumbent = self.incumbent.clone();
                        self.trajectories[idx].reinitialize(&incumbent, now);
                        self.restarts += 1;
                    }
                }
            }
            self.record_crossings();
        }
        // End-of-phase sweep: every trajectory contributes a final snapshot.
        for idx in 0..self.trajectories.len() {
            self.snapshot(idx, polish && self.cfg.mode != HamdMode::Continuous);
        }
        self.record_crossings();
    }

    fn run_refinement(&mut self, seed: u64) {
        let n = self.inst.n();
        let k = self.inst.k();
        if k < 2 || n - k < 2 {
            log::warn!(
                "skipping refinement: needs >=2 selected and >=2 unselected assets (n={n}, k={k})"
            );
            return;
        }
        let mut rng = seeded(seed, stream::ILS);
        while !self.driver.refinement_done(self.steps, self.ils_steps) {
            let candidate = perturb(&self.incumbent, &mut rng);
            let (polished, value, _) = kswap_polish(self.inst, &candidate, MAX_POLISH_SWAPS);
            self.ils_steps += 1;
            if value < self.incumbent_value {
                self.incumbent_value = value;
                self.incumbent = polished;
            }
            self.record_crossings();
        }
    }
}

/// Runs the hybrid pipeline on `inst` under `budget`, seeded by `seed`.
///
/// The budget meters outer batch steps plus refinement iterations
/// (deterministic) or wall-clock seconds. With an iteration budget and a
/// fixed seed the full trace is reproducible bit for bit. The incumbent is
/// seeded from the first trajectory's initial state so that every sampled
/// fraction has a well-defined objective.
pub fn solve(
    inst: &PortfolioInstance,
    cfg: &HamdConfig,
    budget: Budget,
    seed: u64,
) -> Result<RunTrace, SolveError> {
    cfg.validate()?;
    let budget = budget.validate()?;
    let driver = Driver::new(budget, cfg);
    let n = inst.n();
    let batch = if cfg.mode == HamdMode::Continuous { 1 } else { cfg.batch };
    let now = driver.now();
    let trajectories: Vec<Trajectory> =
        (0..batch).map(|b| Trajectory::fresh(n, seed, b, now)).collect();
    let seed_portfolio = project_topk(&trajectories[0].x, inst.k());
    let seed_value = eval_selection(inst, &seed_portfolio);
    let mut engine = Engine {
        inst,
        cfg,
        driver,
        trajectories,
        scratch: StepScratch::new(n),
        incumbent_value: seed_value,
        incumbent: seed_portfolio,
        samples: Vec::with_capacity(TTT_FRACTIONS.len()),
        next_fraction: 0,
        steps: 0,
        restarts: 0,
        ils_steps: 0,
    };
    engine.run_continuous();
    if cfg.mode == HamdMode::Full {
        engine.run_refinement(seed);
    }
    engine.flush_remaining_fractions();
    Ok(RunTrace {
        samples: engine.samples,
        best_objective: engine.incumbent_value,
        portfolio: engine.incumbent,
        restarts: engine.restarts,
        ils_steps: engine.ils_steps,
        steps: engine.steps,
    })
}
