//! Experiment harness: cell enumeration, matched-budget execution, and
//! result-file output.
//!
//! An [`ExperimentSpec`] names one of six experiment kinds and the grid it
//! runs over (instance shapes, seeds, budget, penalty multipliers, solver
//! set). [`run_experiment`] expands the grid into independent cells, runs
//! them in parallel under matched budgets, and writes one pretty-printed
//! record per run, a combined record file, and rendered summary tables.
//!
//! Every cell is deterministic given its seed, so iteration-budget
//! experiments produce byte-identical output across reruns regardless of
//! the worker count (configured only through the `CUBOPT_WORKERS`
//! environment variable).

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use cubopt::baselines::{sa_solve, tabu_solve, AnnealConfig, BaselineError, TabuConfig};
use cubopt::diagnostics::{
    brute_force_optimum, feasibility_record, random_reference, DiagError,
    RANDOM_REFERENCE_DRAWS,
};
use cubopt::hamd::{solve, HamdConfig, HamdMode, SolveError};
use cubopt::instance::{generate_instance, InstanceError, PortfolioInstance};
use cubopt::model::eval_native;
use cubopt::quad::build_augmented;
use cubopt::Budget;
use rayon::prelude::*;
use thiserror::Error;

use crate::records::{
    write_records, write_run_file, ConfigEcho, InstanceDescriptor, RecordError, ResultRecord,
    TttSample, SCHEMA,
};
use crate::report::{render_report, write_report, Format, ReportError};

/// Environment variable bounding the harness worker count.
pub const WORKERS_ENV: &str = "CUBOPT_WORKERS";

/// Default seed set for multi-seed experiment kinds.
pub const DEFAULT_SEEDS: [u64; 3] = [42, 1042, 2042];

/// Default penalty multipliers for the sensitivity kind.
pub const DEFAULT_MULTIPLIERS: [f64; 3] = [0.5, 1.0, 2.0];

/// Failure cases of the harness.
#[derive(Debug, Error)]
pub enum ExperimentError {
    /// The spec failed validation.
    #[error("invalid experiment spec: {0}")]
    Spec(String),
    /// Instance generation failed.
    #[error(transparent)]
    Instance(#[from] InstanceError),
    /// The hybrid solver rejected its configuration or budget.
    #[error(transparent)]
    Solve(#[from] SolveError),
    /// A baseline solver rejected its budget.
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    /// Exhaustive enumeration was infeasible.
    #[error(transparent)]
    Diag(#[from] DiagError),
    /// Record files could not be written.
    #[error(transparent)]
    Record(#[from] RecordError),
    /// Summary tables could not be rendered or written.
    #[error(transparent)]
    Report(#[from] ReportError),
    /// Output directories could not be created.
    #[error("output path: {0}")]
    Io(#[from] std::io::Error),
    /// The worker pool could not be built.
    #[error("worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

/// The six experiment kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    /// One seed across several instance sizes, all solvers.
    Scaling,
    /// Several seeds at one size, all solvers, gap/W-T-L aggregation.
    Multiseed,
    /// The four pipeline modes on one instance.
    Ablation,
    /// Baselines across cardinality-penalty multipliers, plus a hybrid
    /// reference run per seed.
    Sensitivity,
    /// Small sizes where the enumerated optimum calibrates the solver.
    Exact,
    /// One instance, the requested solver set.
    Single,
}

impl ExperimentKind {
    /// Stable lowercase tag used in records and file names.
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Scaling => "scaling",
            ExperimentKind::Multiseed => "multiseed",
            ExperimentKind::Ablation => "ablation",
            ExperimentKind::Sensitivity => "sensitivity",
            ExperimentKind::Exact => "exact",
            ExperimentKind::Single => "single",
        }
    }
}

impl std::str::FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "scaling" => Ok(ExperimentKind::Scaling),
            "multiseed" => Ok(ExperimentKind::Multiseed),
            "ablation" => Ok(ExperimentKind::Ablation),
            "sensitivity" => Ok(ExperimentKind::Sensitivity),
            "exact" => Ok(ExperimentKind::Exact),
            "single" => Ok(ExperimentKind::Single),
            other => Err(format!(
                "unknown experiment kind `{other}` \
                 (expected scaling|multiseed|ablation|sensitivity|exact|single)"
            )),
        }
    }
}

/// Solver selector for experiment grids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum SolverSel {
    /// Native hybrid pipeline.
    Hamd,
    /// Simulated annealing on the augmented model.
    Sa,
    /// Tabu search on the augmented model.
    Tabu,
}

impl SolverSel {
    /// Stable lowercase name.
    pub fn name(self) -> &'static str {
        match self {
            SolverSel::Hamd => "hamd",
            SolverSel::Sa => "sa",
            SolverSel::Tabu => "tabu",
        }
    }
}

impl std::str::FromStr for SolverSel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "hamd" => Ok(SolverSel::Hamd),
            "sa" => Ok(SolverSel::Sa),
            "tabu" => Ok(SolverSel::Tabu),
            other => Err(format!("unknown solver `{other}` (expected hamd|sa|tabu)")),
        }
    }
}

/// Full description of an experiment run.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    /// Experiment kind.
    pub kind: ExperimentKind,
    /// Instance shapes as `(n, K)` pairs.
    pub sizes: Vec<(usize, usize)>,
    /// Instance seeds; each seed also drives the solvers run on it.
    pub seeds: Vec<u64>,
    /// Budget granted to every solver run (matched across solvers).
    pub budget: Budget,
    /// Cardinality-penalty multipliers (sensitivity kind only).
    pub multipliers: Vec<f64>,
    /// Solvers to run (ignored by the ablation kind, which always runs
    /// the four hybrid modes).
    pub solvers: Vec<SolverSel>,
    /// Hybrid pipeline mode for non-ablation kinds.
    pub mode: HamdMode,
    /// Output directory.
    pub out: PathBuf,
    /// Summary table format.
    pub format: Format,
}

impl ExperimentSpec {
    /// Spec with the standard grid for `kind`, writing under `out`.
    pub fn for_kind(kind: ExperimentKind, out: PathBuf) -> Self {
        let sizes = match kind {
            ExperimentKind::Scaling => {
                vec![(200, 40), (300, 60), (500, 100), (1000, 200)]
            }
            ExperimentKind::Exact => vec![(20, 4), (25, 5), (30, 6)],
            _ => vec![(200, 40)],
        };
        let seeds = match kind {
            ExperimentKind::Scaling | ExperimentKind::Ablation | ExperimentKind::Single => {
                vec![42]
            }
            _ => DEFAULT_SEEDS.to_vec(),
        };
        let budget = match kind {
            ExperimentKind::Exact => Budget::WallSecs(10.0),
            _ => Budget::WallSecs(60.0),
        };
        let multipliers = match kind {
            ExperimentKind::Sensitivity => DEFAULT_MULTIPLIERS.to_vec(),
            _ => vec![1.0],
        };
        let solvers = match kind {
            ExperimentKind::Sensitivity => vec![SolverSel::Sa, SolverSel::Tabu],
            ExperimentKind::Exact => vec![SolverSel::Hamd],
            _ => vec![SolverSel::Hamd, SolverSel::Sa, SolverSel::Tabu],
        };
        Self {
            kind,
            sizes,
            seeds,
            budget,
            multipliers,
            solvers,
            mode: HamdMode::Full,
            out,
            format: Format::Csv,
        }
    }

    /// Validates grid shape and budget.
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.sizes.is_empty() {
            return Err(ExperimentError::Spec("size list is empty".into()));
        }
        if self.seeds.is_empty() {
            return Err(ExperimentError::Spec("seed list is empty".into()));
        }
        if self.solvers.is_empty() {
            return Err(ExperimentError::Spec("solver list is empty".into()));
        }
        for &(n, k) in &self.sizes {
            if k == 0 || k >= n {
                return Err(ExperimentError::Spec(format!(
                    "cardinality {k} must satisfy 0 < K < n = {n}"
                )));
            }
        }
        self.budget
            .validate()
            .map_err(|e| ExperimentError::Spec(e.to_string()))?;
        if self.kind == ExperimentKind::Sensitivity {
            if self.multipliers.is_empty() {
                return Err(ExperimentError::Spec("multiplier list is empty".into()));
            }
            if self.multipliers.iter().any(|&m| !(m.is_finite() && m > 0.0)) {
                return Err(ExperimentError::Spec(
                    "multipliers must be positive and finite".into(),
                ));
            }
        } else if self.multipliers != [1.0] {
            return Err(ExperimentError::Spec(format!(
                "penalty multipliers are only valid for the sensitivity kind, \
                 got {:?} for {}",
                self.multipliers,
                self.kind.name()
            )));
        }
        Ok(())
    }
}

/// One independent runnable unit of an experiment grid.
#[derive(Debug, Clone, Copy, PartialEq)]
struct RunCell {
    n: usize,
    k: usize,
    seed: u64,
    solver: SolverSel,
    mode: HamdMode,
    multiplier: f64,
}

/// Expands a spec into its cell grid, in deterministic order.
fn cells(spec: &ExperimentSpec) -> Vec<RunCell> {
    let mut out = Vec::new();
    for &(n, k) in &spec.sizes {
        for &seed in &spec.seeds {
            match spec.kind {
                ExperimentKind::Ablation => {
                    for mode in [
                        HamdMode::Continuous,
                        HamdMode::Projected,
                        HamdMode::Polished,
                        HamdMode::Full,
                    ] {
                        out.push(RunCell {
                            n,
                            k,
                            seed,
                            solver: SolverSel::Hamd,
                            mode,
                            multiplier: 1.0,
                        });
                    }
                }
                ExperimentKind::Sensitivity => {
                    out.push(RunCell {
                        n,
                        k,
                        seed,
                        solver: SolverSel::Hamd,
                        mode: spec.mode,
                        multiplier: 1.0,
                    });
                    for &multiplier in &spec.multipliers {
                        for &solver in &spec.solvers {
                            if solver == SolverSel::Hamd {
                                continue;
                            }
                            out.push(RunCell { n, k, seed, solver, mode: spec.mode, multiplier });
                        }
                    }
                }
                _ => {
                    for &solver in &spec.solvers {
                        out.push(RunCell {
                            n,
                            k,
                            seed,
                            solver,
                            mode: spec.mode,
                            multiplier: spec.multipliers[0],
                        });
                    }
                }
            }
        }
    }
    out
}

/// Per-instance data shared by every cell on that instance.
struct Prepared {
    instance: Arc<PortfolioInstance>,
    reference: f64,
    exact: Option<(f64, u64)>,
}

/// Builds the worker pool, sized by the `CUBOPT_WORKERS` variable when
/// set (zero or unset means one worker per logical CPU).
fn build_pool() -> Result<rayon::ThreadPool, ExperimentError> {
    let workers = std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .unwrap_or(0);
    Ok(rayon::ThreadPoolBuilder::new().num_threads(workers).build()?)
}

/// Decoded native objective of an augmented state's asset bits.
fn decode_objective(inst: &PortfolioInstance, state: &[bool]) -> f64 {
    let x: Vec<f64> =
        state[..inst.n()].iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    eval_native(inst, &x)
}

/// Runs one cell and assembles its record.
fn run_cell(
    spec: &ExperimentSpec,
    cell: RunCell,
    prep: &Prepared,
) -> Result<ResultRecord, ExperimentError> {
    let inst = prep.instance.as_ref();
    let start = Instant::now();
    let (config, decoded, ttt, feasibility, lambda_card, restarts, ils_steps) = match cell.solver
    {
        SolverSel::Hamd => {
            let config = HamdConfig { mode: cell.mode, ..HamdConfig::default() };
            let trace = solve(inst, &config, spec.budget, cell.seed)?;
            let ttt: Vec<TttSample> = trace
                .samples
                .iter()
                .map(|s| TttSample { fraction: s.fraction, objective: s.objective })
                .collect();
            (
                ConfigEcho::Hamd { config },
                trace.best_objective,
                ttt,
                None,
                None,
                Some(trace.restarts),
                Some(trace.ils_steps),
            )
        }
        SolverSel::Sa | SolverSel::Tabu => {
            let qubo = build_augmented(inst, cell.multiplier);
            let (config, trace) = if cell.solver == SolverSel::Sa {
                let config = AnnealConfig::default();
                let trace = sa_solve(&qubo, &config, spec.budget, cell.seed)?;
                (ConfigEcho::Sa { lambda_mult: cell.multiplier, config }, trace)
            } else {
                let config = TabuConfig::default();
                let trace = tabu_solve(&qubo, &config, spec.budget)?;
                (ConfigEcho::Tabu { lambda_mult: cell.multiplier, config }, trace)
            };
            let audit = feasibility_record(&qubo, inst, &trace.best_state);
            let ttt: Vec<TttSample> = trace
                .checkpoints
                .iter()
                .map(|cp| TttSample {
                    fraction: cp.fraction,
                    objective: decode_objective(inst, &cp.state),
                })
                .collect();
            let decoded = audit.decoded_native_objective;
            (config, decoded, ttt, Some(audit), Some(qubo.lambda_card()), None, None)
        }
    };
    let wall_time_secs =
        spec.budget.is_wall_clock().then(|| start.elapsed().as_secs_f64());
    Ok(ResultRecord {
        schema: SCHEMA.to_string(),
        experiment: spec.kind.name().to_string(),
        instance: InstanceDescriptor {
            n: cell.n,
            k: cell.k,
            seed: cell.seed,
            cubic_terms: inst.cubic().len(),
        },
        solver: cell.solver.name().to_string(),
        config,
        budget: spec.budget,
        decoded_objective: decoded,
        ttt,
        feasibility,
        lambda_card,
        random_reference: Some(prep.reference),
        exact_optimum: prep.exact.map(|(v, _)| v),
        exact_states: prep.exact.map(|(_, s)| s),
        wall_time_secs,
        restarts,
        ils_steps,
    })
}

/// Runs the experiment grid and writes all output files.
///
/// Output layout under `spec.out`: `runs/<cell>.json` (one pretty record
/// per run), `records.jsonl` (all records, sorted), and one summary
/// table file per report table in `spec.format`. Returns the sorted
/// records.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<ResultRecord>, ExperimentError> {
    spec.validate()?;
    let pool = build_pool()?;
    let cell_list = cells(spec);

    // Prepare each distinct instance once: generation, the shared
    // random-selection floor, and (for the exact kind) the enumerated
    // optimum every trial is compared against.
    let mut keys: Vec<(usize, usize, u64)> = Vec::new();
    for cell in &cell_list {
        let key = (cell.n, cell.k, cell.seed);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    let prepared: Vec<((usize, usize, u64), Prepared)> = pool.install(|| {
        keys.par_iter()
            .map(|&(n, k, seed)| {
                let instance = Arc::new(generate_instance(n, k, seed)?);
                let reference =
                    random_reference(&instance, RANDOM_REFERENCE_DRAWS, seed);
                let exact = if spec.kind == ExperimentKind::Exact {
                    let opt = brute_force_optimum(&instance)?;
                    Some((opt.value, opt.states))
                } else {
                    None
                };
                Ok(((n, k, seed), Prepared { instance, reference, exact }))
            })
            .collect::<Result<Vec<_>, ExperimentError>>()
    })?;
    let by_key: BTreeMap<(usize, usize, u64), Prepared> = prepared.into_iter().collect();

    let mut records: Vec<ResultRecord> = pool.install(|| {
        cell_list
            .par_iter()
            .map(|&cell| {
                let prep = &by_key[&(cell.n, cell.k, cell.seed)];
                run_cell(spec, cell, prep)
            })
            .collect::<Result<Vec<_>, ExperimentError>>()
    })?;
    records.sort_by_key(|r| r.sort_key());

    let runs_dir = spec.out.join("runs");
    std::fs::create_dir_all(&runs_dir)?;
    for rec in &records {
        write_run_file(&runs_dir, rec)?;
    }
    write_records(&spec.out.join("records.jsonl"), &records)?;
    let files = render_report(&records, spec.format)?;
    write_report(&spec.out, &files)?;
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(kind: ExperimentKind, out: PathBuf) -> ExperimentSpec {
        let mut spec = ExperimentSpec::for_kind(kind, out);
        spec.budget = Budget::Iterations(40);
        spec
    }

    #[test]
    fn specs_reject_degenerate_grids() {
        let out = PathBuf::from("/tmp/unused");
        let mut s = spec(ExperimentKind::Single, out.clone());
        s.seeds.clear();
        assert!(matches!(s.validate(), Err(ExperimentError::Spec(_))));
        let mut s = spec(ExperimentKind::Single, out.clone());
        s.sizes = vec![(10, 10)];
        assert!(matches!(s.validate(), Err(ExperimentError::Spec(_))));
        let mut s = spec(ExperimentKind::Single, out.clone());
        s.multipliers = vec![0.5, 1.0];
        assert!(matches!(s.validate(), Err(ExperimentError::Spec(_))));
        let mut s = spec(ExperimentKind::Sensitivity, out);
        s.multipliers = vec![0.5, 1.0];
        assert!(s.validate().is_ok());
    }

    #[test]
    fn ablation_cells_cover_the_four_modes() {
        let s = spec(ExperimentKind::Ablation, PathBuf::from("/tmp/unused"));
        let grid = cells(&s);
        assert_eq!(grid.len(), 4);
        let modes: Vec<&str> = grid.iter().map(|c| c.mode.name()).collect();
        assert_eq!(modes, ["cont", "proj", "polish", "full"]);
        assert!(grid.iter().all(|c| c.solver == SolverSel::Hamd));
    }

    #[test]
    fn sensitivity_cells_form_the_full_grid_plus_references() {
        let s = spec(ExperimentKind::Sensitivity, PathBuf::from("/tmp/unused"));
        let grid = cells(&s);
        // 3 seeds x (1 hybrid reference + 3 multipliers x 2 baselines).
        assert_eq!(grid.len(), 3 * (1 + 3 * 2));
        let hamd = grid.iter().filter(|c| c.solver == SolverSel::Hamd).count();
        assert_eq!(hamd, 3);
    }

    #[test]
    fn single_experiment_writes_records_runs_and_summaries() {
        let dir = tempfile::tempdir().expect("tempdir");
        let mut s = spec(ExperimentKind::Single, dir.path().to_path_buf());
        s.sizes = vec![(12, 3)];
        s.seeds = vec![7];
        let records = run_experiment(&s).expect("run");
        assert_eq!(records.len(), 3);
        for rec in &records {
            assert_eq!(rec.ttt.len(), 5);
            assert!(rec.wall_time_secs.is_none(), "iteration runs omit wall time");
            assert!(rec.random_reference.is_some());
            match rec.solver.as_str() {
                "hamd" => {
                    assert!(rec.feasibility.is_none());
                    assert!(rec.restarts.is_some());
                }
                _ => {
                    assert!(rec.feasibility.is_some());
                    assert!(rec.lambda_card.is_some());
                    assert!(rec.restarts.is_none());
                }
            }
        }
        assert!(dir.path().join("records.jsonl").is_file());
        assert!(dir.path().join("single-scaling.csv").is_file());
        let runs: Vec<_> = std::fs::read_dir(dir.path().join("runs"))
            .expect("runs dir")
            .collect();
        assert_eq!(runs.len(), 3);
    }

    #[test]
    fn iteration_budget_reruns_are_byte_identical() {
        let run = |path: PathBuf| {
            let mut s = spec(ExperimentKind::Multiseed, path);
            s.sizes = vec![(14, 4)];
            s.seeds = vec![42, 1042];
            run_experiment(&s).expect("run");
        };
        let a = tempfile::tempdir().expect("tempdir");
        let b = tempfile::tempdir().expect("tempdir");
        run(a.path().to_path_buf());
        run(b.path().to_path_buf());
        let read = |p: &std::path::Path| std::fs::read(p).expect("read");
        assert_eq!(
            read(&a.path().join("records.jsonl")),
            read(&b.path().join("records.jsonl"))
        );
        assert_eq!(
            read(&a.path().join("multiseed-multiseed.csv")),
            read(&b.path().join("multiseed-multiseed.csv"))
        );
    }
}
