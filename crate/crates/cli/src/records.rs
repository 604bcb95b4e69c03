//! Schema-versioned result records for benchmark runs.
//!
//! Every solver run produces one [`ResultRecord`]: a self-describing
//! structured-text document carrying the instance descriptor, the full
//! solver configuration (sufficient to replay the run), the decoded
//! native objective, the time-to-target trace, and — for quadratized
//! baselines — the decoded-feasibility audit. Records serialize to one
//! JSON document per line, so result files diff cleanly and parse from
//! any language.

use std::fs;
use std::io::{self, Write as _};
use std::path::Path;

use cubopt::baselines::{AnnealConfig, TabuConfig};
use cubopt::diagnostics::FeasibilityRecord;
use cubopt::hamd::HamdConfig;
use cubopt::Budget;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Schema tag embedded in every record.
pub const SCHEMA: &str = "cubopt/result/v1";

/// Failure cases of record I/O.
#[derive(Debug, Error)]
pub enum RecordError {
    /// Filesystem failure.
    #[error("record file i/o: {0}")]
    Io(#[from] io::Error),
    /// A line did not parse as a record.
    #[error("line {0}: {1}")]
    Parse(usize, serde_json::Error),
    /// A record declared an unknown schema version.
    #[error("line {0}: unsupported schema `{1}` (expected `{SCHEMA}`)")]
    Schema(usize, String),
    /// Serialization failure (should not happen for well-formed records).
    #[error("record serialization: {0}")]
    Serialize(#[from] serde_json::Error),
}

/// Identifies one synthetic instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceDescriptor {
    /// Number of assets.
    pub n: usize,
    /// Required cardinality.
    pub k: usize,
    /// Generator seed (also drives the solvers run on the instance).
    pub seed: u64,
    /// Number of cubic terms in the instance.
    pub cubic_terms: usize,
}

/// Full solver configuration echo, sufficient to rerun the cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConfigEcho {
    /// Native hybrid solver configuration.
    Hamd {
        /// Complete pipeline parameter set.
        config: HamdConfig,
    },
    /// Simulated annealing over the augmented model.
    Sa {
        /// Cardinality-penalty multiplier used to build the model.
        lambda_mult: f64,
        /// Annealing parameters.
        config: AnnealConfig,
    },
    /// Tabu search over the augmented model.
    Tabu {
        /// Cardinality-penalty multiplier used to build the model.
        lambda_mult: f64,
        /// Tabu parameters.
        config: TabuConfig,
    },
}

impl ConfigEcho {
    /// Stable solver name used in records and reports.
    pub fn solver_name(&self) -> &'static str {
        match self {
            ConfigEcho::Hamd { .. } => "hamd",
            ConfigEcho::Sa { .. } => "sa",
            ConfigEcho::Tabu { .. } => "tabu",
        }
    }

    /// Short variant tag distinguishing cells that share a solver name:
    /// the pipeline mode for the hybrid, the penalty multiplier for the
    /// quadratized baselines.
    pub fn variant(&self) -> String {
        match self {
            ConfigEcho::Hamd { config } => config.mode.name().to_string(),
            ConfigEcho::Sa { lambda_mult, .. } | ConfigEcho::Tabu { lambda_mult, .. } => {
                format!("m{lambda_mult}")
            }
        }
    }
}

/// Best decoded native objective observed by a budget fraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TttSample {
    /// Fraction of the budget elapsed, in `(0, 1]`.
    pub fraction: f64,
    /// Best native objective at that point.
    pub objective: f64,
}

/// One solver run on one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    /// Record schema version; always [`SCHEMA`].
    pub schema: String,
    /// Experiment kind that produced the record.
    pub experiment: String,
    /// Instance the run was performed on.
    pub instance: InstanceDescriptor,
    /// Solver name (`hamd`, `sa`, or `tabu`).
    pub solver: String,
    /// Full configuration echo.
    pub config: ConfigEcho,
    /// Compute budget granted to the run.
    pub budget: Budget,
    /// Final decoded native objective (lower is better).
    pub decoded_objective: f64,
    /// Best decoded objective at 10/25/50/75/100% of the budget.
    pub ttt: Vec<TttSample>,
    /// Decoded-feasibility audit of the returned state (baselines only).
    pub feasibility: Option<FeasibilityRecord>,
    /// Realized cardinality-penalty weight (baselines only).
    pub lambda_card: Option<f64>,
    /// Best native objective over 1,000 random feasible portfolios.
    pub random_reference: Option<f64>,
    /// Proven global optimum (exact-calibration runs only).
    pub exact_optimum: Option<f64>,
    /// Feasible selections enumerated for the optimum (exact runs only).
    pub exact_states: Option<u64>,
    /// Elapsed wall time in seconds; omitted under iteration budgets so
    /// result files are byte-identical across reruns.
    pub wall_time_secs: Option<f64>,
    /// Restart count (hybrid solver only).
    pub restarts: Option<u64>,
    /// Refinement steps taken (hybrid solver only).
    pub ils_steps: Option<u64>,
}

impl ResultRecord {
    /// Deterministic ordering key: instance, then solver, then variant.
    pub fn sort_key(&self) -> (usize, usize, u64, String, String) {
        (
            self.instance.n,
            self.instance.k,
            self.instance.seed,
            self.solver.clone(),
            self.config.variant(),
        )
    }

    /// File-safe stem naming the run, unique within an experiment.
    pub fn file_stem(&self) -> String {
        format!(
            "{}-n{}-k{}-seed{}-{}-{}",
            self.experiment,
            self.instance.n,
            self.instance.k,
            self.instance.seed,
            self.solver,
            self.config.variant()
        )
    }
}

/// Writes records as one JSON document per line (trailing newline).
pub fn write_records(path: &Path, records: &[ResultRecord]) -> Result<(), RecordError> {
    let mut out = Vec::new();
    for rec in records {
        serde_json::to_writer(&mut out, rec)?;
        out.push(b'\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Reads a record file written by [`write_records`].
pub fn read_records(path: &Path) -> Result<Vec<ResultRecord>, RecordError> {
    let text = fs::read_to_string(path)?;
    let mut records = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: ResultRecord =
            serde_json::from_str(line).map_err(|e| RecordError::Parse(idx + 1, e))?;
        if rec.schema != SCHEMA {
            return Err(RecordError::Schema(idx + 1, rec.schema));
        }
        records.push(rec);
    }
    Ok(records)
}

/// Writes one pretty-printed record to its own file under `dir`.
pub fn write_run_file(dir: &Path, record: &ResultRecord) -> Result<(), RecordError> {
    let mut body = serde_json::to_vec_pretty(record)?;
    body.push(b'\n');
    let path = dir.join(format!("{}.json", record.file_stem()));
    let mut f = fs::File::create(path)?;
    f.write_all(&body)?;
    Ok(())
}
