//! Aggregation and table rendering for benchmark records.
//!
//! [`aggregate`] folds a set of matched-seed records into per-solver
//! medians, population standard deviations, win/tie/loss counts against
//! the hybrid solver, and median relative gaps. The table builders turn
//! record sets into the five standard report tables (scaling, multi-seed,
//! feasibility, ablation time-to-target, penalty sensitivity), and
//! [`render_report`] renders them as exact-round-trip CSV or aligned
//! fixed-precision text.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::records::{ConfigEcho, ResultRecord};

/// Relative tolerance below which two objectives count as a tie.
pub const TIE_REL_TOL: f64 = 1e-9;

/// Failure cases of aggregation and rendering.
#[derive(Debug, Error)]
pub enum ReportError {
    /// Nothing to aggregate or render.
    #[error("no records to report on")]
    Empty,
    /// Records mix instance shapes where one shape is required.
    #[error("records mix instance shapes ({0}, {1}) and ({2}, {3})")]
    MixedShape(usize, usize, usize, usize),
    /// Two solvers ran on different seed sets.
    #[error("solver `{0}` ran seeds {1:?} but `{2}` ran {3:?}")]
    MismatchedSeeds(String, Vec<u64>, String, Vec<u64>),
    /// One solver has several records for the same seed.
    #[error("solver `{solver}` has {count} records for seed {seed}")]
    DuplicateCell {
        /// Offending solver.
        solver: String,
        /// Repeated seed.
        seed: u64,
        /// Number of records found.
        count: usize,
    },
    /// The requested output format is not recognized.
    #[error("unknown report format `{0}` (expected csv|table)")]
    UnknownFormat(String),
    /// Report files could not be written.
    #[error("report file i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// Output format for rendered tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    /// Comma-separated values with full-precision numbers (exact
    /// round-trip through a float parser).
    Csv,
    /// Aligned monospace table with 2-decimal objectives and 1-decimal
    /// percentages.
    TableText,
}

impl Format {
    /// File extension for the format.
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::TableText => "txt",
        }
    }
}

impl std::str::FromStr for Format {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "table" | "table-text" | "txt" => Ok(Format::TableText),
            other => Err(ReportError::UnknownFormat(other.to_string())),
        }
    }
}

/// One table cell, carrying enough type information to render both ways.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    /// Literal text (solver names, yes/no flags).
    Text(String),
    /// Integer count.
    Int(i64),
    /// Objective-valued number: full precision in CSV, 2 decimals in text.
    Num(f64),
    /// High-resolution number: full precision in CSV, 6 decimals in text.
    Num6(f64),
    /// Fraction rendered as an unsigned percentage (1 decimal in text).
    Pct(f64),
    /// Fraction rendered as a signed percentage (1 decimal in text).
    SignedPct(f64),
    /// Fraction rendered as a fine-grained percentage (4 decimals in text).
    FinePct(f64),
    /// Count ratio rendered as `count/total`.
    Ratio(u64, u64),
    /// Not applicable; renders as `---` in text and empty in CSV.
    Dash,
}

impl Cell {
    fn render(&self, format: Format) -> String {
        match (self, format) {
            (Cell::Text(s), _) => s.clone(),
            (Cell::Int(v), _) => v.to_string(),
            (Cell::Num(v), Format::Csv) => format!("{v:?}"),
            (Cell::Num(v), Format::TableText) => format!("{v:.2}"),
            (Cell::Num6(v), Format::Csv) => format!("{v:?}"),
            (Cell::Num6(v), Format::TableText) => format!("{v:.6}"),
            (Cell::Pct(v), Format::Csv) => format!("{v:?}"),
            (Cell::Pct(v), Format::TableText) => format!("{:.1}%", v * 100.0),
            (Cell::SignedPct(v), Format::Csv) => format!("{v:?}"),
            (Cell::SignedPct(v), Format::TableText) => format!("{:+.1}%", v * 100.0),
            (Cell::FinePct(v), Format::Csv) => format!("{v:?}"),
            (Cell::FinePct(v), Format::TableText) => format!("{:.4}%", v * 100.0),
            (Cell::Ratio(a, b), _) => format!("{a}/{b}"),
            (Cell::Dash, Format::Csv) => String::new(),
            (Cell::Dash, Format::TableText) => "---".to_string(),
        }
    }
}

/// A rendered-format-agnostic table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// File stem and heading of the table.
    pub name: &'static str,
    /// Column names.
    pub header: Vec<&'static str>,
    /// Row cells; every row has `header.len()` entries.
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    /// Renders the table in the requested format, newline-terminated.
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => {
                let mut out = self.header.join(",");
                out.push('\n');
                for row in &self.rows {
                    let line: Vec<String> = row.iter().map(|c| c.render(format)).collect();
                    out.push_str(&line.join(","));
                    out.push('\n');
                }
                out
            }
            Format::TableText => {
                let rendered: Vec<Vec<String>> = self
                    .rows
                    .iter()
                    .map(|row| row.iter().map(|c| c.render(format)).collect())
                    .collect();
                let mut widths: Vec<usize> = self.header.iter().map(|h| h.len()).collect();
                for row in &rendered {
                    for (w, cell) in widths.iter_mut().zip(row) {
                        *w = (*w).max(cell.len());
                    }
                }
                let mut out = format!("# {}\n", self.name);
                let head: Vec<String> = self
                    .header
                    .iter()
                    .zip(&widths)
                    .map(|(h, w)| format!("{h:>w$}"))
                    .collect();
                out.push_str(&head.join("  "));
                out.push('\n');
                out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
                out.push('\n');
                for row in &rendered {
                    let line: Vec<String> = row
                        .iter()
                        .zip(&widths)
                        .map(|(cell, w)| format!("{cell:>w$}"))
                        .collect();
                    out.push_str(&line.join("  "));
                    out.push('\n');
                }
                out
            }
        }
    }
}

/// Win/tie/loss counts of a baseline against the hybrid solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Wtl {
    /// Seeds where the baseline was strictly better.
    pub wins: u32,
    /// Seeds within the relative tie tolerance.
    pub ties: u32,
    /// Seeds where the baseline was strictly worse.
    pub losses: u32,
}

impl fmt::Display for Wtl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}", self.wins, self.ties, self.losses)
    }
}

/// Aggregate statistics of one solver over matched seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverSummary {
    /// Solver name.
    pub solver: String,
    /// Decoded objective per seed, in ascending seed order.
    pub per_seed: Vec<(u64, f64)>,
    /// Median decoded objective.
    pub median: f64,
    /// Population standard deviation of the decoded objectives.
    pub std: f64,
    /// Win/tie/loss against the hybrid solver (baselines only).
    pub wtl: Option<Wtl>,
    /// Median of the per-seed relative gaps `(v_solver - v_hamd) /
    /// v_solver`; positive means the hybrid found lower objectives.
    pub median_gap: Option<f64>,
}

/// Matched-seed aggregate over one instance shape.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateSummary {
    /// Asset count shared by all records.
    pub n: usize,
    /// Cardinality shared by all records.
    pub k: usize,
    /// Per-solver statistics, hybrid solver first.
    pub solvers: Vec<SolverSummary>,
}

/// Median of an unordered sample (mean of the middle pair when even).
fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Population standard deviation.
fn population_std(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// True when two objectives are within the relative tie tolerance.
fn is_tie(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIE_REL_TOL * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Checks that all records share one `(n, K)` shape and returns it.
fn shared_shape(records: &[ResultRecord]) -> Result<(usize, usize), ReportError> {
    let first = (records[0].instance.n, records[0].instance.k);
    for rec in records {
        let shape = (rec.instance.n, rec.instance.k);
        if shape != first {
            return Err(ReportError::MixedShape(first.0, first.1, shape.0, shape.1));
        }
    }
    Ok(first)
}

/// Folds matched-seed records into per-solver aggregate statistics.
///
/// All records must share one instance shape, every solver must have run
/// exactly once per seed, and all solvers must have run the same seed
/// set. Baselines are compared to the hybrid solver seed by seed: a tie
/// is a relative difference within [`TIE_REL_TOL`]; the gap for seed `s`
/// is `(v_baseline - v_hamd) / v_baseline`.
pub fn aggregate(records: &[ResultRecord]) -> Result<AggregateSummary, ReportError> {
    if records.is_empty() {
        return Err(ReportError::Empty);
    }
    let (n, k) = shared_shape(records)?;
    let mut by_solver: BTreeMap<String, BTreeMap<u64, f64>> = BTreeMap::new();
    for rec in records {
        let seeds = by_solver.entry(rec.solver.clone()).or_default();
        if seeds.insert(rec.instance.seed, rec.decoded_objective).is_some() {
            return Err(ReportError::DuplicateCell {
                solver: rec.solver.clone(),
                seed: rec.instance.seed,
                count: 2,
            });
        }
    }
    let (first_solver, first_seeds) = {
        let (name, seeds) = by_solver.iter().next().expect("non-empty");
        (name.clone(), seeds.keys().copied().collect::<BTreeSet<u64>>())
    };
    for (name, seeds) in &by_solver {
        let set: BTreeSet<u64> = seeds.keys().copied().collect();
        if set != first_seeds {
            return Err(ReportError::MismatchedSeeds(
                first_solver.clone(),
                first_seeds.iter().copied().collect(),
                name.clone(),
                set.iter().copied().collect(),
            ));
        }
    }
    let hamd = by_solver.get("hamd").cloned();
    let mut solvers = Vec::new();
    for (name, seeds) in &by_solver {
        let per_seed: Vec<(u64, f64)> = seeds.iter().map(|(&s, &v)| (s, v)).collect();
        let values: Vec<f64> = per_seed.iter().map(|&(_, v)| v).collect();
        let (wtl, median_gap) = match (&hamd, name.as_str()) {
            (Some(h), other) if other != "hamd" => {
                let mut wtl = Wtl { wins: 0, ties: 0, losses: 0 };
                let mut gaps = Vec::new();
                for &(seed, vb) in &per_seed {
                    let vh = h[&seed];
                    if is_tie(vb, vh) {
                        wtl.ties += 1;
                    } else if vb < vh {
                        wtl.wins += 1;
                    } else {
                        wtl.losses += 1;
                    }
                    gaps.push((vb - vh) / vb);
                }
                (Some(wtl), Some(median(&gaps)))
            }
            _ => (None, None),
        };
        solvers.push(SolverSummary {
            solver: name.clone(),
            median: median(&values),
            std: population_std(&values),
            per_seed,
            wtl,
            median_gap,
        });
    }
    // Hybrid row leads, matching the reference table layout.
    solvers.sort_by_key(|s| (s.solver != "hamd", s.solver.clone()));
    Ok(AggregateSummary { n, k, solvers })
}

/// Median decoded objective of a record group.
fn median_objective(records: &[&ResultRecord]) -> f64 {
    let values: Vec<f64> = records.iter().map(|r| r.decoded_objective).collect();
    median(&values)
}

/// Scaling table: one row per instance shape with the random-reference
/// floor, per-solver decoded objectives (medians across present seeds),
/// and the hybrid-vs-tabu relative gap.
pub fn scaling_table(records: &[ResultRecord]) -> Result<Table, ReportError> {
    if records.is_empty() {
        return Err(ReportError::Empty);
    }
    let mut shapes: BTreeMap<(usize, usize), Vec<&ResultRecord>> = BTreeMap::new();
    for rec in records {
        shapes.entry((rec.instance.n, rec.instance.k)).or_default().push(rec);
    }
    let mut rows = Vec::new();
    for ((n, k), group) in shapes {
        let refs: Vec<f64> = group.iter().filter_map(|r| r.random_reference).collect();
        let mut by_solver: BTreeMap<&str, Vec<&ResultRecord>> = BTreeMap::new();
        for rec in &group {
            by_solver.entry(rec.solver.as_str()).or_default().push(rec);
        }
        let solver_median = |name: &str| by_solver.get(name).map(|g| median_objective(g));
        let hamd = solver_median("hamd");
        let sa = solver_median("sa");
        let tabu = solver_median("tabu");
        let gap = match (hamd, tabu) {
            (Some(h), Some(t)) if t != 0.0 => Cell::SignedPct((t - h) / t),
            _ => Cell::Dash,
        };
        rows.push(vec![
            Cell::Int(n as i64),
            Cell::Int(k as i64),
            if refs.is_empty() { Cell::Dash } else { Cell::Num(median(&refs)) },
            hamd.map_or(Cell::Dash, Cell::Num),
            sa.map_or(Cell::Dash, Cell::Num),
            tabu.map_or(Cell::Dash, Cell::Num),
            gap,
        ]);
    }
    Ok(Table {
        name: "scaling",
        header: vec!["n", "k", "random_ref", "hamd", "sa", "tabu", "gap_hamd_vs_tabu"],
        rows,
    })
}

/// Multi-seed table: per-solver median, population standard deviation,
/// win/tie/loss against the hybrid, and median relative gap.
pub fn multiseed_table(records: &[ResultRecord]) -> Result<Table, ReportError> {
    let agg = aggregate(records)?;
    let rows = agg
        .solvers
        .iter()
        .map(|s| {
            vec![
                Cell::Text(s.solver.clone()),
                Cell::Num(s.median),
                Cell::Num(s.std),
                s.wtl.map_or(Cell::Dash, |w| Cell::Text(w.to_string())),
                s.median_gap.map_or(Cell::Dash, Cell::SignedPct),
            ]
        })
        .collect();
    Ok(Table {
        name: "multiseed",
        header: vec!["solver", "median", "std", "wtl_vs_hamd", "median_gap"],
        rows,
    })
}

/// Feasibility table: one row per (seed, solver) with augmented energy,
/// decoded objective, cardinality audit, auxiliary violations, and the
/// penalty fraction. Augmented-space columns are dashes for the hybrid
/// solver, which never leaves the native space.
pub fn feasibility_table(records: &[ResultRecord]) -> Result<Table, ReportError> {
    if records.is_empty() {
        return Err(ReportError::Empty);
    }
    shared_shape(records)?;
    let mut sorted: Vec<&ResultRecord> = records.iter().collect();
    sorted.sort_by_key(|r| (r.instance.seed, r.solver.clone(), r.config.variant()));
    let mut rows = Vec::new();
    for rec in sorted {
        let terms = rec.instance.cubic_terms as u64;
        let row = match &rec.feasibility {
            Some(f) => vec![
                Cell::Int(rec.instance.seed as i64),
                Cell::Text(rec.solver.clone()),
                Cell::Num(f.augmented_matrix_energy),
                Cell::Num(f.decoded_native_objective),
                Cell::Int(f.cardinality as i64),
                Cell::Int(f.card_violation as i64),
                Cell::Ratio(f.aux_viol_count as u64, terms),
                Cell::Pct(f.aux_viol_rate),
                Cell::FinePct(f.penalty_fraction),
            ],
            None => vec![
                Cell::Int(rec.instance.seed as i64),
                Cell::Text(rec.solver.clone()),
                Cell::Dash,
                Cell::Num(rec.decoded_objective),
                Cell::Int(rec.instance.k as i64),
                Cell::Int(0),
                Cell::Dash,
                Cell::Dash,
                Cell::Dash,
            ],
        };
        rows.push(row);
    }
    Ok(Table {
        name: "feasibility",
        header: vec![
            "seed",
            "solver",
            "q_aug",
            "native_obj",
            "card",
            "card_viol",
            "aux_viol",
            "aux_viol_rate",
            "penalty_fraction",
        ],
        rows,
    })
}

/// Ablation time-to-target table: one row per pipeline mode with the
/// final objective and the best objective at each budget fraction.
pub fn ablation_ttt_table(records: &[ResultRecord]) -> Result<Table, ReportError> {
    if records.is_empty() {
        return Err(ReportError::Empty);
    }
    let mode_rank = |rec: &ResultRecord| match rec.config.variant().as_str() {
        "cont" => 0,
        "proj" => 1,
        "polish" => 2,
        "full" => 3,
        _ => 4,
    };
    let mut sorted: Vec<&ResultRecord> = records.iter().collect();
    sorted.sort_by_key(|r| (r.instance.seed, mode_rank(r)));
    let mut rows = Vec::new();
    for rec in sorted {
        let mut row = vec![
            Cell::Text(format!("{}-{}", rec.solver, rec.config.variant())),
            Cell::Num(rec.decoded_objective),
        ];
        let mut samples = rec.ttt.clone();
        samples.sort_by(|a, b| a.fraction.total_cmp(&b.fraction));
        for s in &samples {
            row.push(Cell::Num(s.objective));
        }
        while row.len() < 7 {
            row.push(Cell::Dash);
        }
        rows.push(row);
    }
    Ok(Table {
        name: "ablation-ttt",
        header: vec!["mode", "objective", "t10", "t25", "t50", "t75", "t100"],
        rows,
    })
}

/// Sensitivity table: a hybrid reference row followed by one row per
/// (multiplier, baseline) with the realized penalty weight and the
/// across-seed medians of the decoded objective and audit fields
/// (cardinality violation reports the worst seed).
pub fn sensitivity_table(records: &[ResultRecord]) -> Result<Table, ReportError> {
    if records.is_empty() {
        return Err(ReportError::Empty);
    }
    let mut rows = Vec::new();
    let hamd: Vec<&ResultRecord> = records.iter().filter(|r| r.solver == "hamd").collect();
    if !hamd.is_empty() {
        rows.push(vec![
            Cell::Text("hamd".to_string()),
            Cell::Dash,
            Cell::Dash,
            Cell::Num(median_objective(&hamd)),
            Cell::Int(0),
            Cell::Dash,
            Cell::Dash,
        ]);
    }
    let mut grid: BTreeMap<(String, String), Vec<&ResultRecord>> = BTreeMap::new();
    for rec in records.iter().filter(|r| r.solver != "hamd") {
        let mult = match &rec.config {
            ConfigEcho::Sa { lambda_mult, .. } | ConfigEcho::Tabu { lambda_mult, .. } => {
                format!("{lambda_mult:012.6}")
            }
            ConfigEcho::Hamd { .. } => continue,
        };
        grid.entry((mult, rec.solver.clone())).or_default().push(rec);
    }
    for ((_, solver), group) in &grid {
        let mult = match &group[0].config {
            ConfigEcho::Sa { lambda_mult, .. } | ConfigEcho::Tabu { lambda_mult, .. } => {
                *lambda_mult
            }
            ConfigEcho::Hamd { .. } => unreachable!("hybrid records were filtered out"),
        };
        let lambdas: Vec<f64> = group.iter().filter_map(|r| r.lambda_card).collect();
        let feas: Vec<_> = group.iter().filter_map(|r| r.feasibility.as_ref()).collect();
        let worst_card =
            feas.iter().map(|f| f.card_violation).max().unwrap_or_default() as i64;
        let rates: Vec<f64> = feas.iter().map(|f| f.aux_viol_rate).collect();
        let fracs: Vec<f64> = feas.iter().map(|f| f.penalty_fraction).collect();
        rows.push(vec![
            Cell::Text(solver.clone()),
            Cell::Num(mult),
            if lambdas.is_empty() { Cell::Dash } else { Cell::Num(median(&lambdas)) },
            Cell::Num(median_objective(group)),
            Cell::Int(worst_card),
            if rates.is_empty() { Cell::Dash } else { Cell::Pct(median(&rates)) },
            if fracs.is_empty() { Cell::Dash } else { Cell::FinePct(median(&fracs)) },
        ]);
    }
    Ok(Table {
        name: "sensitivity",
        header: vec![
            "solver",
            "lambda_mult",
            "lambda_card",
            "native_obj",
            "card_viol",
            "aux_viol_rate",
            "penalty_fraction",
        ],
        rows,
    })
}

/// Exact-calibration table: one row per trial with the proven optimum,
/// the solver value, the relative gap, and whether the trial hit the
/// optimum to within the tie tolerance.
pub fn exact_table(records: &[ResultRecord]) -> Result<Table, ReportError> {
    if records.is_empty() {
        return Err(ReportError::Empty);
    }
    let mut sorted: Vec<&ResultRecord> = records.iter().collect();
    sorted.sort_by_key(|r| (r.instance.n, r.instance.k, r.instance.seed));
    let mut rows = Vec::new();
    for rec in sorted {
        let (opt_cell, gap_cell, hit_cell) = match rec.exact_optimum {
            Some(opt) => {
                let gap = (rec.decoded_objective - opt) / opt.abs().max(f64::MIN_POSITIVE);
                let hit = gap.abs() <= TIE_REL_TOL;
                (
                    Cell::Num6(opt),
                    Cell::SignedPct(gap),
                    Cell::Text(if hit { "yes" } else { "no" }.to_string()),
                )
            }
            None => (Cell::Dash, Cell::Dash, Cell::Dash),
        };
        rows.push(vec![
            Cell::Int(rec.instance.n as i64),
            Cell::Int(rec.instance.k as i64),
            Cell::Int(rec.instance.seed as i64),
            rec.exact_states.map_or(Cell::Dash, |s| Cell::Int(s as i64)),
            opt_cell,
            Cell::Num6(rec.decoded_objective),
            gap_cell,
            hit_cell,
        ]);
    }
    Ok(Table {
        name: "exact",
        header: vec!["n", "k", "seed", "states", "optimum", "solver_obj", "gap", "hit"],
        rows,
    })
}

/// Builds the standard tables for one experiment's records, keyed by the
/// records' experiment tag.
fn tables_for(tag: &str, records: &[ResultRecord]) -> Result<Vec<Table>, ReportError> {
    match tag {
        "scaling" => Ok(vec![scaling_table(records)?]),
        "multiseed" => Ok(vec![multiseed_table(records)?, feasibility_table(records)?]),
        "ablation" => Ok(vec![ablation_ttt_table(records)?]),
        "sensitivity" => Ok(vec![sensitivity_table(records)?]),
        "exact" => Ok(vec![exact_table(records)?]),
        _ => Ok(vec![scaling_table(records)?]),
    }
}

/// Renders all report tables for a record set.
///
/// Records are grouped by experiment tag; each group renders its tables
/// in the requested format. Returns `(file name, content)` pairs; errors
/// on an empty record set rather than emitting empty files.
pub fn render_report(
    records: &[ResultRecord],
    format: Format,
) -> Result<Vec<(String, String)>, ReportError> {
    if records.is_empty() {
        return Err(ReportError::Empty);
    }
    let mut by_tag: BTreeMap<String, Vec<ResultRecord>> = BTreeMap::new();
    for rec in records {
        by_tag.entry(rec.experiment.clone()).or_default().push(rec.clone());
    }
    let mut files = Vec::new();
    for (tag, group) in &by_tag {
        for table in tables_for(tag, group)? {
            let name = format!("{}-{}.{}", tag, table.name, format.extension());
            files.push((name, table.render(format)));
        }
    }
    Ok(files)
}

/// Writes rendered report files into `dir`, returning their paths.
pub fn write_report(
    dir: &Path,
    files: &[(String, String)],
) -> Result<Vec<PathBuf>, ReportError> {
    fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    for (name, content) in files {
        let path = dir.join(name);
        fs::write(&path, content)?;
        paths.push(path);
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::records::{InstanceDescriptor, TttSample, SCHEMA};
    use cubopt::baselines::{AnnealConfig, TabuConfig};
    use cubopt::hamd::HamdConfig;
    use cubopt::Budget;

    fn record(solver: &str, seed: u64, value: f64) -> ResultRecord {
        let config = match solver {
            "hamd" => ConfigEcho::Hamd { config: HamdConfig::default() },
            "sa" => ConfigEcho::Sa { lambda_mult: 1.0, config: AnnealConfig::default() },
            _ => ConfigEcho::Tabu { lambda_mult: 1.0, config: TabuConfig::default() },
        };
        ResultRecord {
            schema: SCHEMA.to_string(),
            experiment: "multiseed".to_string(),
            instance: InstanceDescriptor { n: 200, k: 40, seed, cubic_terms: 800 },
            solver: solver.to_string(),
            config,
            budget: Budget::Iterations(100),
            decoded_objective: value,
            ttt: vec![TttSample { fraction: 1.0, objective: value }],
            feasibility: None,
            lambda_card: None,
            random_reference: Some(863.7),
            exact_optimum: None,
            exact_states: None,
            wall_time_secs: None,
            restarts: None,
            ils_steps: None,
        }
    }

    fn worked_example() -> Vec<ResultRecord> {
        let mut records = Vec::new();
        for seed in [42, 1042, 2042] {
            records.push(record("hamd", seed, 195.65));
        }
        for (seed, v) in [(42, 1621.60), (1042, 1026.08), (2042, 1208.07)] {
            records.push(record("sa", seed, v));
            records.push(record("tabu", seed, v));
        }
        records
    }

    #[test]
    fn aggregate_reproduces_the_reference_statistics() {
        let agg = aggregate(&worked_example()).expect("aggregate");
        assert_eq!(agg.solvers[0].solver, "hamd");
        assert_eq!(agg.solvers[0].median, 195.65);
        assert_eq!(agg.solvers[0].std, 0.0);
        assert!(agg.solvers[0].wtl.is_none());
        let sa = &agg.solvers[1];
        assert_eq!(sa.solver, "sa");
        assert_eq!(sa.median, 1208.07);
        assert!((sa.std - 249.17).abs() < 5e-3, "std {}", sa.std);
        assert_eq!(sa.wtl, Some(Wtl { wins: 0, ties: 0, losses: 3 }));
        let gap = sa.median_gap.expect("gap");
        assert_eq!(format!("{:+.1}%", gap * 100.0), "+83.8%");
    }

    #[test]
    fn identical_values_are_all_ties() {
        let mut records = Vec::new();
        for seed in [1, 2] {
            records.push(record("hamd", seed, 10.0));
            records.push(record("sa", seed, 10.0));
        }
        let agg = aggregate(&records).expect("aggregate");
        assert_eq!(agg.solvers[1].wtl, Some(Wtl { wins: 0, ties: 2, losses: 0 }));
    }

    #[test]
    fn single_record_per_solver_degenerates_cleanly() {
        let records = vec![record("hamd", 42, 7.5), record("sa", 42, 9.0)];
        let agg = aggregate(&records).expect("aggregate");
        assert_eq!(agg.solvers[0].median, 7.5);
        assert_eq!(agg.solvers[0].std, 0.0);
        assert_eq!(agg.solvers[1].median, 9.0);
        assert_eq!(agg.solvers[1].std, 0.0);
    }

    #[test]
    fn mismatched_seed_sets_are_rejected() {
        let records =
            vec![record("hamd", 42, 1.0), record("hamd", 43, 1.0), record("sa", 42, 2.0)];
        assert!(matches!(aggregate(&records), Err(ReportError::MismatchedSeeds(..))));
        let dup = vec![record("sa", 42, 1.0), record("sa", 42, 2.0)];
        assert!(matches!(aggregate(&dup), Err(ReportError::DuplicateCell { .. })));
    }

    #[test]
    fn empty_record_sets_error_instead_of_rendering() {
        assert!(matches!(aggregate(&[]), Err(ReportError::Empty)));
        assert!(matches!(render_report(&[], Format::Csv), Err(ReportError::Empty)));
        assert!(matches!(scaling_table(&[]), Err(ReportError::Empty)));
    }

    #[test]
    fn csv_round_trips_numeric_fields_exactly() {
        let table = multiseed_table(&worked_example()).expect("table");
        let csv = table.render(Format::Csv);
        let mut lines = csv.lines();
        let header: Vec<&str> = lines.next().expect("header").split(',').collect();
        assert_eq!(header, ["solver", "median", "std", "wtl_vs_hamd", "median_gap"]);
        let sa_line: Vec<&str> =
            lines.find(|l| l.starts_with("sa,")).expect("sa row").split(',').collect();
        assert_eq!(sa_line[1].parse::<f64>().unwrap(), 1208.07);
        let agg = aggregate(&worked_example()).expect("aggregate");
        assert_eq!(sa_line[2].parse::<f64>().unwrap(), agg.solvers[1].std);
        assert_eq!(sa_line[4].parse::<f64>().unwrap(), agg.solvers[1].median_gap.unwrap());
    }

    #[test]
    fn table_text_uses_reference_precision() {
        let table = multiseed_table(&worked_example()).expect("table");
        let text = table.render(Format::TableText);
        assert!(text.contains("1208.07"));
        assert!(text.contains("+83.8%"), "text:\n{text}");
        assert!(text.contains("0/0/3"));
        assert!(text.contains("---"));
    }

    #[test]
    fn render_report_groups_by_experiment_tag() {
        let files = render_report(&worked_example(), Format::Csv).expect("render");
        let names: Vec<&str> = files.iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(names, ["multiseed-multiseed.csv", "multiseed-feasibility.csv"]);
        for (_, content) in &files {
            assert!(!content.is_empty());
        }
    }

    #[test]
    fn unknown_format_is_rejected() {
        assert!(matches!(
            "yaml".parse::<Format>(),
            Err(ReportError::UnknownFormat(f)) if f == "yaml"
        ));
        assert_eq!("csv".parse::<Format>().unwrap(), Format::Csv);
        assert_eq!("table".parse::<Format>().unwrap(), Format::TableText);
    }
}
