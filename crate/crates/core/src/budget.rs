//! Shared compute-budget type for all solvers.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// How long a solver may run.
///
/// Wall-clock budgets are the benchmarking default and are checked against a
/// monotonic clock at least once per outer step, so overshoot is bounded by a
/// single step. Iteration budgets make runs bit-reproducible for a fixed
/// seed; each solver documents what one iteration means for it (a batched
/// dynamics step or ILS step for the hybrid solver, a sweep for annealing, a
/// flip for tabu).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Budget {
    /// Wall-clock seconds; must be finite and positive.
    WallSecs(f64),
    /// Solver iterations; must be positive.
    Iterations(u64),
}

/// Rejected budget values.
#[derive(Debug, Error)]
pub enum BudgetError {
    #[error("wall-clock budget must be positive and finite, got {0}")]
    BadWallSecs(f64),
    #[error("iteration budget must be positive")]
    ZeroIterations,
}

impl Budget {
    /// Validates the budget value.
    pub fn validate(self) -> Result<Self, BudgetError> {
        match self {
            Budget::WallSecs(s) if !(s.is_finite() && s > 0.0) => {
                Err(BudgetError::BadWallSecs(s))
            }
            Budget::Iterations(0) => Err(BudgetError::ZeroIterations),
            ok => Ok(ok),
        }
    }

    /// True for wall-clock budgets.
    pub fn is_wall_clock(self) -> bool {
        matches!(self, Budget::WallSecs(_))
    }
}
