//! Heuristic solvers: the per-destination two-stage method, the no-hub
//! baseline and a first-improvement local search.

mod local_search;
mod no_hub;
mod two_stage;

use std::cmp::Ordering;

use thiserror::Error;

use crate::cost::CostError;
use crate::network::ValidationReport;
use crate::solution::{EvaluateError, StructureError, ViolationReport};

pub use local_search::{local_search_improve, LocalSearchOptions, LocalSearchResult, Moves};
pub use no_hub::{solve_no_hubs, NoHubOptions, NoHubResult};
pub use two_stage::{solve_single_destination, solve_two_stage, DestinationResult, TwoStageResult, DEFAULT_HUB_BUDGET};

#[derive(Debug, Error)]
pub enum HeuristicError {
    #[error("instance is invalid:\n{0}")]
    InvalidInstance(ValidationReport),
    #[error("start solution is infeasible:\n{0}")]
    InfeasibleStart(ViolationReport),
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error("destination index {0} out of range")]
    UnknownDestination(usize),
}

/// Relative tolerance for "strictly better".
pub(crate) const REL_TOL: f64 = 1e-9;

pub(crate) fn strictly_less(a: f64, b: f64) -> bool {
    // The tolerance term would turn an infinite `b` into NaN.
    if b.is_infinite() {
        return a < b;
    }
    a < b - REL_TOL * b.abs().max(1.0)
}

/// Compares `(cost, id)` keys: lower cost first, then the smaller id.
pub(crate) fn cost_then_id(a: (f64, &str), b: (f64, &str)) -> Ordering {
    a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1))
}

impl From<EvaluateError> for HeuristicError {
    fn from(e: EvaluateError) -> Self {
        match e {
            EvaluateError::Structure(e) => HeuristicError::Structure(e),
            EvaluateError::Infeasible(r) => HeuristicError::InfeasibleStart(r),
            EvaluateError::Cost(e) => HeuristicError::Cost(e),
        }
    }
}

pub(crate) fn validate(instance: &crate::network::Instance) -> Result<(), HeuristicError> {
    let report = crate::network::validate_instance(instance);
    if report.is_valid() {
        Ok(())
    } else {
        Err(HeuristicError::InvalidInstance(report))
    }
}
