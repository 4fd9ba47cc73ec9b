use thiserror::Error;

use crate::model::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid problem: {}", join(.0))]
    InvalidProblem(Vec<Violation>),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The simplex iteration cap was hit, which only happens on numerically
    /// pathological inputs.
    #[error("simplex exceeded {iterations} iterations")]
    CyclingGuardExceeded { iterations: usize },

    /// The boundary LP is unbounded, so the feasible set is not bounded.
    #[error("feasible set is unbounded along the search direction")]
    UnboundedSet,

    /// The anchor of a boundary query is not feasible even for a zero step.
    #[error("boundary query anchored at an infeasible state")]
    InfeasibleAnchor,

    #[error("initial state is not feasible")]
    InfeasibleInit,

    #[error("active-set QP exceeded {iterations} iterations")]
    MaxIterations { iterations: usize },

    #[error("state constraint set is unbounded")]
    UnboundedStateSet,

    #[error("more than {cap} consecutive rejections on one segment")]
    ResampleCapExceeded { cap: usize },

    #[error("grid oracle supports at most 3 state dimensions, got {0}")]
    DimensionTooHigh(usize),

    #[error("expected count {expected:.3} in cell group {cell} is below 5")]
    InsufficientSamples { cell: usize, expected: f64 },

    /// An emitted sample could not be labeled; indicates a solver inconsistency.
    #[error("labeling solve reported an infeasible sample")]
    LabelingFailed,
}

impl Error {
    /// Stable upper-case identifier used on the CLI diagnostic stream.
    pub fn name(&self) -> &'static str {
        match self {
            Error::InvalidProblem(_) => "INVALID_PROBLEM",
            Error::InvalidArgument(_) => "INVALID_ARGUMENT",
            Error::CyclingGuardExceeded { .. } => "CYCLING_GUARD_EXCEEDED",
            Error::UnboundedSet => "UNBOUNDED_SET",
            Error::InfeasibleAnchor => "INFEASIBLE_ANCHOR",
            Error::InfeasibleInit => "INFEASIBLE_INIT",
            Error::MaxIterations { .. } => "MAX_ITERATIONS",
            Error::UnboundedStateSet => "UNBOUNDED_STATE_SET",
            Error::ResampleCapExceeded { .. } => "RESAMPLE_CAP_EXCEEDED",
            Error::DimensionTooHigh(_) => "DIMENSION_TOO_HIGH",
            Error::InsufficientSamples { .. } => "INSUFFICIENT_SAMPLES",
            Error::LabelingFailed => "LABELING_FAILED",
        }
    }
}

fn join(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
