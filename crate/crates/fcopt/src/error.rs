//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by problem construction, oracles and solvers.
#[derive(Debug, Error)]
pub enum FcError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not symmetric positive definite: {0}")]
    NotSpd(String),

    #[error("condition number undefined: {0}")]
    UndefinedConditionNumber(String),

    #[error("declared constants are inconsistent: {0}")]
    InconsistentConstants(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("method not applicable: {0}")]
    Inapplicable(String),

    #[error("subproblem model is infeasible: {0}")]
    ModelInfeasible(String),

    #[error("solver failed to converge: {context} (residual {residual:.3e})")]
    ConvergenceFailure { context: String, residual: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("problem file error: {0}")]
    ProblemFile(String),

    #[error("unknown corpus entry: {0}")]
    UnknownCorpusEntry(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, FcError>;
