use thiserror::Error;

use crate::sdp::SolveStats;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimensions: {0}")]
    InvalidDims(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("subsystem index {index} out of range for {count} subsystems")]
    InvalidSubsystem { index: usize, count: usize },

    #[error("matrix is not Hermitian (residual {residual:.3e}, allowed {allowed:.3e})")]
    NotHermitian { residual: f64, allowed: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown map label `{0}`")]
    UnknownMap(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("no exact formula is known for map `{0}`")]
    NoExactFormula(String),

    #[error("solver failure ({status}): {detail}; {stats}")]
    Solver {
        status: String,
        detail: String,
        stats: SolveStats,
    },

    /// The requested object does not exist for this input (for instance a
    /// state with no negative eigenvalues has no non-positive subspace).
    #[error("{0}")]
    NotFound(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
