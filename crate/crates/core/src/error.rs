use thiserror::Error;

/// Errors produced by the solver library.
#[derive(Debug, Error)]
pub enum KskError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite entry at flat index {0}")]
    NonFinite(usize),

    #[error("power iteration did not converge after {iterations} iterations (best estimate {estimate})")]
    NotConverged { iterations: usize, estimate: f64 },

    #[error("zero matrix has no nonzero singular value")]
    ZeroMatrix,

    #[error("matrix is rank deficient (numerical rank {rank} < {cols} columns)")]
    RankDeficient { rank: usize, cols: usize },

    #[error("every row of the iterated system is zero")]
    AllRowsMasked,

    #[error("already converged: residual is zero")]
    AlreadyConverged,

    #[error("row with zero norm cannot define a projection")]
    ZeroRow,

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, KskError>;
