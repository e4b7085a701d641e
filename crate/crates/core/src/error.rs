use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("need at least {needed} points, got {got}")]
    InsufficientPoints { needed: usize, got: usize },

    #[error("singular kernel: points {0:?} and {1:?} coincide")]
    SingularKernel(Vec<f64>, Vec<f64>),

    #[error("degenerate density: every candidate has zero density after flooring")]
    DegenerateDensity,

    #[error("degenerate candidate pool: no candidate left after de-duplication")]
    DegeneratePool,

    #[error("unsupported dimension {0}; supply per-coordinate marginals")]
    UnsupportedDimension(usize),

    #[error("invalid data at row {row}: {msg}")]
    InvalidData { row: usize, msg: String },

    #[error("filter degeneracy at t = {t}: every particle weight is zero")]
    FilterDegeneracy { t: usize },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("autocorrelation undefined for a series with zero variance")]
    UndefinedAcf,

    #[error("internal consistency failure: {0}")]
    InternalConsistency(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
