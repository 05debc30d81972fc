use thiserror::Error;

pub type Result<T> = std::result::Result<T, QaserError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QaserError {
    /// A parameter lies outside the region where the model is defined.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    /// The integrated state overflowed or produced NaN.
    #[error("non-finite state encountered at t = {time}")]
    NonFinite { time: f64 },

    #[error("fit failure: {0}")]
    FitFailure(String),

    #[error("growth rate did not converge: fit residual {residual:.3e} exceeds {threshold:.3e}")]
    NonConvergence { residual: f64, threshold: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unknown column `{0}`")]
    UnknownColumn(String),
}
