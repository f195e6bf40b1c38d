use thiserror::Error;

use crate::estimator::RunTrace;

pub type Result<T, E = QstError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum QstError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error("non-finite entries after update")]
    NonFinite,

    #[error("divergence at round {round}: non-finite iterate")]
    Diverged { round: usize, trace: Box<RunTrace> },

    #[error("degenerate update: {0}")]
    Degenerate(String),

    #[error("geometric median did not converge after {iterations} iterations")]
    NoConvergence {
        iterations: usize,
        best: Box<crate::initializer::GeometricMedian>,
    },

    #[error("unsupported size: {0}")]
    UnsupportedSize(String),

    #[error("malformed state file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> QstError {
    QstError::InvalidArgument(msg.into())
}

pub(crate) fn mismatch(msg: impl Into<String>) -> QstError {
    QstError::DimensionMismatch(msg.into())
}
