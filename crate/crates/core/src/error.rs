//! Crate-wide error type.

use thiserror::Error;

/// Errors reported by the detection/estimation machinery.
#[derive(Debug, Error)]
pub enum Error {
    /// An input violated a documented precondition (empty sample set, prior
    /// not summing to one, mismatched dimensions, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A numerical routine left its domain of validity (negative posterior
    /// cost beyond round-off, non positive definite matrix, ...).
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Threshold calibration could not meet its target.
    #[error("calibration failure: {0}")]
    Calibration(String),

    /// A serialized artifact could not be parsed.
    #[error("parse failure: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Convenience alias used throughout the crate.
pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    pub(crate) fn calibration(msg: impl Into<String>) -> Self {
        Error::Calibration(msg.into())
    }

    pub(crate) fn parse(msg: impl Into<String>) -> Self {
        Error::Parse(msg.into())
    }
}
