use std::io;

use thiserror::Error;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An input parameter is outside its admissible range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Two objects that must share dimensions do not.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A physical precondition does not hold (e.g. detector inside a source).
    #[error("domain error: {0}")]
    Domain(String),

    /// The forward model could not be assembled for the given geometry.
    #[error("model build error: {0}")]
    Build(String),

    /// A binary or text file does not follow the expected layout.
    #[error("format error: {0}")]
    Format(String),

    #[error("configuration error: {0}")]
    Config(String),

    /// A numerical routine failed (rank deficiency, non-finite values, ...).
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    /// True for errors caused by user input rather than by computation.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Parameter(_) | Error::Shape(_) | Error::Config(_) | Error::Format(_) | Error::Domain(_)
        )
    }
}
