use thiserror::Error;

/// Errors raised by the spectral and ensemble computations.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A truncation or tail bound could not be met within the level cap.
    #[error("capacity error: {0}")]
    Capacity(String),

    /// Input data failed to parse.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A NaN or infinity appeared where a finite value is required.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// The eigensolver could not certify the requested eigenvalues.
    #[error("eigensolver failure: {0}")]
    Solver(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
