//! Library-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violates a domain invariant (e.g. `gamma <= 0`, `sigma^2 + delta^2 <= 0`).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Malformed or inconsistent input data; carries enough context to locate the offender.
    #[error("data error: {0}")]
    Data(String),

    /// CSV parse failure at a specific line (1-based, counting the header).
    #[error("{path}:{line}: {reason}")]
    Csv {
        path: String,
        line: usize,
        reason: String,
    },

    /// Configuration file or flag problem, naming the offending key.
    #[error("config error: {0}")]
    Config(String),

    /// A numeric routine left its domain (non-finite parameters mid-training, etc.).
    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
