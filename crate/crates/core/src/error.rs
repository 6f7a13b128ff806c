//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by construction, validation, and numerical routines.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter was outside its documented domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// A requested size would exceed a table or memory capacity.
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    /// A numerical operation became untrustworthy (e.g. a singular or
    /// ill-conditioned matrix).
    #[error("numerical failure: {0}")]
    Numeric(String),
    /// An I/O failure while reading configuration or writing results.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn capacity(msg: impl Into<String>) -> Self {
        Error::Capacity(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }
}
