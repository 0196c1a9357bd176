//! Error types shared across the crate.

use std::fmt;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by numerical operations, model construction and filter updates.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A documented precondition was violated by the caller.
    Contract(String),
    /// Two operands disagree on a dimension or length.
    Dimension {
        context: &'static str,
        expected: usize,
        got: usize,
    },
    /// Lookup of a named target or environment failed.
    UnknownName(String),
    /// A non-finite value appeared where only finite values are allowed.
    /// `phase` names the pipeline stage that produced it.
    NonFinite { phase: &'static str, detail: String },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Contract(msg) => write!(f, "contract violation: {msg}"),
            Error::Dimension {
                context,
                expected,
                got,
            } => write!(f, "dimension mismatch in {context}: expected {expected}, got {got}"),
            Error::UnknownName(name) => write!(f, "unknown name: {name}"),
            Error::NonFinite { phase, detail } => {
                write!(f, "non-finite value in phase `{phase}`: {detail}")
            }
        }
    }
}

impl std::error::Error for Error {}

impl Error {
    pub fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }
}
