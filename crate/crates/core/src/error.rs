use thiserror::Error;

/// Errors raised by the numerical routines.
///
/// Variants are grouped by how a front end should react: `Parse` and
/// `Argument` are caller mistakes, `Domain` and `Index` reject values outside
/// a routine's mathematical domain, `Resource`, `Divergent` and `Numerical`
/// report limits that were hit while computing.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parse error at `{token}`: {reason}")]
    Parse { token: String, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("index {index} out of range (valid range 1..={len})")]
    Index { index: usize, len: usize },

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("divergent: {0}")]
    Divergent(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn parse(token: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Parse {
            token: token.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
