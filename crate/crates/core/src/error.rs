//! Error type shared by every module.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// The construction cannot be applied to this input (e.g. a missing-data
    /// instance of a graph without zero entries).
    #[error("degenerate instance: {0}")]
    DegenerateInstance(String),

    /// The operation received an input that leaves its output undetermined
    /// (e.g. a closed-form update against an all-zero factor).
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// A claimed biclique covers a non-edge, or an extracted vertex-set pair
    /// fails the completeness requirement.
    #[error("constraint violation: {0}")]
    ConstraintViolation(String),

    /// A derived quantity landed outside its admissible range, which signals
    /// a violated caller-side precondition.
    #[error("inconsistent result: {0}")]
    Inconsistency(String),

    #[error("parse error in {path} at line {line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn parse(path: &str, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.to_string(),
            line,
            msg: msg.into(),
        }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
