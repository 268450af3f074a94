//! Error taxonomy shared by every module.
//!
//! Errors are reserved for contract violations (bad arguments, unsatisfiable
//! requests, malformed input files, numeric breakdown). Physically meaningful
//! "failures" such as a slipped grasp are ordinary return values, not errors.

use thiserror::Error;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated a documented precondition.
    #[error("domain error: {0}")]
    Domain(String),

    /// A lookup fell outside the range covered by tabulated data.
    #[error("range error: {0}")]
    Range(String),

    /// No parameter value can satisfy the request.
    #[error("no solution: {0}")]
    NoSolution(String),

    /// A configuration failed validation; every violated field is listed.
    #[error("invalid configuration:\n{}", .violations.join("\n"))]
    Validation { violations: Vec<String> },

    /// A computation produced a non-finite value.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// A request named an unknown mode or kind.
    #[error("usage error: {0}")]
    Usage(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn range(msg: impl Into<String>) -> Self {
        Error::Range(msg.into())
    }

    pub fn no_solution(msg: impl Into<String>) -> Self {
        Error::NoSolution(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    /// Process exit code for the command-line tools.
    ///
    /// 1 = validation/usage/input problem, 2 = numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numeric(_) | Error::Domain(_) | Error::Range(_) | Error::NoSolution(_) => 2,
            _ => 1,
        }
    }
}
