use thiserror::Error;

use crate::lp::LpStatus;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid {field}: {reason}")]
    Invalid { field: &'static str, reason: String },

    #[error("scheme is inconsistent with the prior: residual {residual:e} exceeds {tolerance:e}")]
    Inconsistent { residual: f64, tolerance: f64 },

    /// A solver refused to start because the problem exceeds a size guard.
    #[error("{what} requires {required} but the limit is {limit}")]
    TooLarge {
        what: &'static str,
        required: f64,
        limit: f64,
    },

    #[error("linear program at stage `{stage}` ended with status {status:?}")]
    Lp { stage: &'static str, status: LpStatus },

    #[error("numerical failure at stage `{stage}`: {reason}")]
    Numerical { stage: &'static str, reason: String },
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid {
            field,
            reason: reason.into(),
        }
    }

    pub(crate) fn dims(what: &'static str, expected: usize, found: usize) -> Self {
        Error::DimensionMismatch {
            what,
            expected,
            found,
        }
    }

    /// True for errors produced by size guards rather than bad input or
    /// numerical trouble.
    pub fn is_size_guard(&self) -> bool {
        matches!(self, Error::TooLarge { .. })
    }

    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Lp { .. } | Error::Numerical { .. })
    }
}
