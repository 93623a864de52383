use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("zero has no factorization")]
    ZeroModulus,

    #[error("{0} is not prime")]
    CompositeBase(u128),

    #[error("prime {0} appears more than once")]
    RepeatedPrime(u128),

    #[error("exponent must be at least 1 (got {0})")]
    ZeroExponent(u32),

    #[error("modulus {0} is not squarefree")]
    NotSquarefree(String),

    #[error("{what} {value} is out of range: {reason}")]
    OutOfRange {
        what: &'static str,
        value: String,
        reason: String,
    },

    #[error("{what} needs {needed} but the cap is {cap}")]
    CapExceeded {
        what: &'static str,
        needed: String,
        cap: String,
    },

    #[error("box meets the wall h_i + ... + h_k = 0 at (i, k) = ({i}, {k})")]
    WallIntersection { i: usize, k: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("correlation methods disagree: sum gives {sum}, direct gives {direct}")]
    MethodDisagreement { sum: String, direct: String },
}

impl Error {
    pub(crate) fn cap(what: &'static str, needed: impl ToString, cap: impl ToString) -> Self {
        Error::CapExceeded {
            what,
            needed: needed.to_string(),
            cap: cap.to_string(),
        }
    }

    pub(crate) fn range(
        what: &'static str,
        value: impl ToString,
        reason: impl Into<String>,
    ) -> Self {
        Error::OutOfRange {
            what,
            value: value.to_string(),
            reason: reason.into(),
        }
    }

    pub fn is_resource_cap(&self) -> bool {
        matches!(self, Error::CapExceeded { .. })
    }
}
