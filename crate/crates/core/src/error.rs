use thiserror::Error;

/// Errors surfaced by every module of the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("line {line}: polynomial is not homogeneous (found degrees {found:?})")]
    NonHomogeneous { line: usize, found: Vec<u32> },

    #[error("line {line}: form has degree {degree}, forms must have degree at least 2")]
    DegreeTooLow { line: usize, degree: u32 },

    #[error("line {line}: polynomial cancels to zero")]
    ZeroPolynomial { line: usize },

    #[error("line {line}: variable x{index} outside x1..x{n}")]
    VariableOutOfRange { line: usize, index: u64, n: usize },

    #[error("system has no forms")]
    EmptySystem,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("modulus {0} is not prime")]
    CompositeModulus(u64),

    #[error("budget exceeded for {what}: estimated cost {cost} > limit {limit}")]
    Budget {
        what: String,
        cost: u128,
        limit: u128,
    },

    #[error("invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn budget(what: impl Into<String>, cost: u128, limit: u128) -> Self {
        Error::Budget {
            what: what.into(),
            cost,
            limit,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
