use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("group has free rank {0}; operation requires a finite group")]
    InfiniteGroup(usize),

    #[error("{0} is not a prime")]
    NotPrime(u64),

    #[error("enumeration bound exceeded: {what} needs {needed}, limit is {limit}")]
    BoundExceeded {
        what: &'static str,
        needed: String,
        limit: String,
    },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("modulus mismatch: expected {expected}, found {found}")]
    Modulus { expected: u64, found: u64 },

    #[error("matrix is not alternating")]
    NotAlternating,

    #[error("map is not surjective")]
    NotSurjective,

    #[error("no C-symmetric witness exists for this map")]
    NoWitness,

    #[error("group is not a {0}-group")]
    NotPGroup(u64),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("entry distribution is not balanced: {0}")]
    Unbalanced(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
