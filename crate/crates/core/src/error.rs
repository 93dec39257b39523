use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CoreError {
    #[error("malformed algebraic data: {0}")]
    MalformedData(String),
    #[error("substitution violates restrictions: {0}")]
    BadSubstitution(String),
    #[error("multiplication table is not associative: {0}")]
    NotAssociative(String),
    #[error("instance too large: {0}")]
    TooLarge(String),
    #[error("unsupported field order {0} (expected 2, 3, 4 or 5)")]
    UnsupportedField(u32),
    #[error("witness does not satisfy the contraction preconditions: {0}")]
    BadWitness(String),
    #[error("unrecognised core in family record: {0}")]
    UnknownCore(String),
    #[error("antichain of size {0} has no stabiliser description")]
    UnsupportedAntichain(usize),
    #[error("subspace is not a central ideal: {0}")]
    NotCentralIdeal(String),
    #[error("invalid poset: {0}")]
    InvalidPoset(String),
}

pub type Result<T, E = CoreError> = std::result::Result<T, E>;
