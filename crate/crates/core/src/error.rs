use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("elements belong to different fields: {0:?} vs {1:?}")]
    FieldMismatch(Vec<i64>, Vec<i64>),
    #[error("invalid radicand {0}: must have a squarefree part greater than 1")]
    InvalidRadicand(i64),
    #[error("{0} is not squarefree")]
    NotSquarefree(i64),
    #[error("sign pattern has {got} entries but the field has {expected} generators")]
    SignPatternLength { expected: usize, got: usize },
    #[error("division by zero")]
    DivisionByZero,
    #[error("invalid discriminant {0}: must be 0 or 1 mod 4 and not a square")]
    InvalidDiscriminant(i64),
    #[error("{0} is not an odd prime")]
    NotOddPrime(u64),
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("lemma inapplicable: {0}")]
    Inapplicable(String),
    #[error("no decomposition system matches for eps_{d}: {detail}")]
    NoSystemMatches { d: i64, detail: String },
    #[error("pair ({p}, {q}) does not satisfy {what}")]
    ConditionsNotSatisfied { p: u64, q: u64, what: String },
    #[error("conductor {0} too large: phi(M) must stay below 2^20")]
    ConductorTooLarge(u64),
    #[error("inconsistent rank data: {0}")]
    InconsistentRanks(String),
    #[error("the mu = 0 hypothesis was not asserted")]
    MuAssumptionMissing,
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("internal consistency check failed: {0}")]
    Consistency(String),
}

pub type Result<T> = std::result::Result<T, Error>;
