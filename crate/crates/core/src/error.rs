use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain mismatch: {0}")]
    DomainMismatch(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("enumeration budget exceeded: {what} has {size} outcomes (budget {budget})")]
    BudgetExceeded { what: String, size: u128, budget: u128 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid arguments: {0}")]
    InvalidArguments(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("tuple arity mismatch: expected {expected}, found {found}")]
    ArityMismatch { expected: usize, found: usize },

    #[error("average over a zero-mass set is undefined")]
    UndefinedAverage,

    #[error("unknown query `{0}`")]
    UnknownQuery(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
