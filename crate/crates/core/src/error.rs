use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("item position {index} out of range for an assortment of {len} items")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid context vector: {0}")]
    InvalidContext(String),

    #[error("invalid assortment: {0}")]
    InvalidAssortment(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{count} feasible assortments exceed the enumeration limit of {limit}; reduce N or K")]
    EnumerationLimit { count: u128, limit: u128 },

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("cannot aggregate runs: {0}")]
    Aggregation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
