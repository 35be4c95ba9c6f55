use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid encoder: {0}")]
    InvalidEncoder(String),

    #[error("dibit value {0} out of range")]
    InvalidDibit(u8),

    #[error("symbol magnitude {0} is not 1")]
    NotUnitMagnitude(f64),

    #[error("transform size {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("autocovariance is ill-conditioned at order {order} (error power ratio {ratio:e})")]
    IllConditioned { order: usize, ratio: f64 },

    #[error("autocovariance matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("prediction order {0} is not supported here")]
    UnsupportedOrder(usize),

    #[error("sequence length {0} exceeds the exhaustive search budget")]
    ExhaustiveBudget(usize),

    #[error("unknown detector `{0}`")]
    UnknownDetector(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
