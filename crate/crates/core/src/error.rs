use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid lottery: {0}")]
    InvalidLottery(String),

    #[error("invalid pricing: {0}")]
    InvalidPricing(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("bundle references lottery {index} but the menu has {len}")]
    InvalidBundleIndex { index: usize, len: usize },

    #[error("search space of {size} candidates exceeds the guard of {guard}")]
    GuardExceeded { size: f64, guard: f64 },

    #[error("simplex numerical failure: {0}")]
    Numerical(String),

    #[error("LP is {0}")]
    LpStatus(&'static str),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
