use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("parameter {value} outside domain [{lo}, {hi}]")]
    OutOfDomain { value: f64, lo: f64, hi: f64 },
    #[error("alpha must lie in (0, 1), got {0}")]
    AlphaOutOfRange(f64),
    #[error("empty sample")]
    EmptySample,
    #[error("invalid model configuration: {0}")]
    InvalidModel(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("certification failed: {0}")]
    CertificationFailed(String),
    #[error("unsupported combination: {0}")]
    Unsupported(String),
    #[error("{0}")]
    NonPositiveValue(String),
    #[error("net size {0} exceeds the desk-scale limit of 10^7 centers")]
    NetTooLarge(u128),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
