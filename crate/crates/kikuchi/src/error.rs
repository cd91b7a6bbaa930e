use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("index {index} out of range for C({n},{ell}) = {dim}")]
    IndexOutOfRange { index: u64, n: usize, ell: usize, dim: u64 },
    #[error("malformed subset: {0}")]
    MalformedSubset(String),
    #[error("dimension {dim} exceeds cap {cap}")]
    DimensionCap { dim: u64, cap: u64 },
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
