use thiserror::Error;

/// Errors shared by all modules of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("total dimension {requested} exceeds the exact-engine cap of {cap}")]
    DimensionCap { requested: usize, cap: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("state fails physicality checks: {0}")]
    InvalidState(String),

    #[error("no unmeasured copy when t = k")]
    NoUnmeasuredCopy,

    #[error("circuit parse error at line {line}: {msg}")]
    CircuitParse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
