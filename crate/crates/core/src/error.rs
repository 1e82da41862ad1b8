use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("vertex {vertex} is not dominated by the given set")]
    NotDominating { vertex: usize },

    #[error("graph has {n} vertices, above the exact-enumeration limit of {limit}")]
    GraphTooLarge { n: usize, limit: usize },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("index {index} out of range (size {len})")]
    Index { index: usize, len: usize },

    #[error("weight row {row} is invalid: {msg}")]
    Weights { row: usize, msg: String },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("learner state error: {0}")]
    State(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("activation schedule exhausted at step {0}")]
    ScheduleExhausted(usize),

    #[error("loss source exhausted at step {0}")]
    LossExhausted(usize),

    #[error("aggregation tree capacity {0} exceeded")]
    Capacity(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
