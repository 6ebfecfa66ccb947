use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Operands disagree on dimension or theta.
    #[error("invalid pair: {0}")]
    InvalidPair(String),

    #[error("truncation overflow: {0}")]
    TruncationOverflow(String),

    #[error("insufficient truncation: dim {dim} must exceed {required:.3}")]
    InsufficientTruncation { dim: usize, required: f64 },

    #[error("index {index} out of range (limit {limit})")]
    OutOfRange { index: usize, limit: usize },

    #[error("invalid witness: Lipschitz seminorm {0} exceeds the unit ball")]
    InvalidWitness(f64),

    #[error("inconsistent: {0}")]
    Inconsistent(String),

    #[error("precondition failed: {0}")]
    PreconditionFailed(String),

    #[error("not implemented: {0}")]
    NotImplemented(String),

    #[error("singular parameter: {0}")]
    SingularParameter(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
