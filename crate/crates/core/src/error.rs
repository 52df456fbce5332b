use thiserror::Error;

/// Errors raised while validating inputs, fitting hypotheses, or solving games.
#[derive(Debug, Error)]
pub enum MroError {
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("weight column `{name}` row {row}: {reason}")]
    InvalidWeight { name: String, row: usize, reason: String },

    #[error("invalid weight family: {0}")]
    InvalidFamily(String),

    #[error("invalid function class: {0}")]
    InvalidClass(String),

    #[error("hypothesis violates class constraint: {0}")]
    ConstraintViolation(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("unsupported combination: {0}")]
    Unsupported(String),

    #[error("oracle failure: {0}")]
    Oracle(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("replicate n={n} #{replicate} failed: {source}")]
    Replicate {
        n: usize,
        replicate: usize,
        #[source]
        source: Box<MroError>,
    },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, MroError>;
