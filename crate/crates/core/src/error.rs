use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("row index {index} out of range for {len} rows")]
    IndexOutOfRange { index: usize, len: usize },

    /// Silhouette needs at least two clusters.
    #[error("silhouette undefined: labeling has {k} cluster(s), at least 2 required")]
    SilhouetteUndefined { k: usize },

    #[error("sample size {size} invalid for {n} points (need 2 <= L <= N)")]
    InvalidSampleSize { size: usize, n: usize },

    #[error("requested {k} clusters but dataset has only {n} points")]
    TooManyClusters { k: usize, n: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid k range [{k_min}, {k_max}] for {n} points")]
    InvalidKRange { k_min: usize, k_max: usize, n: usize },

    #[error("unknown cluster id {0}")]
    UnknownCluster(usize),

    #[error("noise level {0} must lie in [0, 1)")]
    InvalidNoiseLevel(f64),

    #[error("column '{column}': {message}")]
    Column { column: String, message: String },

    #[error("row {row}, column '{column}': cannot parse '{value}' as a number")]
    ParseNumber { row: usize, column: String, value: String },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("schema: {0}")]
    Schema(String),
}

pub type Result<T> = std::result::Result<T, Error>;
