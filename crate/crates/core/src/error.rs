use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported dimension {0}: the kissing-number table has no entry")]
    UnsupportedDimension(usize),

    /// An exponential-time search was asked to run on an input larger than its cap.
    #[error("resource limit: {what} has size {size}, above the cap of {cap}")]
    ResourceLimit {
        what: &'static str,
        size: usize,
        cap: usize,
    },

    #[error("inconsistent parameters: {0}")]
    Consistency(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error at row {row}, column '{column}': {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("attribute '{0}' has zero variance and cannot be standardized")]
    ZeroVariance(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
