use thiserror::Error;

/// Errors raised by the linear algebra kernel, the channel and measurement
/// generators, the estimators, and the experiment harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix has numeric rank {rank}, expected full column rank {cols}")]
    RankDeficient { rank: usize, cols: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite entry at index {0}")]
    NonFinite(usize),

    #[error("search needs {required} subsets, over the cap of {cap}")]
    SearchBudgetExceeded { required: u128, cap: u128 },

    #[error("invalid config field `{field}`: {message}")]
    Config { field: String, message: String },
}

impl Error {
    pub(crate) fn dims(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
