use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid URI {uri:?}: {reason}")]
    InvalidUri { uri: String, reason: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("replacement cycle among {0:?}")]
    DeprecationCycle(Vec<String>),

    #[error("replacement chain starting at {start} is longer than {limit} steps")]
    DeprecationChainTooLong { start: String, limit: usize },

    #[error("cycle among {0:?}")]
    Cycle(Vec<String>),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{0} not found")]
    NotFound(String),

    #[error("provider failure for {uri}: {message}")]
    Provider { uri: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}
