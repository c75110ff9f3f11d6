use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = CurationError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CurationError {
    #[error(transparent)]
    Core(#[from] bitext_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unknown pair {0:?}")]
    UnknownPair(String),

    #[error("conflict: {0}")]
    Conflict(String),

    #[error("invalid request: {0}")]
    Invalid(String),

    #[error("cannot sample {requested} pairs from a corpus of {available}")]
    SampleTooLarge { requested: u64, available: u64 },

    #[error("duplicate pair id {0:?} in review queue")]
    DuplicateId(String),

    #[error("{path}:{line}: corrupt log record: {message}")]
    CorruptLog {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("empty decision log")]
    EmptyLog,

    #[error("empty gold set")]
    EmptyGoldSet,
}

impl CurationError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CurationError::Io {
            path: path.into(),
            source,
        }
    }

    /// Errors caused by the caller's input rather than by the environment.
    pub fn is_user_error(&self) -> bool {
        match self {
            CurationError::Core(e) => e.is_user_error(),
            CurationError::Io { .. } | CurationError::CorruptLog { .. } => false,
            _ => true,
        }
    }
}
