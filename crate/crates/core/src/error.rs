use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid score: {0}")]
    InvalidScore(f64),

    #[error("invalid threshold {0}: must lie in [0, 1]")]
    InvalidThreshold(f64),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("write to {path} failed after {written} records: {source}")]
    PartialWrite {
        path: PathBuf,
        written: u64,
        #[source]
        source: std::io::Error,
    },

    #[error("pair {id}: unencodable in TSV; use JSONL")]
    UnencodableTsv { id: String },

    #[error("malformed record: {0}")]
    Malformed(String),

    #[error("batch too large: {len} texts exceeds provider limit {limit}")]
    BatchTooLarge { len: usize, limit: usize },

    #[error("embedding dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid embedding: {0}")]
    InvalidEmbedding(String),

    #[error("undefined similarity: zero vector")]
    UndefinedSimilarity,

    /// Transient provider failure that survived the retry budget.
    #[error("embedding provider unavailable after {attempts} attempts: {message}")]
    ProviderUnavailable { attempts: u32, message: String },

    /// Non-retryable provider failure (bad request, malformed response).
    #[error("embedding provider error: {0}")]
    Provider(String),

    #[error("empty evaluation set")]
    EmptyEvalSet,

    #[error("metric {metric} failed: {source}")]
    Metric {
        metric: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("pair {0} could not be scored and no unscored output is configured")]
    NoUnscoredSink(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by the caller's input or configuration rather
    /// than by the environment or a provider.
    pub fn is_user_error(&self) -> bool {
        match self {
            Error::InvalidScore(_)
            | Error::InvalidThreshold(_)
            | Error::UnencodableTsv { .. }
            | Error::Malformed(_)
            | Error::BatchTooLarge { .. }
            | Error::EmptyEvalSet
            | Error::Config(_)
            | Error::NoUnscoredSink(_)
            | Error::Json(_) => true,
            Error::Io { source, .. } => matches!(
                source.kind(),
                std::io::ErrorKind::NotFound | std::io::ErrorKind::PermissionDenied
            ),
            Error::Metric { source, .. } => source.is_user_error(),
            _ => false,
        }
    }
}
