use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the retrieval engine and the evaluation kit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },

    #[error("duplicate document id {0:?}")]
    DuplicateId(String),

    #[error("embeddings missing document id {0:?}")]
    MissingEmbedding(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("corpus contains no tokens")]
    NoTokens,

    #[error("query is empty after tokenization")]
    EmptyQuery,

    #[error("unknown document id {0:?}")]
    UnknownDoc(String),

    #[error("parameter {name} = {value} out of range ({expected})")]
    OutOfRange {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("invalid value {value:?} for {what}")]
    Invalid { what: &'static str, value: String },

    #[error("query {0:?} has no relevance judgments")]
    UnjudgedQuery(String),

    #[error("ranked lists belong to different queries ({0:?} vs {1:?})")]
    QueryMismatch(String, String),

    #[error("index integrity check failed: {0}")]
    Integrity(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn malformed(line: usize, message: impl Into<String>) -> Self {
        Error::Malformed {
            line,
            message: message.into(),
        }
    }

    /// True for errors caused by bad input data rather than the environment.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
