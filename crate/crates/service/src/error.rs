use std::path::PathBuf;

use mnemex_core::{EntryId, Error as CoreError};

/// Position-reporting failure while reading the event log.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{path}: line {line} (byte offset {byte_offset}): {reason}")]
pub struct LogError {
    pub path: PathBuf,
    pub line: usize,
    pub byte_offset: u64,
    pub reason: String,
}

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("unknown entry {0}")]
    NotFound(EntryId),

    #[error("{0}")]
    Invalid(String),

    #[error("{0}")]
    BadRequest(String),

    #[error("a decay run is already in progress")]
    DecayInProgress,

    #[error("summarizer failed: {0}")]
    Summarizer(String),

    #[error(transparent)]
    Log(#[from] LogError),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Internal(String),
}

impl ServiceError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        ServiceError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<CoreError> for ServiceError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::UnknownEntry(id) => ServiceError::NotFound(id),
            CoreError::Summarizer(msg) => ServiceError::Summarizer(msg),
            CoreError::DimensionMismatch { .. }
            | CoreError::ZeroVector
            | CoreError::NonFinite
            | CoreError::NotUnitNorm { .. }
            | CoreError::UtilityOutOfRange { .. }
            | CoreError::InvalidConfig(_)
            | CoreError::EmptyEmbeddingText
            | CoreError::EmptySummaryInput
            | CoreError::TurnRegression { .. } => ServiceError::Invalid(e.to_string()),
            other => ServiceError::Internal(other.to_string()),
        }
    }
}

pub type Result<T, E = ServiceError> = std::result::Result<T, E>;
