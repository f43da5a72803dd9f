use thiserror::Error;

use crate::memory::EntryId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("zero vector has no direction")]
    ZeroVector,

    #[error("vector contains non-finite components")]
    NonFinite,

    #[error("embedding is not unit-norm (norm {norm})")]
    NotUnitNorm { norm: f64 },

    #[error("clock skew: current time {current} precedes entry time {entry}")]
    ClockSkew { current: f64, entry: f64 },

    #[error("user utility {value} outside [0, {n_max}]")]
    UtilityOutOfRange { value: u32, n_max: u32 },

    #[error("invalid decay config: {0}")]
    InvalidConfig(String),

    #[error("unknown entry {0}")]
    UnknownEntry(EntryId),

    #[error("duplicate entry id {0}")]
    DuplicateEntry(EntryId),

    #[error("turn counter cannot move backwards ({current} -> {requested})")]
    TurnRegression { current: u64, requested: u64 },

    #[error("semantic fact text must be nonempty")]
    EmptyFactText,

    #[error("semantic fact needs at least one source entry")]
    EmptyFactSources,

    #[error("nothing to summarize")]
    EmptySummaryInput,

    #[error("summarizer failed: {0}")]
    Summarizer(String),

    #[error("text has no embeddable tokens")]
    EmptyEmbeddingText,

    #[error("invalid strategy: {0}")]
    InvalidStrategy(String),

    #[error("replay conflict: {0}")]
    Replay(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("export failed: {0}")]
    Export(String),
}
