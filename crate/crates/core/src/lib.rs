//! Agent memory engine: an episodic store of scored interaction records, a
//! semantic store of distilled facts, utility-driven decay between them, and
//! the context-assembly strategies and simulation harness used to compare
//! memory policies over long sessions.

pub mod config;
pub mod consolidation;
pub mod decay;
pub mod embedding;
pub mod episodic;
pub mod error;
pub mod memory;
pub mod scoring;
pub mod semantic;
pub mod sim;
pub mod strategies;
pub mod vector;

pub use config::{DecayConfig, TaskSource, TimeMode};
pub use consolidation::{ExtractiveSummarizer, Summarizer};
pub use decay::{run_decay, DecayReport};
pub use embedding::{Embedder, HashingEmbedder};
pub use episodic::{EpisodicStore, SearchHit};
pub use error::{Error, Result};
pub use memory::{EntryId, MemoryEntry, MemoryKind, NewEntry};
pub use scoring::{utility_score, ScoreBreakdown, TaskContext};
pub use semantic::{FactId, SemanticFact, SemanticStore};
pub use strategies::{ContextBundle, StrategyKind};
pub use vector::Embedding;
