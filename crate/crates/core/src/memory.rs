//! Episodic memory records.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::vector::Embedding;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntryId(pub u64);

impl fmt::Display for EntryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MemoryKind {
    UserMessage,
    ToolCall,
    AgentAction,
    Observation,
}

impl MemoryKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            MemoryKind::UserMessage => "user_message",
            MemoryKind::ToolCall => "tool_call",
            MemoryKind::AgentAction => "agent_action",
            MemoryKind::Observation => "observation",
        }
    }
}

/// One atomic interaction held in the episodic store.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryEntry {
    pub id: EntryId,
    pub kind: MemoryKind,
    pub content: String,
    /// Logical turn at which the entry was recorded.
    pub turn: u64,
    /// Optional wall-clock stamp in seconds, used only in wall-clock recency mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_clock_secs: Option<f64>,
    pub embedding: Embedding,
    pub user_utility: u32,
    pub consolidation_flag: bool,
}

impl MemoryEntry {
    /// `true` when the user has marked the entry "retain permanently".
    pub fn is_pinned(&self, n_max: u32) -> bool {
        self.user_utility == n_max
    }

    /// `true` when the user has marked the entry "forget".
    pub fn is_forget_marked(&self) -> bool {
        self.user_utility == 0
    }
}

/// An interaction that has not been enrolled yet: the embedding is raw and
/// will be normalized (and dimension-checked) by the store.
#[derive(Debug, Clone)]
pub struct NewEntry {
    pub kind: MemoryKind,
    pub content: String,
    pub embedding: Vec<f64>,
    /// Defaults to 1 ("neutral") when `None`.
    pub user_utility: Option<u32>,
    pub consolidation_flag: bool,
    pub wall_clock_secs: Option<f64>,
}

impl NewEntry {
    pub fn new(kind: MemoryKind, content: impl Into<String>, embedding: Vec<f64>) -> Self {
        Self {
            kind,
            content: content.into(),
            embedding,
            user_utility: None,
            consolidation_flag: false,
            wall_clock_secs: None,
        }
    }

    pub fn with_utility(mut self, u: u32) -> Self {
        self.user_utility = Some(u);
        self
    }

    pub fn flagged(mut self, flag: bool) -> Self {
        self.consolidation_flag = flag;
        self
    }

    pub fn at_wall_clock(mut self, secs: f64) -> Self {
        self.wall_clock_secs = Some(secs);
        self
    }
}
