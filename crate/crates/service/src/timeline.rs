//! Timeline view of the episodic store.

use mnemex_core::{EntryId, MemoryEntry, MemoryKind, ScoreBreakdown};
use serde::{Deserialize, Serialize};

pub const PREVIEW_CHARS: usize = 120;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeStatus {
    Retained,
    DecayFlagged,
    Pinned,
    ForgetMarked,
}

/// Pinned and forget-marked come from the user's utility and override the
/// score; otherwise an entry below the threshold is flagged.
pub fn status(user_utility: u32, n_max: u32, total: f64, theta_decay: f64) -> NodeStatus {
    if user_utility == n_max {
        NodeStatus::Pinned
    } else if user_utility == 0 {
        NodeStatus::ForgetMarked
    } else if total < theta_decay {
        NodeStatus::DecayFlagged
    } else {
        NodeStatus::Retained
    }
}

pub fn preview(content: &str) -> String {
    content.chars().take(PREVIEW_CHARS).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineNode {
    pub entry_id: EntryId,
    pub turn: u64,
    pub kind: MemoryKind,
    pub content_preview: String,
    pub score: ScoreBreakdown,
    pub status: NodeStatus,
    pub user_utility: u32,
    pub consolidation_flag: bool,
}

impl TimelineNode {
    pub fn new(entry: &MemoryEntry, score: ScoreBreakdown, n_max: u32, theta_decay: f64) -> Self {
        Self {
            entry_id: entry.id,
            turn: entry.turn,
            kind: entry.kind,
            content_preview: preview(&entry.content),
            status: status(entry.user_utility, n_max, score.total, theta_decay),
            score,
            user_utility: entry.user_utility,
            consolidation_flag: entry.consolidation_flag,
        }
    }
}
