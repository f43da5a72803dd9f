//! Context assembly for the three memory strategies, and the token model.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::config::DecayConfig;
use crate::episodic::EpisodicStore;
use crate::error::{Error, Result};
use crate::memory::{EntryId, MemoryEntry};
use crate::semantic::{FactId, SemanticStore};

pub const DEFAULT_WINDOW_TURNS: u64 = 10;
pub const DEFAULT_K_EPISODIC: usize = 5;
pub const DEFAULT_K_SEMANTIC: usize = 3;

/// Whitespace-delimited token count: the number of maximal non-whitespace runs.
pub fn token_count(text: &str) -> usize {
    text.split_whitespace().count()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StrategyKind {
    SlidingWindow {
        window_turns: u64,
    },
    BasicRag {
        k: usize,
        window_turns: u64,
    },
    Hybrid {
        k_episodic: usize,
        k_semantic: usize,
        window_turns: u64,
        decay_config: DecayConfig,
    },
}

impl StrategyKind {
    pub fn sliding_window() -> Self {
        StrategyKind::SlidingWindow {
            window_turns: DEFAULT_WINDOW_TURNS,
        }
    }

    pub fn basic_rag() -> Self {
        StrategyKind::BasicRag {
            k: DEFAULT_K_EPISODIC,
            window_turns: DEFAULT_WINDOW_TURNS,
        }
    }

    pub fn hybrid(decay_config: DecayConfig) -> Self {
        StrategyKind::Hybrid {
            k_episodic: DEFAULT_K_EPISODIC,
            k_semantic: DEFAULT_K_SEMANTIC,
            window_turns: DEFAULT_WINDOW_TURNS,
            decay_config,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            StrategyKind::SlidingWindow { .. } => "sliding_window",
            StrategyKind::BasicRag { .. } => "basic_rag",
            StrategyKind::Hybrid { .. } => "hybrid",
        }
    }

    pub fn window_turns(&self) -> u64 {
        match self {
            StrategyKind::SlidingWindow { window_turns }
            | StrategyKind::BasicRag { window_turns, .. }
            | StrategyKind::Hybrid { window_turns, .. } => *window_turns,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.window_turns() < 1 {
            return Err(Error::InvalidStrategy("window_turns must be at least 1".into()));
        }
        if let StrategyKind::Hybrid { decay_config, .. } = self {
            decay_config.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContextSource {
    Working,
    Episodic,
    Semantic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Entry(EntryId),
    Fact(FactId),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextItem {
    pub source: ContextSource,
    pub origin: Origin,
    /// Turn of the underlying event (for facts, their latest source turn).
    pub turn: u64,
    pub text: String,
}

/// Ordered context for one turn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextBundle {
    pub items: Vec<ContextItem>,
    pub token_cost: usize,
}

impl ContextBundle {
    pub fn new(items: Vec<ContextItem>) -> Self {
        let token_cost = items.iter().map(|i| token_count(&i.text)).sum();
        Self { items, token_cost }
    }

    /// Items joined by newlines; `token_count(render()) == token_cost`.
    pub fn render(&self) -> String {
        self.items.iter().map(|i| i.text.as_str()).collect::<Vec<_>>().join("\n")
    }

    pub fn entry_ids(&self) -> impl Iterator<Item = EntryId> + '_ {
        self.items.iter().filter_map(|i| match i.origin {
            Origin::Entry(id) => Some(id),
            Origin::Fact(_) => None,
        })
    }
}

fn entry_item(source: ContextSource, e: &MemoryEntry) -> ContextItem {
    ContextItem {
        source,
        origin: Origin::Entry(e.id),
        turn: e.turn,
        text: e.content.clone(),
    }
}

fn in_window(turn: u64, current_turn: u64, window_turns: u64) -> bool {
    turn + window_turns > current_turn
}

fn window_items(history: &[MemoryEntry], current_turn: u64, window_turns: u64) -> Vec<ContextItem> {
    history
        .iter()
        .filter(|e| in_window(e.turn, current_turn, window_turns))
        .map(|e| entry_item(ContextSource::Working, e))
        .collect()
}

/// Every entry from the last `window_turns` turns (ending at `current_turn`),
/// in time order.
pub fn assemble_sliding_window(history: &[MemoryEntry], current_turn: u64, window_turns: u64) -> ContextBundle {
    ContextBundle::new(window_items(history, current_turn, window_turns))
}

/// Episodic hits for `query` that are not already part of the window.
fn retrieval_items(
    store: &EpisodicStore,
    query: &[f64],
    k: usize,
    window: &HashSet<EntryId>,
) -> Result<Vec<ContextItem>> {
    let hits = store.top_k_similar(query, k)?;
    hits.iter()
        .filter(|h| !window.contains(&h.entry_id))
        .map(|h| Ok(entry_item(ContextSource::Episodic, store.get(h.entry_id)?)))
        .collect()
}

/// Window first, then the top-k episodic hits outside it in similarity order.
pub fn assemble_basic_rag(store: &EpisodicStore, query: &[f64], k: usize, window_turns: u64) -> Result<ContextBundle> {
    let history = store.get_all_in_time_order();
    let mut items = window_items(&history, store.current_turn(), window_turns);
    let window: HashSet<EntryId> = items.iter().filter_map(entry_of).collect();
    items.extend(retrieval_items(store, query, k, &window)?);
    Ok(ContextBundle::new(items))
}

/// Semantic facts, then episodic hits outside the window, then the window.
pub fn assemble_hybrid(
    episodic: &EpisodicStore,
    semantic: &SemanticStore,
    query: &[f64],
    k_episodic: usize,
    k_semantic: usize,
    window_turns: u64,
) -> Result<ContextBundle> {
    let history = episodic.get_all_in_time_order();
    let window_part = window_items(&history, episodic.current_turn(), window_turns);
    let window: HashSet<EntryId> = window_part.iter().filter_map(entry_of).collect();

    let mut items: Vec<ContextItem> = semantic
        .query_facts(query, k_semantic)?
        .iter()
        .filter_map(|h| semantic.get(h.fact_id))
        .map(|f| ContextItem {
            source: ContextSource::Semantic,
            origin: Origin::Fact(f.id),
            turn: f.source_turn,
            text: f.text.clone(),
        })
        .collect();
    items.extend(retrieval_items(episodic, query, k_episodic, &window)?);
    items.extend(window_part);
    Ok(ContextBundle::new(items))
}

fn entry_of(item: &ContextItem) -> Option<EntryId> {
    match item.origin {
        Origin::Entry(id) => Some(id),
        Origin::Fact(_) => None,
    }
}
