//! Episodic memory: time-indexed entries with exact cosine search.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::memory::{EntryId, MemoryEntry, MemoryKind, NewEntry};
use crate::scoring::normalize_user_utility;
use crate::vector::{check_dimension, rank_exhaustive, Candidate, Embedding};

/// Neutral utility on the default scale.
pub const DEFAULT_USER_UTILITY: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchHit {
    pub entry_id: EntryId,
    pub raw_cosine: f64,
    /// 1-based.
    pub rank: usize,
}

/// The episodic store.
///
/// Ids are assigned in insertion order and the turn counter never decreases,
/// so id order is also timestamp order; `get_all_in_time_order` still sorts by
/// `(turn, id)` explicitly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodicStore {
    dimension: usize,
    n_max: u32,
    turn: u64,
    next_id: u64,
    entries: BTreeMap<EntryId, MemoryEntry>,
}

impl EpisodicStore {
    pub fn new(dimension: usize, n_max: u32) -> Self {
        assert!(dimension > 0, "dimension must be positive");
        assert!(n_max > 0, "n_max must be positive");
        Self {
            dimension,
            n_max,
            turn: 0,
            next_id: 0,
            entries: BTreeMap::new(),
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    pub fn current_turn(&self) -> u64 {
        self.turn
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, id: EntryId) -> bool {
        self.entries.contains_key(&id)
    }

    /// Id the next insert will receive.
    pub fn next_id(&self) -> EntryId {
        EntryId(self.next_id)
    }

    pub fn advance_turn(&mut self) -> u64 {
        self.turn += 1;
        self.turn
    }

    pub fn set_turn(&mut self, turn: u64) -> Result<()> {
        if turn < self.turn {
            return Err(Error::TurnRegression {
                current: self.turn,
                requested: turn,
            });
        }
        self.turn = turn;
        Ok(())
    }

    /// Changes the utility scale; existing utilities must still fit.
    pub fn set_n_max(&mut self, n_max: u32) -> Result<()> {
        if n_max == 0 {
            return Err(Error::InvalidConfig("n_max must be at least 1".into()));
        }
        if let Some(e) = self.entries.values().find(|e| e.user_utility > n_max) {
            return Err(Error::UtilityOutOfRange {
                value: e.user_utility,
                n_max,
            });
        }
        self.n_max = n_max;
        Ok(())
    }

    /// Enrolls a new entry at the current turn.
    pub fn insert(&mut self, new: NewEntry) -> Result<EntryId> {
        check_dimension(self.dimension, new.embedding.len())?;
        let user_utility = new.user_utility.unwrap_or(DEFAULT_USER_UTILITY.min(self.n_max));
        normalize_user_utility(user_utility, self.n_max)?;
        let embedding = Embedding::normalize(&new.embedding)?;
        let id = EntryId(self.next_id);
        self.next_id += 1;
        self.entries.insert(
            id,
            MemoryEntry {
                id,
                kind: new.kind,
                content: new.content,
                turn: self.turn,
                wall_clock_secs: new.wall_clock_secs,
                embedding,
                user_utility,
                consolidation_flag: new.consolidation_flag,
            },
        );
        Ok(id)
    }

    /// Convenience wrapper around [`EpisodicStore::insert`].
    pub fn insert_with(
        &mut self,
        kind: MemoryKind,
        content: impl Into<String>,
        embedding: Vec<f64>,
        user_utility: Option<u32>,
        consolidation_flag: bool,
    ) -> Result<EntryId> {
        self.insert(NewEntry {
            kind,
            content: content.into(),
            embedding,
            user_utility,
            consolidation_flag,
            wall_clock_secs: None,
        })
    }

    /// Re-enrolls a previously serialized entry verbatim (log replay).
    pub fn restore(&mut self, entry: MemoryEntry) -> Result<()> {
        check_dimension(self.dimension, entry.embedding.dimension())?;
        normalize_user_utility(entry.user_utility, self.n_max)?;
        if entry.id.0 < self.next_id {
            return Err(Error::DuplicateEntry(entry.id));
        }
        self.set_turn(entry.turn)?;
        self.next_id = entry.id.0 + 1;
        self.entries.insert(entry.id, entry);
        Ok(())
    }

    pub fn get(&self, id: EntryId) -> Result<&MemoryEntry> {
        self.entries.get(&id).ok_or(Error::UnknownEntry(id))
    }

    pub fn iter(&self) -> impl Iterator<Item = &MemoryEntry> {
        self.entries.values()
    }

    /// Snapshot ordered by `(turn, id)`.
    pub fn get_all_in_time_order(&self) -> Vec<MemoryEntry> {
        let mut all: Vec<MemoryEntry> = self.entries.values().cloned().collect();
        all.sort_by_key(|e| (e.turn, e.id));
        all
    }

    pub fn set_user_utility(&mut self, id: EntryId, u: u32) -> Result<&MemoryEntry> {
        normalize_user_utility(u, self.n_max)?;
        let entry = self.entries.get_mut(&id).ok_or(Error::UnknownEntry(id))?;
        entry.user_utility = u;
        Ok(entry)
    }

    pub fn set_consolidation_flag(&mut self, id: EntryId, flag: bool) -> Result<&MemoryEntry> {
        let entry = self.entries.get_mut(&id).ok_or(Error::UnknownEntry(id))?;
        entry.consolidation_flag = flag;
        Ok(entry)
    }

    pub fn delete(&mut self, id: EntryId) -> Result<MemoryEntry> {
        self.entries.remove(&id).ok_or(Error::UnknownEntry(id))
    }

    /// Exact exhaustive search: raw cosine descending, ties broken by newer
    /// turn and then lower id.
    pub fn top_k_similar(&self, query: &[f64], k: usize) -> Result<Vec<SearchHit>> {
        check_dimension(self.dimension, query.len())?;
        if k == 0 || self.entries.is_empty() {
            return Ok(Vec::new());
        }
        let query = Embedding::normalize(query)?;
        let ranked = rank_exhaustive(
            &query,
            self.entries.values().map(|e| Candidate {
                id: e.id,
                turn: e.turn,
                embedding: &e.embedding,
            }),
            k,
        );
        Ok(ranked
            .into_iter()
            .enumerate()
            .map(|(i, (entry_id, raw_cosine))| SearchHit {
                entry_id,
                raw_cosine,
                rank: i + 1,
            })
            .collect())
    }
}
