//! Durable service state and the mutations that change it.
//!
//! Every change to [`MemoryState`] goes through [`MemoryState::apply`], both
//! live and during replay, so a log replayed from genesis reproduces the
//! state exactly.

use mnemex_core::decay::DecayReport;
use mnemex_core::{DecayConfig, EntryId, EpisodicStore, MemoryEntry, SemanticFact, SemanticStore};
use serde::{Deserialize, Serialize};

use crate::error::{Result, ServiceError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Insert,
    UtilityChange,
    Delete,
    Consolidate,
    DecayRun,
    TurnAdvance,
    ConfigChange,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayRecord {
    pub report: DecayReport,
    /// Facts the run created (not those it deduplicated into).
    pub new_facts: Vec<SemanticFact>,
}

/// Payload shapes are decoded by event kind, see [`Mutation::from_payload`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Mutation {
    Insert {
        entry: MemoryEntry,
    },
    UtilityChange {
        entry_id: EntryId,
        previous: u32,
        value: u32,
    },
    Delete {
        entry_id: EntryId,
    },
    Consolidate {
        entry_id: EntryId,
        fact: SemanticFact,
        created: bool,
    },
    DecayRun(DecayRecord),
    TurnAdvance {
        turn: u64,
        decay: Option<DecayRecord>,
    },
    ConfigChange {
        config: DecayConfig,
    },
}

impl Mutation {
    pub fn kind(&self) -> EventKind {
        match self {
            Mutation::Insert { .. } => EventKind::Insert,
            Mutation::UtilityChange { .. } => EventKind::UtilityChange,
            Mutation::Delete { .. } => EventKind::Delete,
            Mutation::Consolidate { .. } => EventKind::Consolidate,
            Mutation::DecayRun(_) => EventKind::DecayRun,
            Mutation::TurnAdvance { .. } => EventKind::TurnAdvance,
            Mutation::ConfigChange { .. } => EventKind::ConfigChange,
        }
    }

    pub fn to_payload(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("mutations serialize")
    }

    /// Decodes a payload according to its event kind.
    pub fn from_payload(kind: EventKind, payload: &serde_json::Value) -> Result<Self, String> {
        #[derive(Deserialize)]
        struct Insert {
            entry: MemoryEntry,
        }
        #[derive(Deserialize)]
        struct Utility {
            entry_id: EntryId,
            previous: u32,
            value: u32,
        }
        #[derive(Deserialize)]
        struct Delete {
            entry_id: EntryId,
        }
        #[derive(Deserialize)]
        struct Consolidate {
            entry_id: EntryId,
            fact: SemanticFact,
            created: bool,
        }
        #[derive(Deserialize)]
        struct Turn {
            turn: u64,
            decay: Option<DecayRecord>,
        }
        #[derive(Deserialize)]
        struct Config {
            config: DecayConfig,
        }
        fn de<T: for<'de> Deserialize<'de>>(v: &serde_json::Value) -> Result<T, String> {
            T::deserialize(v).map_err(|e| e.to_string())
        }
        Ok(match kind {
            EventKind::Insert => Mutation::Insert {
                entry: de::<Insert>(payload)?.entry,
            },
            EventKind::UtilityChange => {
                let u: Utility = de(payload)?;
                Mutation::UtilityChange {
                    entry_id: u.entry_id,
                    previous: u.previous,
                    value: u.value,
                }
            }
            EventKind::Delete => Mutation::Delete {
                entry_id: de::<Delete>(payload)?.entry_id,
            },
            EventKind::Consolidate => {
                let c: Consolidate = de(payload)?;
                Mutation::Consolidate {
                    entry_id: c.entry_id,
                    fact: c.fact,
                    created: c.created,
                }
            }
            EventKind::DecayRun => Mutation::DecayRun(de(payload)?),
            EventKind::TurnAdvance => {
                let t: Turn = de(payload)?;
                Mutation::TurnAdvance {
                    turn: t.turn,
                    decay: t.decay,
                }
            }
            EventKind::ConfigChange => Mutation::ConfigChange {
                config: de::<Config>(payload)?.config,
            },
        })
    }
}

/// Counters over the whole event history.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub events: u64,
    pub inserts: u64,
    pub utility_changes: u64,
    pub deletes: u64,
    pub manual_consolidations: u64,
    pub decay_runs: u64,
    pub entries_decayed: u64,
    pub entries_consolidated_by_decay: u64,
    pub decay_failures: u64,
    pub turn_advances: u64,
    pub config_changes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryState {
    pub last_sequence: u64,
    pub config: DecayConfig,
    pub episodic: EpisodicStore,
    pub semantic: SemanticStore,
    pub counters: Counters,
}

impl MemoryState {
    pub fn new(config: DecayConfig, dimension: usize) -> Self {
        Self {
            last_sequence: 0,
            episodic: EpisodicStore::new(dimension, config.n_max),
            semantic: SemanticStore::new(dimension),
            config,
            counters: Counters::default(),
        }
    }

    pub fn current_turn(&self) -> u64 {
        self.episodic.current_turn()
    }

    /// Canonical serialization used for snapshots and equality checks.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("state serializes")
    }

    fn apply_decay(&mut self, record: &DecayRecord) -> Result<()> {
        for fact in &record.new_facts {
            self.semantic.restore(fact.clone())?;
        }
        for id in &record.report.deleted_ids {
            self.episodic.delete(*id)?;
        }
        let c = &mut self.counters;
        c.decay_runs += 1;
        c.entries_decayed += record.report.deleted_ids.len() as u64;
        c.entries_consolidated_by_decay += record.report.consolidated.len() as u64;
        c.decay_failures += record.report.failures.len() as u64;
        Ok(())
    }

    /// Applies one sequenced mutation. Sequence numbers must be gapless.
    pub fn apply(&mut self, sequence_number: u64, mutation: &Mutation) -> Result<()> {
        if sequence_number != self.last_sequence + 1 {
            return Err(ServiceError::Internal(format!(
                "sequence gap: expected {}, got {sequence_number}",
                self.last_sequence + 1
            )));
        }
        match mutation {
            Mutation::Insert { entry } => {
                self.episodic.restore(entry.clone())?;
                self.counters.inserts += 1;
            }
            Mutation::UtilityChange { entry_id, value, .. } => {
                self.episodic.set_user_utility(*entry_id, *value)?;
                self.counters.utility_changes += 1;
            }
            Mutation::Delete { entry_id } => {
                self.episodic.delete(*entry_id)?;
                self.counters.deletes += 1;
            }
            Mutation::Consolidate { entry_id, fact, .. } => {
                self.episodic.get(*entry_id)?;
                self.semantic.restore(fact.clone())?;
                self.episodic.set_user_utility(*entry_id, 0)?;
                self.counters.manual_consolidations += 1;
            }
            Mutation::DecayRun(record) => self.apply_decay(record)?,
            Mutation::TurnAdvance { turn, decay } => {
                self.episodic.set_turn(*turn)?;
                if let Some(record) = decay {
                    self.apply_decay(record)?;
                }
                self.counters.turn_advances += 1;
            }
            Mutation::ConfigChange { config } => {
                config.validate()?;
                self.episodic.set_n_max(config.n_max)?;
                self.config = config.clone();
                self.counters.config_changes += 1;
            }
        }
        self.counters.events += 1;
        self.last_sequence = sequence_number;
        Ok(())
    }
}
