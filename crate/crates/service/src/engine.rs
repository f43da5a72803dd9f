//! The single-writer memory engine behind the HTTP API and the CLI.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use mnemex_core::consolidation::consolidate_entry;
use mnemex_core::decay::{is_due, resolve_task, run_decay, DecayReport};
use mnemex_core::scoring::utility_score;
use mnemex_core::{
    DecayConfig, Embedder, Embedding, EntryId, ExtractiveSummarizer, FactId, HashingEmbedder, MemoryEntry, MemoryKind,
    SemanticFact, Summarizer, TaskContext, TimeMode,
};
use parking_lot::RwLock;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ServiceError};
use crate::log::{events_path, read_events, read_snapshot, replay, snapshot_sequences, write_snapshot, EventLog};
use crate::state::{Counters, DecayRecord, MemoryState, Mutation};
use crate::timeline::TimelineNode;

pub const DEFAULT_SNAPSHOT_EVERY: u64 = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InsertRequest {
    pub kind: MemoryKind,
    pub content: String,
    /// Embedded from `content` when absent.
    #[serde(default)]
    pub embedding: Option<Vec<f64>>,
    #[serde(default)]
    pub user_utility: Option<u32>,
    #[serde(default)]
    pub consolidation_flag: bool,
    #[serde(default)]
    pub wall_clock_secs: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsolidateResponse {
    pub fact_id: FactId,
    pub created: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnResponse {
    pub turn: u64,
    pub decay: Option<DecayReport>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricsView {
    pub current_turn: u64,
    pub episodic_size: usize,
    pub semantic_size: usize,
    pub last_sequence: u64,
    #[serde(flatten)]
    pub counters: Counters,
}

struct Persistence {
    dir: PathBuf,
    log: EventLog,
    snapshot_every: u64,
}

struct Inner {
    state: MemoryState,
    persistence: Option<Persistence>,
}

pub struct EngineBuilder {
    data_dir: Option<PathBuf>,
    config: DecayConfig,
    summarizer: Arc<dyn Summarizer>,
    embedder: Arc<dyn Embedder>,
    snapshot_every: u64,
}

impl Default for EngineBuilder {
    fn default() -> Self {
        Self {
            data_dir: None,
            config: DecayConfig::default(),
            summarizer: Arc::new(ExtractiveSummarizer::default()),
            embedder: Arc::new(HashingEmbedder::default()),
            snapshot_every: DEFAULT_SNAPSHOT_EVERY,
        }
    }
}

impl EngineBuilder {
    /// Persist to (and restore from) `dir`.
    pub fn data_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.data_dir = Some(dir.into());
        self
    }

    /// Config for a fresh store; a restored store keeps its logged config.
    pub fn config(mut self, config: DecayConfig) -> Self {
        self.config = config;
        self
    }

    pub fn summarizer(mut self, s: Arc<dyn Summarizer>) -> Self {
        self.summarizer = s;
        self
    }

    pub fn embedder(mut self, e: Arc<dyn Embedder>) -> Self {
        self.embedder = e;
        self
    }

    /// Write a snapshot every `n` events; 0 disables snapshots.
    pub fn snapshot_every(mut self, n: u64) -> Self {
        self.snapshot_every = n;
        self
    }

    pub fn build(self) -> Result<Engine> {
        self.config.validate()?;
        let dimension = self.embedder.dimension();
        let mut genesis_config = None;
        let (state, persistence) = match self.data_dir {
            None => (MemoryState::new(self.config, dimension), None),
            Some(dir) => {
                std::fs::create_dir_all(&dir).map_err(|e| ServiceError::io(&dir, e))?;
                let state = restore_state(&dir, MemoryState::new(DecayConfig::default(), dimension))?;
                if state.last_sequence == 0 && self.config != DecayConfig::default() {
                    genesis_config = Some(self.config);
                }
                let log = EventLog::open(&events_path(&dir), state.last_sequence + 1)?;
                let persistence = Persistence {
                    dir,
                    log,
                    snapshot_every: self.snapshot_every,
                };
                (state, Some(persistence))
            }
        };
        if state.episodic.dimension() != dimension {
            return Err(ServiceError::Invalid(format!(
                "stored dimension {} does not match embedder dimension {dimension}",
                state.episodic.dimension()
            )));
        }
        let engine = Engine {
            inner: RwLock::new(Inner { state, persistence }),
            decay_running: AtomicBool::new(false),
            summarizer: self.summarizer,
            embedder: self.embedder,
        };
        if let Some(config) = genesis_config {
            engine.set_config(config)?;
        }
        Ok(engine)
    }
}

/// Newest readable snapshot plus the log tail, or a full replay of the log
/// onto `fresh` when no snapshot is usable.
fn restore_state(dir: &Path, fresh: MemoryState) -> Result<MemoryState> {
    let events = read_events(&events_path(dir))?;
    let expected = fresh.episodic.dimension();
    let logged = events.iter().find_map(|e| match e.mutation() {
        Ok(Mutation::Insert { entry }) => Some(entry.embedding.dimension()),
        _ => None,
    });
    if let Some(d) = logged.filter(|d| *d != expected) {
        return Err(ServiceError::Invalid(format!(
            "stored dimension {d} does not match embedder dimension {expected}"
        )));
    }
    let last = events.last().map_or(0, |e| e.sequence_number);
    for seq in snapshot_sequences(dir)? {
        if seq > last {
            continue;
        }
        match read_snapshot(&crate::log::snapshot_path(dir, seq)) {
            Ok(mut state) if state.last_sequence == seq => {
                replay(&mut state, &events)?;
                return Ok(state);
            }
            Ok(_) => tracing::warn!(seq, "snapshot sequence mismatch; ignoring"),
            Err(e) => tracing::warn!(seq, error = %e, "unreadable snapshot; ignoring"),
        }
    }
    replay_from_genesis_onto(fresh, &events)
}

fn replay_from_genesis_onto(mut state: MemoryState, events: &[crate::log::AuditEvent]) -> Result<MemoryState> {
    replay(&mut state, events)?;
    Ok(state)
}

/// Replays `dir`'s log from genesis, ignoring snapshots. Genesis is the
/// default config; a store created with another config logs it as its first
/// event.
pub fn replay_from_genesis(dir: &Path, dimension: usize) -> Result<MemoryState> {
    let events = read_events(&events_path(dir))?;
    replay_from_genesis_onto(MemoryState::new(DecayConfig::default(), dimension), &events)
}

struct RunGuard<'a>(&'a AtomicBool);

impl Drop for RunGuard<'_> {
    fn drop(&mut self) {
        self.0.store(false, Ordering::Release);
    }
}

fn now_secs() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

pub struct Engine {
    inner: RwLock<Inner>,
    decay_running: AtomicBool,
    summarizer: Arc<dyn Summarizer>,
    embedder: Arc<dyn Embedder>,
}

impl Engine {
    pub fn builder() -> EngineBuilder {
        EngineBuilder::default()
    }

    pub fn in_memory() -> Self {
        Self::builder().build().expect("default engine builds")
    }

    pub fn open(dir: impl Into<PathBuf>) -> Result<Self> {
        Self::builder().data_dir(dir).build()
    }

    fn commit(&self, inner: &mut Inner, mutation: Mutation) -> Result<()> {
        let seq = inner.state.last_sequence + 1;
        let turn = match &mutation {
            Mutation::TurnAdvance { turn, .. } => *turn,
            _ => inner.state.current_turn(),
        };
        if let Some(p) = inner.persistence.as_mut() {
            let event = p.log.append(turn, &mutation)?;
            debug_assert_eq!(event.sequence_number, seq);
        }
        inner
            .state
            .apply(seq, &mutation)
            .map_err(|e| ServiceError::Internal(format!("applying event {seq} failed: {e}")))?;
        if let Some(p) = inner.persistence.as_ref() {
            if p.snapshot_every > 0 && seq.is_multiple_of(p.snapshot_every) {
                write_snapshot(&p.dir, &inner.state)?;
            }
        }
        Ok(())
    }

    fn task(&self, state: &MemoryState) -> Result<Option<TaskContext>> {
        let task = resolve_task(&state.episodic, &state.config, self.embedder.as_ref())?;
        Ok(task.map(|mut t| {
            if state.config.time_mode == TimeMode::WallClock {
                t.now_secs = Some(now_secs());
            }
            t
        }))
    }

    fn node(&self, state: &MemoryState, task: &TaskContext, entry: &MemoryEntry) -> Result<TimelineNode> {
        let score = utility_score(entry, task, &state.config)?;
        Ok(TimelineNode::new(entry, score, state.config.n_max, state.config.theta_decay))
    }

    /// Nodes in time order, scored against the current task vector.
    pub fn timeline(&self) -> Result<Vec<TimelineNode>> {
        let inner = self.inner.read();
        let state = &inner.state;
        let Some(task) = self.task(state)? else {
            return Ok(Vec::new());
        };
        state
            .episodic
            .get_all_in_time_order()
            .iter()
            .map(|e| self.node(state, &task, e))
            .collect()
    }

    pub fn entry(&self, id: EntryId) -> Result<MemoryEntry> {
        Ok(self.inner.read().state.episodic.get(id)?.clone())
    }

    pub fn facts(&self) -> Vec<SemanticFact> {
        self.inner.read().state.semantic.get_all_facts().to_vec()
    }

    pub fn config(&self) -> DecayConfig {
        self.inner.read().state.config.clone()
    }

    pub fn metrics(&self) -> MetricsView {
        let inner = self.inner.read();
        let s = &inner.state;
        MetricsView {
            current_turn: s.current_turn(),
            episodic_size: s.episodic.len(),
            semantic_size: s.semantic.len(),
            last_sequence: s.last_sequence,
            counters: s.counters.clone(),
        }
    }

    pub fn state_json(&self) -> String {
        self.inner.read().state.to_json()
    }

    pub fn state(&self) -> MemoryState {
        self.inner.read().state.clone()
    }

    pub fn insert(&self, req: InsertRequest) -> Result<MemoryEntry> {
        if req.content.trim().is_empty() {
            return Err(ServiceError::Invalid("content must be nonempty".into()));
        }
        let raw = match req.embedding {
            Some(v) => v,
            None => self.embedder.embed(&req.content)?,
        };
        let mut inner = self.inner.write();
        let state = &inner.state;
        if raw.len() != state.episodic.dimension() {
            return Err(mnemex_core::Error::DimensionMismatch {
                expected: state.episodic.dimension(),
                actual: raw.len(),
            }
            .into());
        }
        let n_max = state.config.n_max;
        let user_utility = req.user_utility.unwrap_or(mnemex_core::episodic::DEFAULT_USER_UTILITY.min(n_max));
        if user_utility > n_max {
            return Err(mnemex_core::Error::UtilityOutOfRange {
                value: user_utility,
                n_max,
            }
            .into());
        }
        if req.wall_clock_secs.is_some_and(|s| !s.is_finite()) {
            return Err(ServiceError::Invalid("wall_clock_secs must be finite".into()));
        }
        let entry = MemoryEntry {
            id: state.episodic.next_id(),
            kind: req.kind,
            content: req.content,
            turn: state.current_turn(),
            wall_clock_secs: req.wall_clock_secs,
            embedding: Embedding::normalize(&raw)?,
            user_utility,
            consolidation_flag: req.consolidation_flag,
        };
        self.commit(&mut inner, Mutation::Insert { entry: entry.clone() })?;
        Ok(entry)
    }

    pub fn set_utility(&self, id: EntryId, value: u32) -> Result<TimelineNode> {
        let mut inner = self.inner.write();
        let previous = inner.state.episodic.get(id)?.user_utility;
        let n_max = inner.state.config.n_max;
        if value > n_max {
            return Err(mnemex_core::Error::UtilityOutOfRange { value, n_max }.into());
        }
        self.commit(
            &mut inner,
            Mutation::UtilityChange {
                entry_id: id,
                previous,
                value,
            },
        )?;
        let state = &inner.state;
        let task = self.task(state)?.expect("store holds the updated entry");
        self.node(state, &task, state.episodic.get(id)?)
    }

    pub fn delete(&self, id: EntryId) -> Result<MemoryEntry> {
        let mut inner = self.inner.write();
        let entry = inner.state.episodic.get(id)?.clone();
        self.commit(&mut inner, Mutation::Delete { entry_id: id })?;
        Ok(entry)
    }

    /// Distills the entry into a fact and forget-marks it; the next decay run
    /// removes it. On summarizer failure nothing changes.
    pub fn consolidate(&self, id: EntryId) -> Result<ConsolidateResponse> {
        let mut inner = self.inner.write();
        let state = &inner.state;
        state.episodic.get(id)?;
        let mut scratch = state.semantic.clone();
        let added = consolidate_entry(
            id,
            &state.episodic,
            &mut scratch,
            self.summarizer.as_ref(),
            self.embedder.as_ref(),
        )?;
        let fact = scratch.get(added.id).expect("fact just added").clone();
        self.commit(
            &mut inner,
            Mutation::Consolidate {
                entry_id: id,
                fact,
                created: added.created,
            },
        )?;
        Ok(ConsolidateResponse {
            fact_id: added.id,
            created: added.created,
        })
    }

    /// Runs decay on copies of the stores; the returned record is what gets
    /// logged and applied.
    fn plan_decay(&self, state: &MemoryState, turn: u64) -> Result<DecayRecord> {
        let mut episodic = state.episodic.clone();
        episodic.set_turn(turn)?;
        let mut semantic = state.semantic.clone();
        let task = match self.task(state)? {
            Some(mut t) => {
                t.current_turn = turn;
                t
            }
            None => return Ok(DecayRecord {
                report: DecayReport::empty(turn, &state.config),
                new_facts: Vec::new(),
            }),
        };
        let known = state.semantic.next_id();
        let report = run_decay(
            &mut episodic,
            &mut semantic,
            &task,
            &state.config,
            self.summarizer.as_ref(),
            self.embedder.as_ref(),
        )?;
        let new_facts = semantic
            .get_all_facts()
            .iter()
            .filter(|f| f.id >= known)
            .cloned()
            .collect();
        Ok(DecayRecord { report, new_facts })
    }

    /// On-demand decay. A second call while one is running fails with
    /// [`ServiceError::DecayInProgress`] instead of queueing.
    pub fn run_decay(&self) -> Result<DecayReport> {
        if self
            .decay_running
            .compare_exchange(false, true, Ordering::AcqRel, Ordering::Acquire)
            .is_err()
        {
            return Err(ServiceError::DecayInProgress);
        }
        let _guard = RunGuard(&self.decay_running);
        let mut inner = self.inner.write();
        let turn = inner.state.current_turn();
        let record = self.plan_decay(&inner.state, turn)?;
        let report = record.report.clone();
        self.commit(&mut inner, Mutation::DecayRun(record))?;
        Ok(report)
    }

    /// Advances the logical clock one turn, running decay when the new turn
    /// falls on the configured cadence.
    pub fn advance_turn(&self) -> Result<TurnResponse> {
        let mut inner = self.inner.write();
        let turn = inner.state.current_turn() + 1;
        let decay = if is_due(turn, &inner.state.config) && !inner.state.episodic.is_empty() {
            Some(self.plan_decay(&inner.state, turn)?)
        } else {
            None
        };
        let report = decay.as_ref().map(|d| d.report.clone());
        self.commit(&mut inner, Mutation::TurnAdvance { turn, decay })?;
        Ok(TurnResponse { turn, decay: report })
    }

    pub fn set_config(&self, config: DecayConfig) -> Result<DecayConfig> {
        config.validate()?;
        let mut inner = self.inner.write();
        if let Some(e) = inner.state.episodic.iter().find(|e| e.user_utility > config.n_max) {
            return Err(mnemex_core::Error::UtilityOutOfRange {
                value: e.user_utility,
                n_max: config.n_max,
            }
            .into());
        }
        self.commit(&mut inner, Mutation::ConfigChange { config: config.clone() })?;
        Ok(config)
    }

    pub fn is_decay_running(&self) -> bool {
        self.decay_running.load(Ordering::Acquire)
    }
}
