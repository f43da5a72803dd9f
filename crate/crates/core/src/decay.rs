//! Intelligent decay of episodic memory.
//!
//! A run scores every entry once against a fixed task snapshot, then walks the
//! entries in time order:
//!
//! * pinned entries (`user_utility == n_max`) are always retained;
//! * forget-marked entries (`user_utility == 0`) are always treated as below
//!   threshold;
//! * anything else is decayed iff `total < theta_decay` (strict).
//!
//! A decayed entry carrying the consolidation flag is distilled into a
//! semantic fact first; if distillation fails it is retained and the failure
//! is reported.

use serde::{Deserialize, Serialize};

use crate::config::{DecayConfig, TaskSource};
use crate::consolidation::{consolidate_entry, Summarizer};
use crate::embedding::Embedder;
use crate::episodic::EpisodicStore;
use crate::error::Result;
use crate::memory::{EntryId, MemoryEntry, MemoryKind};
use crate::scoring::{utility_score, ScoreBreakdown, TaskContext};
use crate::semantic::{FactId, SemanticStore};
use crate::vector::{check_dimension, Embedding};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredEntry {
    pub entry_id: EntryId,
    pub score: ScoreBreakdown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Consolidated {
    pub entry_id: EntryId,
    pub fact_id: FactId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecayFailure {
    pub entry_id: EntryId,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub run_turn: u64,
    pub scored: Vec<ScoredEntry>,
    pub deleted_ids: Vec<EntryId>,
    pub consolidated: Vec<Consolidated>,
    pub retained_count: usize,
    pub config_snapshot: DecayConfig,
    #[serde(default)]
    pub failures: Vec<DecayFailure>,
}

impl DecayReport {
    pub fn empty(run_turn: u64, config: &DecayConfig) -> Self {
        Self {
            run_turn,
            scored: Vec::new(),
            deleted_ids: Vec::new(),
            consolidated: Vec::new(),
            retained_count: 0,
            config_snapshot: config.clone(),
            failures: Vec::new(),
        }
    }
}

/// What a run does with one entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Retain,
    Delete,
    ConsolidateThenDelete,
}

pub fn verdict(entry: &MemoryEntry, score: &ScoreBreakdown, config: &DecayConfig) -> Verdict {
    if entry.is_pinned(config.n_max) {
        return Verdict::Retain;
    }
    let below = entry.is_forget_marked() || score.total < config.theta_decay;
    match (below, entry.consolidation_flag) {
        (false, _) => Verdict::Retain,
        (true, false) => Verdict::Delete,
        (true, true) => Verdict::ConsolidateThenDelete,
    }
}

/// Scores every entry in time order. Pure.
pub fn score_all(store: &EpisodicStore, task: &TaskContext, config: &DecayConfig) -> Result<Vec<ScoredEntry>> {
    check_dimension(store.dimension(), task.task_vector.dimension())?;
    store
        .get_all_in_time_order()
        .iter()
        .map(|e| {
            Ok(ScoredEntry {
                entry_id: e.id,
                score: utility_score(e, task, config)?,
            })
        })
        .collect()
}

/// Executes one decay pass with exclusive access to both stores.
pub fn run_decay(
    store: &mut EpisodicStore,
    semantic: &mut SemanticStore,
    task: &TaskContext,
    config: &DecayConfig,
    summarizer: &dyn Summarizer,
    embedder: &dyn Embedder,
) -> Result<DecayReport> {
    config.validate()?;
    let run_turn = task.current_turn;
    if store.is_empty() {
        return Ok(DecayReport::empty(run_turn, config));
    }
    let snapshot = store.get_all_in_time_order();
    let scored = score_all(store, task, config)?;

    let mut report = DecayReport::empty(run_turn, config);
    for (entry, s) in snapshot.iter().zip(&scored) {
        match verdict(entry, &s.score, config) {
            Verdict::Retain => {}
            Verdict::Delete => {
                store.delete(entry.id)?;
                report.deleted_ids.push(entry.id);
            }
            Verdict::ConsolidateThenDelete => {
                match consolidate_entry(entry.id, store, semantic, summarizer, embedder) {
                    Ok(added) => {
                        report.consolidated.push(Consolidated {
                            entry_id: entry.id,
                            fact_id: added.id,
                        });
                        store.delete(entry.id)?;
                        report.deleted_ids.push(entry.id);
                    }
                    Err(err) => report.failures.push(DecayFailure {
                        entry_id: entry.id,
                        error: err.to_string(),
                    }),
                }
            }
        }
    }
    report.scored = scored;
    report.retained_count = store.len();
    Ok(report)
}

/// Runs decay iff `current_turn` falls on the cadence and the store is nonempty.
#[allow(clippy::too_many_arguments)]
pub fn maybe_run_decay(
    current_turn: u64,
    config: &DecayConfig,
    store: &mut EpisodicStore,
    semantic: &mut SemanticStore,
    task: &TaskContext,
    summarizer: &dyn Summarizer,
    embedder: &dyn Embedder,
) -> Result<Option<DecayReport>> {
    if !is_due(current_turn, config) || store.is_empty() {
        return Ok(None);
    }
    run_decay(store, semantic, task, config, summarizer, embedder).map(Some)
}

pub fn is_due(current_turn: u64, config: &DecayConfig) -> bool {
    config.cadence_turns > 0 && current_turn.is_multiple_of(config.cadence_turns)
}

/// Derives the task vector for the current turn according to
/// `config.task_source`. Falls back to the newest entry of any kind when the
/// store holds no user message; `None` for an empty store without a charter.
pub fn resolve_task(
    store: &EpisodicStore,
    config: &DecayConfig,
    embedder: &dyn Embedder,
) -> Result<Option<TaskContext>> {
    let vector = match &config.task_source {
        TaskSource::Charter(text) => {
            check_dimension(store.dimension(), embedder.dimension())?;
            Some(Embedding::normalize(&embedder.embed(text)?)?)
        }
        TaskSource::LatestUserMessage => {
            let newest = |only_user: bool| {
                store
                    .iter()
                    .filter(|e| !only_user || e.kind == MemoryKind::UserMessage)
                    .max_by_key(|e| (e.turn, e.id))
            };
            newest(true).or_else(|| newest(false)).map(|e| e.embedding.clone())
        }
    };
    Ok(vector.map(|v| TaskContext::new(v, store.current_turn())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::consolidation::ExtractiveSummarizer;
    use crate::embedding::HashingEmbedder;
    use crate::error::Error;

    const D: usize = 2;

    struct Fixture {
        ep: EpisodicStore,
        sem: SemanticStore,
        emb: HashingEmbedder,
        summ: ExtractiveSummarizer,
    }

    fn fixture() -> Fixture {
        Fixture {
            ep: EpisodicStore::new(D, 2),
            sem: SemanticStore::new(D),
            emb: HashingEmbedder::new(D),
            summ: ExtractiveSummarizer::default(),
        }
    }

    impl Fixture {
        fn put(&mut self, content: &str, v: [f64; 2], u: u32, flag: bool) -> EntryId {
            self.ep
                .insert_with(MemoryKind::Observation, content, v.to_vec(), Some(u), flag)
                .unwrap()
        }

        fn run(&mut self, task: &TaskContext, cfg: &DecayConfig) -> DecayReport {
            run_decay(&mut self.ep, &mut self.sem, task, cfg, &self.summ, &self.emb).unwrap()
        }
    }

    fn task(v: [f64; 2], turn: u64) -> TaskContext {
        TaskContext::new(Embedding::normalize(&v).unwrap(), turn)
    }

    #[test]
    fn score_all_empty_and_single() {
        let mut f = fixture();
        let cfg = DecayConfig::default();
        assert!(score_all(&f.ep, &task([1.0, 0.0], 0), &cfg).unwrap().is_empty());

        f.put("x", [1.0, 0.0], 1, false);
        let s = score_all(&f.ep, &task([1.0, 0.0], 0), &cfg).unwrap();
        assert_eq!(s.len(), 1);
        // 0.3 * 1 + 0.5 * 1 + 0.2 * 0.5
        assert!((s[0].score.total - 0.9).abs() < 1e-12);
    }

    #[test]
    fn score_all_matches_per_entry_scoring() {
        let mut f = fixture();
        let cfg = DecayConfig::default();
        f.put("a", [1.0, 0.2], 1, false);
        f.ep.advance_turn();
        f.put("b", [-0.3, 1.0], 2, false);
        let t = task([0.6, 0.8], 7);
        let all = score_all(&f.ep, &t, &cfg).unwrap();
        for s in &all {
            let e = f.ep.get(s.entry_id).unwrap();
            assert_eq!(s.score, utility_score(e, &t, &cfg).unwrap());
        }
    }

    #[test]
    fn score_all_dimension_mismatch() {
        let f = fixture();
        let t = TaskContext::new(Embedding::normalize(&[1.0, 0.0, 0.0]).unwrap(), 0);
        assert!(matches!(
            score_all(&f.ep, &t, &DecayConfig::default()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn empty_store_gives_empty_report() {
        let mut f = fixture();
        let r = f.run(&task([1.0, 0.0], 3), &DecayConfig::default());
        assert_eq!(r, DecayReport::empty(3, &DecayConfig::default()));
    }

    #[test]
    fn mixed_store_scenario() {
        // alpha=0 isolates relevance + utility; lambda irrelevant.
        let cfg = DecayConfig::new(0.0, 1.0, 0.0, 0.1, 0.35).unwrap();
        let mut f = fixture();
        let keep = f.put("Keep me.", [1.0, 0.0], 1, false); // E = 1.0
        let drop = f.put("Drop me.", [-1.0, 0.3], 1, false); // E ~ 0.04
        let distill = f.put("Budget is 50k. Discuss later.", [-1.0, 0.2], 1, true);
        let r = f.run(&task([1.0, 0.0], 0), &cfg);

        assert_eq!(r.deleted_ids, vec![drop, distill]);
        assert_eq!(r.consolidated.len(), 1);
        assert_eq!(r.consolidated[0].entry_id, distill);
        assert_eq!(r.retained_count, 1);
        assert!(f.ep.contains(keep));
        let fact = f.sem.get(r.consolidated[0].fact_id).unwrap();
        assert_eq!(fact.text, "Budget is 50k.");
        assert_eq!(fact.source_entry_ids, vec![distill]);
    }

    #[test]
    fn pinned_zero_score_is_retained() {
        let cfg = DecayConfig::new(0.0, 1.0, 0.0, 0.1, 0.5).unwrap();
        let mut f = fixture();
        let id = f.put("pinned", [-1.0, 0.0], 2, false);
        let r = f.run(&task([1.0, 0.0], 0), &cfg);
        assert_eq!(r.scored[0].score.total, 0.0);
        assert!(r.deleted_ids.is_empty());
        assert!(f.ep.contains(id));
    }

    #[test]
    fn forget_marked_high_score_is_deleted() {
        let cfg = DecayConfig::new(1.0, 1.0, 0.0, 0.0, 0.1).unwrap();
        let mut f = fixture();
        let id = f.put("forget", [1.0, 0.0], 0, false);
        let r = f.run(&task([1.0, 0.0], 0), &cfg);
        assert!(r.scored[0].score.total > cfg.theta_decay);
        assert_eq!(r.deleted_ids, vec![id]);
    }

    #[test]
    fn exactly_at_threshold_survives() {
        let cfg = DecayConfig::new(0.0, 1.0, 0.0, 0.0, 0.5).unwrap();
        let mut f = fixture();
        f.put("orthogonal", [0.0, 1.0], 1, false); // E = 0.5 exactly
        let r = f.run(&task([1.0, 0.0], 0), &cfg);
        assert!(r.deleted_ids.is_empty());
    }

    struct Failing;
    impl Summarizer for Failing {
        fn summarize(&self, _: &[MemoryEntry]) -> Result<String> {
            Err(Error::Summarizer("model offline".into()))
        }
    }

    #[test]
    fn summarizer_failure_retains_entry() {
        let cfg = DecayConfig::new(0.0, 1.0, 0.0, 0.0, 0.9).unwrap();
        let mut f = fixture();
        let id = f.put("Important. Keep.", [-1.0, 0.0], 1, true);
        let r = run_decay(&mut f.ep, &mut f.sem, &task([1.0, 0.0], 0), &cfg, &Failing, &f.emb).unwrap();
        assert!(r.deleted_ids.is_empty());
        assert_eq!(r.failures.len(), 1);
        assert_eq!(r.failures[0].entry_id, id);
        assert!(f.ep.contains(id));
        assert!(f.sem.is_empty());
    }

    #[test]
    fn cadence() {
        let mut cfg = DecayConfig::default();
        assert!(is_due(10, &cfg));
        assert!(!is_due(11, &cfg));
        cfg.cadence_turns = 1;
        assert!((0..20).all(|t| is_due(t, &cfg)));
    }

    #[test]
    fn maybe_run_skips_off_cadence_and_empty() {
        let cfg = DecayConfig::default();
        let mut f = fixture();
        let t = task([1.0, 0.0], 10);
        let r = maybe_run_decay(10, &cfg, &mut f.ep, &mut f.sem, &t, &f.summ, &f.emb).unwrap();
        assert!(r.is_none());
        f.put("x", [1.0, 0.0], 1, false);
        let r = maybe_run_decay(11, &cfg, &mut f.ep, &mut f.sem, &t, &f.summ, &f.emb).unwrap();
        assert!(r.is_none());
        let r = maybe_run_decay(10, &cfg, &mut f.ep, &mut f.sem, &t, &f.summ, &f.emb).unwrap();
        assert!(r.is_some());
    }

    #[test]
    fn resolve_task_prefers_latest_user_message() {
        let emb = HashingEmbedder::new(8);
        let mut ep = EpisodicStore::new(8, 2);
        let cfg = DecayConfig::default();
        assert!(resolve_task(&ep, &cfg, &emb).unwrap().is_none());

        ep.insert_with(MemoryKind::ToolCall, "t", emb.embed("tool output").unwrap(), None, false)
            .unwrap();
        let fallback = resolve_task(&ep, &cfg, &emb).unwrap().unwrap();
        assert_eq!(fallback.task_vector, ep.get(EntryId(0)).unwrap().embedding);

        ep.advance_turn();
        let u = ep
            .insert_with(MemoryKind::UserMessage, "u", emb.embed("what is the plan").unwrap(), None, false)
            .unwrap();
        ep.insert_with(MemoryKind::ToolCall, "t2", emb.embed("later tool").unwrap(), None, false)
            .unwrap();
        let t = resolve_task(&ep, &cfg, &emb).unwrap().unwrap();
        assert_eq!(t.task_vector, ep.get(u).unwrap().embedding);
        assert_eq!(t.current_turn, 1);
    }

    #[test]
    fn resolve_task_charter() {
        let emb = HashingEmbedder::new(8);
        let ep = EpisodicStore::new(8, 2);
        let mut cfg = DecayConfig::default();
        cfg.task_source = TaskSource::Charter("project plan".into());
        let t = resolve_task(&ep, &cfg, &emb).unwrap().unwrap();
        let expect = Embedding::normalize(&emb.embed("project plan").unwrap()).unwrap();
        assert_eq!(t.task_vector, expect);
    }
}
