use std::collections::BTreeSet;

use mnemex_core::consolidation::{first_sentence, ExtractiveSummarizer, Summarizer};
use mnemex_core::decay::run_decay;
use mnemex_core::embedding::tokens;
use mnemex_core::strategies::{assemble_basic_rag, assemble_hybrid, assemble_sliding_window, token_count};
use mnemex_core::*;
use proptest::prelude::*;

const DIM: usize = 4;

#[derive(Debug, Clone)]
struct Draft {
    turn: u64,
    vector: Vec<f64>,
    utility: u32,
    flag: bool,
}

fn nonzero_vec() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, DIM).prop_filter("nonzero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-6)
}

fn drafts(max: usize) -> impl Strategy<Value = Vec<Draft>> {
    prop::collection::vec(
        (0u64..40, nonzero_vec(), 0u32..=2, any::<bool>()).prop_map(|(turn, vector, utility, flag)| Draft {
            turn,
            vector,
            utility,
            flag,
        }),
        1..max,
    )
}

fn build(drafts: &[Draft], now: u64) -> EpisodicStore {
    let mut sorted = drafts.to_vec();
    sorted.sort_by_key(|s| s.turn);
    let mut store = EpisodicStore::new(DIM, 2);
    for (i, s) in sorted.iter().enumerate() {
        store.set_turn(s.turn).unwrap();
        store
            .insert_with(MemoryKind::Observation, format!("Entry {i} text. More."), s.vector.clone(), Some(s.utility), s.flag)
            .unwrap();
    }
    store.set_turn(now).unwrap();
    store
}

fn survivors(store: &EpisodicStore) -> BTreeSet<EntryId> {
    store.iter().map(|e| e.id).collect()
}

struct CoordEmbedder;
impl Embedder for CoordEmbedder {
    fn dimension(&self) -> usize {
        DIM
    }
    fn embed(&self, text: &str) -> Result<Vec<f64>> {
        let n = text.len() as f64;
        Ok(vec![1.0, n, 0.5, -0.25])
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn raising_theta_never_adds_survivors(s in drafts(12), task in nonzero_vec(), lo in 0.0f64..1.0, bump in 0.0f64..0.5) {
        let task = TaskContext::new(Embedding::normalize(&task).unwrap(), 45);
        let run = |theta: f64| {
            let mut store = build(&s, 45);
            let mut sem = SemanticStore::new(DIM);
            let cfg = DecayConfig { theta_decay: theta, ..DecayConfig::default() };
            run_decay(&mut store, &mut sem, &task, &cfg, &ExtractiveSummarizer::default(), &CoordEmbedder).unwrap();
            survivors(&store)
        };
        let low = run(lo);
        let high = run(lo + bump);
        prop_assert!(high.is_subset(&low));
    }

    #[test]
    fn report_partitions_the_store(s in drafts(12), task in nonzero_vec(), theta in 0.0f64..1.0) {
        let mut store = build(&s, 45);
        let before = survivors(&store);
        let mut sem = SemanticStore::new(DIM);
        let cfg = DecayConfig { theta_decay: theta, ..DecayConfig::default() };
        let task = TaskContext::new(Embedding::normalize(&task).unwrap(), 45);
        let report = run_decay(&mut store, &mut sem, &task, &cfg, &ExtractiveSummarizer::default(), &CoordEmbedder).unwrap();
        let deleted: BTreeSet<EntryId> = report.deleted_ids.iter().copied().collect();
        let after = survivors(&store);
        prop_assert!(deleted.is_disjoint(&after));
        prop_assert_eq!(deleted.union(&after).copied().collect::<BTreeSet<_>>(), before);
        prop_assert_eq!(report.retained_count, after.len());
        prop_assert_eq!(report.scored.len(), s.len());
        for c in &report.consolidated {
            let fact = sem.get(c.fact_id).unwrap();
            prop_assert!(fact.source_entry_ids.contains(&c.entry_id));
            prop_assert!(deleted.contains(&c.entry_id));
        }
    }

    #[test]
    fn rag_is_a_superset_of_the_window(s in drafts(30), q in nonzero_vec(), k in 0usize..8, w in 1u64..15) {
        let store = build(&s, 45);
        let window = assemble_sliding_window(&store.get_all_in_time_order(), 45, w);
        let rag = assemble_basic_rag(&store, &q, k, w).unwrap();
        prop_assert!(rag.token_cost >= window.token_cost);
        prop_assert_eq!(&rag.items[..window.items.len()], &window.items[..]);
        let ids: Vec<EntryId> = rag.entry_ids().collect();
        let unique: BTreeSet<EntryId> = ids.iter().copied().collect();
        prop_assert_eq!(ids.len(), unique.len());
        prop_assert!(rag.items.len() <= window.items.len() + k);
        if k == 0 {
            prop_assert_eq!(rag, window);
        }
    }

    #[test]
    fn token_cost_matches_rendering(s in drafts(30), q in nonzero_vec(), k in 0usize..6, ks in 0usize..4, w in 1u64..15) {
        let mut store = build(&s, 45);
        let mut sem = SemanticStore::new(DIM);
        let task = TaskContext::new(Embedding::normalize(&q).unwrap(), 45);
        let cfg = DecayConfig { theta_decay: 0.6, ..DecayConfig::default() };
        run_decay(&mut store, &mut sem, &task, &cfg, &ExtractiveSummarizer::default(), &CoordEmbedder).unwrap();
        let bundle = assemble_hybrid(&store, &sem, &q, k, ks, w).unwrap();
        prop_assert_eq!(bundle.token_cost, token_count(&bundle.render()));
        for id in bundle.entry_ids() {
            prop_assert!(store.contains(id), "hybrid bundle references a deleted entry");
        }
        let again = assemble_hybrid(&store, &sem, &q, k, ks, w).unwrap();
        prop_assert_eq!(bundle, again);
    }

    #[test]
    fn summaries_only_use_input_tokens(texts in prop::collection::vec("[A-Za-z0-9 .!?,]{0,120}", 1..6), max in 1usize..300) {
        let summ = ExtractiveSummarizer::new(max);
        let Ok(out) = summ.summarize_texts(texts.iter().map(String::as_str)) else {
            prop_assert!(texts.iter().all(|t| first_sentence(t).is_empty()));
            return Ok(());
        };
        prop_assert_eq!(&out, &summ.summarize_texts(texts.iter().map(String::as_str)).unwrap());
        prop_assert!(out.chars().count() <= max || tokens(&out).count() == 1);
        let vocab: BTreeSet<String> = texts.iter().flat_map(|t| tokens(t).collect::<Vec<_>>()).collect();
        for tok in out.split_whitespace() {
            let word = tok.trim_end_matches(|c: char| matches!(c, '.' | '!' | '?' | ';' | ','));
            prop_assert!(
                texts.iter().any(|t| t.contains(word)),
                "token {:?} not present in input", word
            );
        }
        for t in tokens(&out) {
            prop_assert!(vocab.contains(&t));
        }
    }

    #[test]
    fn single_entry_summary_never_grows(text in "[A-Za-z0-9 .!?,]{1,400}") {
        prop_assume!(!first_sentence(&text).is_empty());
        let mut store = EpisodicStore::new(DIM, 2);
        store.insert_with(MemoryKind::ToolCall, text.clone(), vec![1.0, 0.0, 0.0, 0.0], None, true).unwrap();
        let entries = store.get_all_in_time_order();
        let out = ExtractiveSummarizer::default().summarize(&entries).unwrap();
        prop_assert!(out.chars().count() <= text.trim().chars().count());
        prop_assert!(text.contains(&out));
    }
}
