use std::fs;
use std::path::Path;

use mnemex_core::{DecayConfig, Embedder, HashingEmbedder, MemoryKind};
use mnemex_service::engine::replay_from_genesis;
use mnemex_service::log::{events_path, read_events, snapshot_sequences};
use mnemex_service::{Engine, EventKind, InsertRequest, ServiceError};

fn req(kind: MemoryKind, content: &str) -> InsertRequest {
    InsertRequest {
        kind,
        content: content.into(),
        embedding: None,
        user_utility: None,
        consolidation_flag: false,
        wall_clock_secs: None,
    }
}

fn dim() -> usize {
    HashingEmbedder::default().dimension()
}

fn event_count(dir: &Path) -> usize {
    read_events(&events_path(dir)).unwrap().len()
}

#[test]
fn empty_dir_is_empty_state() {
    let dir = tempfile::tempdir().unwrap();
    let engine = Engine::open(dir.path()).unwrap();
    assert!(engine.timeline().unwrap().is_empty());
    assert_eq!(engine.metrics().last_sequence, 0);
    assert_eq!(event_count(dir.path()), 0);
}

#[test]
fn insert_pin_decay_survives_restart() {
    let dir = tempfile::tempdir().unwrap();
    let (state, timeline) = {
        let engine = Engine::open(dir.path()).unwrap();
        let a = engine.insert(req(MemoryKind::UserMessage, "Draft the budget.")).unwrap();
        let b = engine.insert(req(MemoryKind::Observation, "Noise.")).unwrap();
        engine.set_utility(a.id, 2).unwrap();
        engine.set_utility(b.id, 0).unwrap();
        let report = engine.run_decay().unwrap();
        assert_eq!(report.deleted_ids, vec![b.id]);
        (engine.state_json(), serde_json::to_string(&engine.timeline().unwrap()).unwrap())
    };
    let restarted = Engine::open(dir.path()).unwrap();
    assert_eq!(restarted.state_json(), state);
    assert_eq!(serde_json::to_string(&restarted.timeline().unwrap()).unwrap(), timeline);
    assert_eq!(replay_from_genesis(dir.path(), dim()).unwrap().to_json(), state);
}

#[test]
fn one_event_per_mutation() {
    let dir = tempfile::tempdir().unwrap();
    let engine = Engine::open(dir.path()).unwrap();
    let mut expected = Vec::new();

    let a = engine.insert(req(MemoryKind::UserMessage, "Pick a vendor.")).unwrap();
    expected.push(EventKind::Insert);
    let b = engine.insert(req(MemoryKind::ToolCall, "Quote: 12k. Valid 30 days.")).unwrap();
    expected.push(EventKind::Insert);
    engine.set_utility(a.id, 1).unwrap();
    expected.push(EventKind::UtilityChange);
    engine.consolidate(b.id).unwrap();
    expected.push(EventKind::Consolidate);
    engine.advance_turn().unwrap();
    expected.push(EventKind::TurnAdvance);
    engine.run_decay().unwrap();
    expected.push(EventKind::DecayRun);
    engine.delete(a.id).unwrap();
    expected.push(EventKind::Delete);
    engine.set_config(DecayConfig::default()).unwrap();
    expected.push(EventKind::ConfigChange);

    // failed mutations and reads log nothing
    assert!(engine.set_utility(a.id, 1).is_err());
    engine.timeline().unwrap();
    engine.metrics();

    let events = read_events(&events_path(dir.path())).unwrap();
    assert_eq!(events.iter().map(|e| e.kind).collect::<Vec<_>>(), expected);
    let seqs: Vec<u64> = events.iter().map(|e| e.sequence_number).collect();
    assert_eq!(seqs, (1..=expected.len() as u64).collect::<Vec<_>>());

    let text = fs::read_to_string(events_path(dir.path())).unwrap();
    assert!(text.lines().all(|l| l.contains("\"kind\":") && l.contains("\"payload\":")));
}

#[test]
fn snapshots_and_genesis_agree() {
    let dir = tempfile::tempdir().unwrap();
    let state = {
        let engine = Engine::builder().data_dir(dir.path()).snapshot_every(7).build().unwrap();
        for i in 0..30 {
            let e = engine
                .insert(req(MemoryKind::Observation, &format!("Observation {i} about module m{}.", i % 4)))
                .unwrap();
            if i % 3 == 0 {
                engine.set_utility(e.id, (i % 3) as u32).unwrap();
            }
            engine.advance_turn().unwrap();
        }
        engine.state_json()
    };
    assert!(!snapshot_sequences(dir.path()).unwrap().is_empty());
    assert_eq!(Engine::open(dir.path()).unwrap().state_json(), state);
    assert_eq!(replay_from_genesis(dir.path(), dim()).unwrap().to_json(), state);

    // a damaged snapshot falls back to an older one or to genesis
    let newest = snapshot_sequences(dir.path()).unwrap()[0];
    fs::write(dir.path().join(format!("snapshot-{newest}.json")), "{").unwrap();
    assert_eq!(Engine::open(dir.path()).unwrap().state_json(), state);
}

#[test]
fn custom_config_is_logged_at_genesis() {
    let dir = tempfile::tempdir().unwrap();
    let config = DecayConfig::new(0.5, 0.3, 0.2, 0.1, 0.4).unwrap();
    let state = {
        let engine = Engine::builder().data_dir(dir.path()).config(config.clone()).build().unwrap();
        engine.insert(req(MemoryKind::UserMessage, "Hello.")).unwrap();
        engine.state_json()
    };
    let events = read_events(&events_path(dir.path())).unwrap();
    assert_eq!(events[0].kind, EventKind::ConfigChange);
    assert_eq!(replay_from_genesis(dir.path(), dim()).unwrap().to_json(), state);

    // reopening with a different builder config keeps the logged one
    let reopened = Engine::builder().data_dir(dir.path()).build().unwrap();
    assert_eq!(reopened.config(), config);
    assert_eq!(event_count(dir.path()), 2);
}

#[test]
fn truncated_log_names_byte_offset() {
    let dir = tempfile::tempdir().unwrap();
    {
        let engine = Engine::open(dir.path()).unwrap();
        engine.insert(req(MemoryKind::UserMessage, "One.")).unwrap();
        engine.insert(req(MemoryKind::UserMessage, "Two.")).unwrap();
    }
    let path = events_path(dir.path());
    let text = fs::read_to_string(&path).unwrap();
    let first_len = text.find('\n').unwrap() + 1;
    fs::write(&path, &text[..text.len() - 10]).unwrap();

    let err = match Engine::open(dir.path()) {
        Err(ServiceError::Log(e)) => e,
        Err(other) => panic!("unexpected error {other}"),
        Ok(_) => panic!("truncated log accepted"),
    };
    assert_eq!(err.byte_offset, first_len as u64);
    assert!(err.to_string().contains(&format!("byte offset {first_len}")), "{err}");
}

#[test]
fn corrupt_middle_line_halts_replay() {
    let dir = tempfile::tempdir().unwrap();
    {
        let engine = Engine::open(dir.path()).unwrap();
        for c in ["A.", "B.", "C."] {
            engine.insert(req(MemoryKind::UserMessage, c)).unwrap();
        }
    }
    let path = events_path(dir.path());
    let text = fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    fs::write(&path, format!("{}\n{{garbage}}\n{}\n", lines[0], lines[2])).unwrap();
    let Err(ServiceError::Log(err)) = Engine::open(dir.path()) else {
        panic!("corrupt log accepted");
    };
    assert_eq!(err.line, 2);
    assert_eq!(err.byte_offset, lines[0].len() as u64 + 1);
}

#[test]
fn appends_continue_after_restart() {
    let dir = tempfile::tempdir().unwrap();
    {
        let engine = Engine::open(dir.path()).unwrap();
        engine.insert(req(MemoryKind::UserMessage, "First.")).unwrap();
    }
    let engine = Engine::open(dir.path()).unwrap();
    let e = engine.insert(req(MemoryKind::UserMessage, "Second.")).unwrap();
    assert_eq!(e.id.0, 1);
    let events = read_events(&events_path(dir.path())).unwrap();
    assert_eq!(events.iter().map(|e| e.sequence_number).collect::<Vec<_>>(), vec![1, 2]);
}

#[test]
fn dimension_mismatch_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    {
        let engine = Engine::open(dir.path()).unwrap();
        engine.insert(req(MemoryKind::UserMessage, "x")).unwrap();
    }
    let small = std::sync::Arc::new(HashingEmbedder::new(8));
    assert_eq!(small.dimension(), 8);
    let result = Engine::builder().data_dir(dir.path()).embedder(small).build();
    assert!(matches!(result, Err(ServiceError::Invalid(_))));
}
