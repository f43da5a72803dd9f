//! Append-only JSON-Lines audit log and state snapshots.
//!
//! `events.jsonl` holds one [`AuditEvent`] per line with gapless sequence
//! numbers starting at 1. `snapshot-{seq}.json` holds the serialized state
//! after event `seq`; startup loads the newest readable snapshot and replays
//! the events after it.

use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{LogError, Result, ServiceError};
use crate::state::{EventKind, MemoryState, Mutation};

pub const EVENTS_FILE: &str = "events.jsonl";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditEvent {
    pub sequence_number: u64,
    pub turn: u64,
    pub kind: EventKind,
    pub payload: serde_json::Value,
}

impl AuditEvent {
    pub fn mutation(&self) -> Result<Mutation, String> {
        Mutation::from_payload(self.kind, &self.payload)
    }
}

pub fn events_path(dir: &Path) -> PathBuf {
    dir.join(EVENTS_FILE)
}

pub fn snapshot_path(dir: &Path, sequence_number: u64) -> PathBuf {
    dir.join(format!("snapshot-{sequence_number}.json"))
}

/// Parses the whole log, checking that sequence numbers run 1, 2, 3, ...
/// A missing file is an empty log.
pub fn read_events(path: &Path) -> Result<Vec<AuditEvent>, LogError> {
    let bytes = match fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => {
            return Err(LogError {
                path: path.to_path_buf(),
                line: 0,
                byte_offset: 0,
                reason: e.to_string(),
            })
        }
    };
    let fail = |line: usize, offset: usize, reason: String| LogError {
        path: path.to_path_buf(),
        line,
        byte_offset: offset as u64,
        reason,
    };

    let mut events = Vec::new();
    let mut offset = 0usize;
    let mut line_no = 0usize;
    while offset < bytes.len() {
        line_no += 1;
        let rest = &bytes[offset..];
        let (line, terminated) = match rest.iter().position(|b| *b == b'\n') {
            Some(i) => (&rest[..i], true),
            None => (rest, false),
        };
        let parsed = std::str::from_utf8(line)
            .map_err(|e| e.to_string())
            .and_then(|text| serde_json::from_str::<AuditEvent>(text).map_err(|e| e.to_string()));
        let event = match parsed {
            Ok(ev) if terminated => ev,
            Ok(_) => return Err(fail(line_no, offset, "final line is not newline-terminated (truncated write)".into())),
            Err(e) if !terminated => return Err(fail(line_no, offset, format!("truncated final line: {e}"))),
            Err(e) => return Err(fail(line_no, offset, format!("corrupt event: {e}"))),
        };
        let expected = events.len() as u64 + 1;
        if event.sequence_number != expected {
            return Err(fail(
                line_no,
                offset,
                format!("sequence number {} where {expected} was expected", event.sequence_number),
            ));
        }
        if let Err(e) = event.mutation() {
            return Err(fail(line_no, offset, format!("bad {:?} payload: {e}", event.kind)));
        }
        events.push(event);
        offset += line.len() + usize::from(terminated);
    }
    Ok(events)
}

/// Folds `events` into `state`, skipping those at or before its sequence.
pub fn replay(state: &mut MemoryState, events: &[AuditEvent]) -> Result<()> {
    let start = state.last_sequence;
    for ev in events.iter().filter(|e| e.sequence_number > start) {
        let mutation = ev.mutation().map_err(ServiceError::Internal)?;
        state.apply(ev.sequence_number, &mutation).map_err(|e| {
            ServiceError::Internal(format!("replay failed at event {}: {e}", ev.sequence_number))
        })?;
    }
    Ok(())
}

/// Snapshot sequence numbers present in `dir`, newest first.
pub fn snapshot_sequences(dir: &Path) -> Result<Vec<u64>> {
    let entries = match fs::read_dir(dir) {
        Ok(e) => e,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(ServiceError::io(dir, e)),
    };
    let mut seqs: Vec<u64> = entries
        .filter_map(|e| e.ok())
        .filter_map(|e| {
            let name = e.file_name().into_string().ok()?;
            name.strip_prefix("snapshot-")?.strip_suffix(".json")?.parse().ok()
        })
        .collect();
    seqs.sort_unstable_by(|a, b| b.cmp(a));
    Ok(seqs)
}

pub fn write_snapshot(dir: &Path, state: &MemoryState) -> Result<PathBuf> {
    let path = snapshot_path(dir, state.last_sequence);
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, state.to_json()).map_err(|e| ServiceError::io(&tmp, e))?;
    fs::rename(&tmp, &path).map_err(|e| ServiceError::io(&path, e))?;
    Ok(path)
}

pub fn read_snapshot(path: &Path) -> Result<MemoryState> {
    let text = fs::read_to_string(path).map_err(|e| ServiceError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| ServiceError::Internal(format!("{}: {e}", path.display())))
}

/// Open handle for appending events.
#[derive(Debug)]
pub struct EventLog {
    path: PathBuf,
    file: File,
    next_sequence: u64,
}

impl EventLog {
    pub fn open(path: &Path, next_sequence: u64) -> Result<Self> {
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| ServiceError::io(path, e))?;
        Ok(Self {
            path: path.to_path_buf(),
            file,
            next_sequence,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn next_sequence(&self) -> u64 {
        self.next_sequence
    }

    /// Writes and syncs one event; the sequence number is assigned here.
    pub fn append(&mut self, turn: u64, mutation: &Mutation) -> Result<AuditEvent> {
        let event = AuditEvent {
            sequence_number: self.next_sequence,
            turn,
            kind: mutation.kind(),
            payload: mutation.to_payload(),
        };
        let mut line = serde_json::to_string(&event).expect("events serialize");
        line.push('\n');
        self.file
            .write_all(line.as_bytes())
            .and_then(|_| self.file.sync_data())
            .map_err(|e| ServiceError::io(&self.path, e))?;
        self.next_sequence += 1;
        Ok(event)
    }
}
