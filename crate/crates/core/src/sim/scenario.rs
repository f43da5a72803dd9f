//! Scripted long-session scenarios.
//!
//! A scenario lists the facts a user states, the turns at which the agent is
//! asked to recall them, and the curation events a human applies. The harness
//! expands it, together with a seed, into a deterministic per-turn script of
//! messages, tool outputs and noise.

use std::collections::{BTreeMap, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::memory::MemoryKind;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactSpec {
    pub introduced_turn: u64,
    pub key: String,
    pub value: String,
    #[serde(default)]
    pub distractor_values: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub probe_turn: u64,
    pub key: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntrySelector {
    /// The entry that stated the key's current value.
    Fact(String),
    /// Every distractor entry recorded so far for the key.
    Distractors(String),
    /// Every entry recorded at the given turn.
    Turn(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackAction {
    Pin,
    Forget,
    Consolidate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackEvent {
    pub turn: u64,
    pub selector: EntrySelector,
    pub action: FeedbackAction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub schema_version: u32,
    #[serde(default)]
    pub name: String,
    pub turns: u64,
    #[serde(default)]
    pub seed: u64,
    pub facts: Vec<FactSpec>,
    pub probes: Vec<Probe>,
    #[serde(default)]
    pub feedback_events: Vec<FeedbackEvent>,
}

fn is_token(s: &str) -> bool {
    !s.is_empty()
        && s.chars().all(|c| !c.is_whitespace())
        && !s.ends_with(|c: char| c.is_ascii_punctuation() && c != '%')
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let scenario: Scenario =
            serde_json::from_str(text).map_err(|e| Error::InvalidScenario(format!("parse error: {e}")))?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidScenario(msg));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        if self.turns < 1 {
            return bad("turns must be at least 1".into());
        }
        let mut user_turns = HashSet::new();
        let mut keys = HashSet::new();
        for f in &self.facts {
            if !(1..=self.turns).contains(&f.introduced_turn) {
                return bad(format!("fact {} introduced outside 1..={}", f.key, self.turns));
            }
            if !is_token(&f.key) || !is_token(&f.value) {
                return bad(format!("fact key and value must be single tokens: {:?}", f.key));
            }
            if let Some(d) = f.distractor_values.iter().find(|d| !is_token(d) || **d == f.value) {
                return bad(format!("distractor {d:?} for {} must be a single token differing from the value", f.key));
            }
            if !user_turns.insert(f.introduced_turn) {
                return bad(format!("two scripted user events at turn {}", f.introduced_turn));
            }
            keys.insert(f.key.as_str());
        }
        for p in &self.probes {
            if !(1..=self.turns).contains(&p.probe_turn) {
                return bad(format!("probe of {} outside 1..={}", p.key, self.turns));
            }
            if !self.facts.iter().any(|f| f.key == p.key && f.introduced_turn < p.probe_turn) {
                return bad(format!("probe of {} at turn {} precedes its fact", p.key, p.probe_turn));
            }
            if !user_turns.insert(p.probe_turn) {
                return bad(format!("two scripted user events at turn {}", p.probe_turn));
            }
        }
        for ev in &self.feedback_events {
            if !(1..=self.turns).contains(&ev.turn) {
                return bad(format!("feedback at turn {} outside 1..={}", ev.turn, self.turns));
            }
            match &ev.selector {
                EntrySelector::Fact(k) | EntrySelector::Distractors(k) if !keys.contains(k.as_str()) => {
                    return bad(format!("feedback targets unknown key {k}"));
                }
                EntrySelector::Turn(t) if *t > ev.turn => {
                    return bad(format!("feedback at turn {} targets future turn {t}", ev.turn));
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Value the user last stated for `key` strictly before `turn`.
    pub fn expected_value(&self, key: &str, turn: u64) -> Option<&str> {
        self.facts
            .iter()
            .filter(|f| f.key == key && f.introduced_turn < turn)
            .max_by_key(|f| f.introduced_turn)
            .map(|f| f.value.as_str())
    }
}

/// Why a scripted event exists; drives bookkeeping in the harness.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Role {
    FactIntro { key: String },
    Probe { key: String },
    Distractor { key: String },
    Mention,
    Filler,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScriptedEvent {
    pub kind: MemoryKind,
    pub content: String,
    pub role: Role,
}

pub fn fact_statement(key: &str, value: &str) -> String {
    format!("Decision: the {key} is {value}. Please keep this in mind for the plan.")
}

const PROBE_TEMPLATES: &[&str] = &[
    "Quick check: what is the {key} again?",
    "Remind me which {key} we agreed on.",
    "Before I draft this part, confirm the {key} for me.",
    "What did we settle as the {key}?",
    "Can you restate the {key} we decided?",
    "I forgot the {key}; what was it?",
];

/// Recall question for `key`; `variant` picks the phrasing.
pub fn probe_question(key: &str, variant: usize) -> String {
    PROBE_TEMPLATES[variant % PROBE_TEMPLATES.len()].replace("{key}", key)
}

pub fn distractor_statement(key: &str, value: &str) -> String {
    format!("Vendor estimate lists the {key} as {value}. Unconfirmed.")
}

const SECTIONS: &[&str] = &[
    "requirements",
    "architecture",
    "staffing",
    "testing",
    "deployment",
    "risk",
    "budget review",
    "timeline",
    "vendor",
    "security",
    "onboarding",
    "reporting",
];
const VERBS: &[&str] = &["refine", "draft", "review", "expand", "tighten", "summarize"];
const TOOLS: &[&str] = &["tracker_api", "calendar_api", "repo_api", "docs_search", "cost_model"];
const STATUSES: &[&str] = &["green", "amber", "red", "blocked", "on track"];
const OWNERS: &[&str] = &["Ana", "Bo", "Chen", "Dara", "Eli", "Fay", "Gus", "Hana"];

const TOOL_PROBABILITY: f64 = 0.8;
const MENTION_PROBABILITY: f64 = 0.35;

/// Per-turn script, indexed by turn (1-based; index 0 unused).
#[derive(Debug, Clone, PartialEq)]
pub struct Script {
    turns: Vec<Vec<ScriptedEvent>>,
}

impl Script {
    pub fn build(scenario: &Scenario) -> Result<Self> {
        scenario.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
        let n = scenario.turns as usize;
        let mut turns: Vec<Vec<ScriptedEvent>> = vec![Vec::new(); n + 1];

        let intros: BTreeMap<u64, &FactSpec> = scenario.facts.iter().map(|f| (f.introduced_turn, f)).collect();
        let probes: BTreeMap<u64, &Probe> = scenario.probes.iter().map(|p| (p.probe_turn, p)).collect();

        let mut distractors: BTreeMap<u64, Vec<(&str, &str)>> = BTreeMap::new();
        for f in &scenario.facts {
            for d in &f.distractor_values {
                let span = scenario.turns - f.introduced_turn;
                if span == 0 {
                    continue;
                }
                let at = f.introduced_turn + rng.gen_range(1..=span);
                distractors.entry(at).or_default().push((f.key.as_str(), d.as_str()));
            }
        }

        for t in 1..=scenario.turns {
            let events = &mut turns[t as usize];
            let user = if let Some(f) = intros.get(&t) {
                ScriptedEvent {
                    kind: MemoryKind::UserMessage,
                    content: fact_statement(&f.key, &f.value),
                    role: Role::FactIntro { key: f.key.clone() },
                }
            } else if let Some(p) = probes.get(&t) {
                ScriptedEvent {
                    kind: MemoryKind::UserMessage,
                    content: probe_question(&p.key, rng.gen_range(0..PROBE_TEMPLATES.len())),
                    role: Role::Probe { key: p.key.clone() },
                }
            } else {
                ScriptedEvent {
                    kind: MemoryKind::UserMessage,
                    content: format!(
                        "Let's {} the {} section next and list open items for week {}.",
                        VERBS.choose(&mut rng).unwrap(),
                        SECTIONS.choose(&mut rng).unwrap(),
                        1 + rng.gen_range(0..12),
                    ),
                    role: Role::Filler,
                }
            };
            events.push(user);

            if rng.gen_bool(TOOL_PROBABILITY) {
                events.push(ScriptedEvent {
                    kind: MemoryKind::ToolCall,
                    content: format!(
                        "Tool {} returned {} records for the {} workstream; status {}, owners {} and {}, next sync on day {}, {} items pending review.",
                        TOOLS.choose(&mut rng).unwrap(),
                        rng.gen_range(1..200),
                        SECTIONS.choose(&mut rng).unwrap(),
                        STATUSES.choose(&mut rng).unwrap(),
                        OWNERS.choose(&mut rng).unwrap(),
                        OWNERS.choose(&mut rng).unwrap(),
                        rng.gen_range(1..60),
                        rng.gen_range(0..30),
                    ),
                    role: Role::Filler,
                });
            }

            let known: Vec<&str> = scenario
                .facts
                .iter()
                .filter(|f| f.introduced_turn < t)
                .map(|f| f.key.as_str())
                .collect();
            if !known.is_empty() && rng.gen_bool(MENTION_PROBABILITY) {
                events.push(ScriptedEvent {
                    kind: MemoryKind::Observation,
                    content: format!(
                        "Reminder: revisit the {} assumptions in the {} section before sign-off.",
                        known.choose(&mut rng).unwrap(),
                        SECTIONS.choose(&mut rng).unwrap(),
                    ),
                    role: Role::Mention,
                });
            }

            for (key, value) in distractors.get(&t).into_iter().flatten() {
                events.push(ScriptedEvent {
                    kind: MemoryKind::Observation,
                    content: distractor_statement(key, value),
                    role: Role::Distractor { key: key.to_string() },
                });
            }
        }
        Ok(Self { turns })
    }

    pub fn turn_count(&self) -> u64 {
        (self.turns.len() - 1) as u64
    }

    pub fn events(&self, turn: u64) -> &[ScriptedEvent] {
        self.turns.get(turn as usize).map_or(&[], Vec::as_slice)
    }
}
