//! Rule-based reader that answers a recall probe from an assembled context.
//!
//! A user statement ("the KEY is VALUE") is authoritative; among several, the
//! one with the newest turn wins, later bundle position breaking ties. Without
//! one the reader repeats the newest third-party figure ("lists the KEY as
//! VALUE") it can see, and otherwise abstains.

use serde::{Deserialize, Serialize};

use crate::strategies::ContextBundle;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "from", content = "value")]
pub enum Answer {
    Statement(String),
    Distractor(String),
    Abstain,
}

impl Answer {
    pub fn value(&self) -> Option<&str> {
        match self {
            Answer::Statement(v) | Answer::Distractor(v) => Some(v),
            Answer::Abstain => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Correct,
    Contradiction,
    Abstain,
}

fn values_after<'a>(text: &'a str, pattern: &str) -> Vec<&'a str> {
    text.match_indices(pattern)
        .filter_map(|(i, m)| {
            let rest = &text[i + m.len()..];
            let word = rest.split_whitespace().next()?;
            let word = word.trim_end_matches(|c: char| c.is_ascii_punctuation() && c != '%');
            (!word.is_empty()).then_some(word)
        })
        .collect()
}

fn newest(bundle: &ContextBundle, pattern: &str) -> Option<String> {
    bundle
        .items
        .iter()
        .enumerate()
        .flat_map(|(pos, item)| values_after(&item.text, pattern).into_iter().map(move |v| ((item.turn, pos), v)))
        .max_by_key(|(rank, _)| *rank)
        .map(|(_, v)| v.to_string())
}

pub fn answer_probe(bundle: &ContextBundle, key: &str) -> Answer {
    if let Some(v) = newest(bundle, &format!("the {key} is ")) {
        return Answer::Statement(v);
    }
    if let Some(v) = newest(bundle, &format!("lists the {key} as ")) {
        return Answer::Distractor(v);
    }
    Answer::Abstain
}

/// Any answered value other than the expected one conflicts with what the
/// user said.
pub fn grade(answer: &Answer, expected: &str) -> Outcome {
    match answer.value() {
        None => Outcome::Abstain,
        Some(v) if v == expected => Outcome::Correct,
        Some(_) => Outcome::Contradiction,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::memory::EntryId;
    use crate::strategies::{ContextItem, ContextSource, Origin};

    fn bundle(items: &[(u64, &str)]) -> ContextBundle {
        ContextBundle::new(
            items
                .iter()
                .enumerate()
                .map(|(i, (turn, text))| ContextItem {
                    source: ContextSource::Episodic,
                    origin: Origin::Entry(EntryId(i as u64)),
                    turn: *turn,
                    text: text.to_string(),
                })
                .collect(),
        )
    }

    #[test]
    fn newest_statement_wins() {
        let b = bundle(&[
            (30, "Decision: the budget_cap is 60k. Please keep this in mind."),
            (10, "Decision: the budget_cap is 50k. Please keep this in mind."),
            (40, "Vendor estimate lists the budget_cap as 45k."),
        ]);
        assert_eq!(answer_probe(&b, "budget_cap"), Answer::Statement("60k".into()));
    }

    #[test]
    fn position_breaks_turn_ties() {
        let b = bundle(&[(5, "the region is eu"), (5, "the region is us")]);
        assert_eq!(answer_probe(&b, "region"), Answer::Statement("us".into()));
    }

    #[test]
    fn falls_back_to_distractor_then_abstains() {
        let b = bundle(&[(3, "Vendor estimate lists the budget_cap as 45k. Unconfirmed.")]);
        assert_eq!(answer_probe(&b, "budget_cap"), Answer::Distractor("45k".into()));
        assert_eq!(answer_probe(&b, "region"), Answer::Abstain);
        let q = bundle(&[(3, "Quick check: what is the budget_cap again?")]);
        assert_eq!(answer_probe(&q, "budget_cap"), Answer::Abstain);
    }

    #[test]
    fn keys_do_not_match_by_prefix() {
        let b = bundle(&[(3, "Decision: the budget_cap_eu is 9k.")]);
        assert_eq!(answer_probe(&b, "budget_cap"), Answer::Abstain);
    }

    #[test]
    fn grading() {
        assert_eq!(grade(&Answer::Statement("50k".into()), "50k"), Outcome::Correct);
        assert_eq!(grade(&Answer::Statement("40k".into()), "50k"), Outcome::Contradiction);
        assert_eq!(grade(&Answer::Distractor("45k".into()), "50k"), Outcome::Contradiction);
        assert_eq!(grade(&Answer::Abstain, "50k"), Outcome::Abstain);
    }
}
