//! Distilling episodic entries into semantic facts.

use crate::embedding::Embedder;
use crate::episodic::EpisodicStore;
use crate::error::{Error, Result};
use crate::memory::{EntryId, MemoryEntry};
use crate::semantic::{AddedFact, SemanticStore};
use crate::vector::check_dimension;

pub const DEFAULT_MAX_OUTPUT_CHARS: usize = 280;
const SEPARATOR: &str = "; ";

/// Turns a batch of entries into one concise summary.
pub trait Summarizer: Send + Sync {
    fn summarize(&self, entries: &[MemoryEntry]) -> Result<String>;
}

/// Deterministic extractive summarizer: the first sentence of each entry,
/// joined with `"; "`, cut at the last whole sentence that fits.
#[derive(Debug, Clone)]
pub struct ExtractiveSummarizer {
    pub max_output_chars: usize,
}

impl Default for ExtractiveSummarizer {
    fn default() -> Self {
        Self {
            max_output_chars: DEFAULT_MAX_OUTPUT_CHARS,
        }
    }
}

/// A sentence ends at `.`, `!` or `?` followed by whitespace or end of text.
/// Text without a terminator is one sentence.
pub fn first_sentence(text: &str) -> &str {
    let text = text.trim();
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if matches!(c, '.' | '!' | '?') {
            match chars.peek() {
                None => return text,
                Some((_, next)) if next.is_whitespace() => return &text[..i + c.len_utf8()],
                _ => {}
            }
        }
    }
    text
}

fn char_len(s: &str) -> usize {
    s.chars().count()
}

/// Cuts `s` to at most `limit` chars, backing off to the last whitespace so
/// no word is split. A first word longer than `limit` is cut between its
/// alphanumeric runs; if the first run alone is too long it is kept whole, so
/// the output never contains a token the input lacks.
fn cut_at_word(s: &str, limit: usize) -> &str {
    let end = s.char_indices().nth(limit).map_or(s.len(), |(i, _)| i);
    let head = &s[..end];
    if end == s.len() || s[end..].starts_with(char::is_whitespace) {
        return head.trim_end();
    }
    if let Some(ws) = head.rfind(char::is_whitespace) {
        if !head[..ws].trim().is_empty() {
            return head[..ws].trim_end();
        }
    }
    if !(head.ends_with(char::is_alphanumeric) && s[end..].starts_with(char::is_alphanumeric)) {
        return head;
    }
    let trimmed = head.trim_end_matches(char::is_alphanumeric);
    if !trimmed.is_empty() {
        return trimmed;
    }
    let run_end = s.find(|c: char| !c.is_alphanumeric()).unwrap_or(s.len());
    &s[..run_end]
}

impl ExtractiveSummarizer {
    pub fn new(max_output_chars: usize) -> Self {
        assert!(max_output_chars > 0, "max_output_chars must be positive");
        Self { max_output_chars }
    }

    pub fn summarize_texts<'a, I>(&self, contents: I) -> Result<String>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let sentences: Vec<&str> = contents
            .into_iter()
            .map(first_sentence)
            .filter(|s| !s.is_empty())
            .collect();
        let first = *sentences.first().ok_or(Error::EmptySummaryInput)?;
        let limit = self.max_output_chars;

        if char_len(first) > limit {
            return Ok(cut_at_word(first, limit).to_string());
        }
        let mut out = first.to_string();
        let mut len = char_len(first);
        for s in &sentences[1..] {
            let add = char_len(SEPARATOR) + char_len(s);
            if len + add > limit {
                break;
            }
            out.push_str(SEPARATOR);
            out.push_str(s);
            len += add;
        }
        Ok(out)
    }
}

impl Summarizer for ExtractiveSummarizer {
    fn summarize(&self, entries: &[MemoryEntry]) -> Result<String> {
        self.summarize_texts(entries.iter().map(|e| e.content.as_str()))
    }
}

/// Summarizes `entries` and embeds the result: the fact text and its raw
/// embedding, ready for [`SemanticStore::add_fact`].
pub fn distill(
    entries: &[MemoryEntry],
    summarizer: &dyn Summarizer,
    embedder: &dyn Embedder,
) -> Result<(String, Vec<f64>)> {
    if entries.is_empty() {
        return Err(Error::EmptySummaryInput);
    }
    let text = summarizer.summarize(entries)?;
    if text.trim().is_empty() {
        return Err(Error::Summarizer("summarizer returned empty text".into()));
    }
    let embedding = embedder.embed(&text)?;
    Ok((text, embedding))
}

/// Distills one entry into a semantic fact. The entry stays in the episodic
/// store; deleting it is the caller's decision.
pub fn consolidate_entry(
    id: EntryId,
    episodic: &EpisodicStore,
    semantic: &mut SemanticStore,
    summarizer: &dyn Summarizer,
    embedder: &dyn Embedder,
) -> Result<AddedFact> {
    consolidate_batch(&[id], episodic, semantic, summarizer, embedder)
}

/// Distills several entries, in time order, into a single fact whose
/// provenance lists all of them.
pub fn consolidate_batch(
    ids: &[EntryId],
    episodic: &EpisodicStore,
    semantic: &mut SemanticStore,
    summarizer: &dyn Summarizer,
    embedder: &dyn Embedder,
) -> Result<AddedFact> {
    check_dimension(semantic.dimension(), embedder.dimension())?;
    let mut entries = ids
        .iter()
        .map(|id| episodic.get(*id).cloned())
        .collect::<Result<Vec<_>>>()?;
    entries.sort_by_key(|e| (e.turn, e.id));
    let (text, embedding) = distill(&entries, summarizer, embedder)?;
    let source_turn = entries.iter().map(|e| e.turn).max().unwrap_or(0);
    semantic.add_fact(text, ids, &embedding, episodic.current_turn(), source_turn)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::HashingEmbedder;
    use crate::memory::MemoryKind;

    fn summ(texts: &[&str], max: usize) -> Result<String> {
        ExtractiveSummarizer::new(max).summarize_texts(texts.iter().copied())
    }

    #[test]
    fn sentence_boundaries() {
        assert_eq!(first_sentence("Budget is 50k. Discuss later."), "Budget is 50k.");
        assert_eq!(first_sentence("Done!"), "Done!");
        assert_eq!(first_sentence("v1.2 shipped? yes"), "v1.2 shipped?");
        assert_eq!(first_sentence("no terminator here"), "no terminator here");
        assert_eq!(first_sentence("  padded.  "), "padded.");
        assert_eq!(first_sentence("e.g.this stays. Next"), "e.g.this stays.");
    }

    #[test]
    fn single_entry_extraction() {
        assert_eq!(summ(&["Budget is 50k. Discuss later."], 280).unwrap(), "Budget is 50k.");
    }

    #[test]
    fn two_entries_joined() {
        let out = summ(&["Budget is 50k. Discuss later.", "Launch in May! Maybe June."], 280).unwrap();
        assert_eq!(out, "Budget is 50k.; Launch in May!");
    }

    #[test]
    fn truncates_at_last_fitting_sentence() {
        // "Alpha one." (10) + "; " + "Beta two." (9) = 21; the third needs 2 + 12 more.
        let texts = ["Alpha one. x", "Beta two. y", "Gamma three. z"];
        assert_eq!(summ(&texts, 20).unwrap(), "Alpha one.");
        assert_eq!(summ(&texts, 21).unwrap(), "Alpha one.; Beta two.");
        assert_eq!(summ(&texts, 34).unwrap(), "Alpha one.; Beta two.");
        assert_eq!(summ(&texts, 35).unwrap(), "Alpha one.; Beta two.; Gamma three.");
    }

    #[test]
    fn oversized_first_sentence_cut_at_word() {
        assert_eq!(summ(&["The quarterly budget is fifty thousand."], 20).unwrap(), "The quarterly budget");
        assert_eq!(summ(&["key=value,other=thing."], 12).unwrap(), "key=value,");
        assert_eq!(summ(&["Supercalifragilistic."], 5).unwrap(), "Supercalifragilistic");
    }

    #[test]
    fn empty_input_rejected() {
        assert_eq!(summ(&[], 280), Err(Error::EmptySummaryInput));
        assert_eq!(summ(&["   "], 280), Err(Error::EmptySummaryInput));
    }

    #[test]
    fn consolidate_links_provenance_and_dedups() {
        let emb = HashingEmbedder::new(32);
        let mut ep = EpisodicStore::new(32, 2);
        ep.advance_turn();
        let id = ep
            .insert_with(
                MemoryKind::ToolCall,
                "API returned 42 open tickets. Raw payload follows.",
                emb.embed("API returned 42 open tickets").unwrap(),
                None,
                true,
            )
            .unwrap();
        ep.advance_turn();
        let mut sem = SemanticStore::new(32);
        let s = ExtractiveSummarizer::default();
        let a = consolidate_entry(id, &ep, &mut sem, &s, &emb).unwrap();
        assert!(a.created);
        let fact = sem.get(a.id).unwrap();
        assert_eq!(fact.text, "API returned 42 open tickets.");
        assert_eq!(fact.source_entry_ids, vec![id]);
        assert_eq!(fact.source_turn, 1);
        assert_eq!(fact.created_turn, 2);
        assert!(ep.contains(id));

        let b = consolidate_entry(id, &ep, &mut sem, &s, &emb).unwrap();
        assert_eq!(b.id, a.id);
        assert_eq!(sem.len(), 1);

        assert_eq!(
            consolidate_entry(EntryId(77), &ep, &mut sem, &s, &emb).unwrap_err(),
            Error::UnknownEntry(EntryId(77))
        );
    }

    #[test]
    fn batch_lists_every_source() {
        let emb = HashingEmbedder::new(16);
        let mut ep = EpisodicStore::new(16, 2);
        let a = ep
            .insert_with(MemoryKind::UserMessage, "First point.", emb.embed("first").unwrap(), None, false)
            .unwrap();
        ep.advance_turn();
        let b = ep
            .insert_with(MemoryKind::UserMessage, "Second point.", emb.embed("second").unwrap(), None, false)
            .unwrap();
        let mut sem = SemanticStore::new(16);
        let f = consolidate_batch(&[b, a], &ep, &mut sem, &ExtractiveSummarizer::default(), &emb).unwrap();
        let fact = sem.get(f.id).unwrap();
        assert_eq!(fact.source_entry_ids, vec![a, b]);
        assert_eq!(fact.text, "First point.; Second point.");
        assert_eq!(fact.source_turn, 1);
    }

    struct Failing;
    impl Summarizer for Failing {
        fn summarize(&self, _: &[MemoryEntry]) -> Result<String> {
            Err(Error::Summarizer("offline".into()))
        }
    }

    #[test]
    fn summarizer_failure_propagates() {
        let emb = HashingEmbedder::new(16);
        let mut ep = EpisodicStore::new(16, 2);
        let id = ep
            .insert_with(MemoryKind::Observation, "x.", emb.embed("x").unwrap(), None, false)
            .unwrap();
        let mut sem = SemanticStore::new(16);
        assert!(matches!(
            consolidate_entry(id, &ep, &mut sem, &Failing, &emb),
            Err(Error::Summarizer(_))
        ));
        assert!(sem.is_empty());
    }
}
