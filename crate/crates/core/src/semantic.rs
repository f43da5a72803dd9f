//! Semantic memory: distilled facts with provenance. Facts never decay.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::memory::EntryId;
use crate::vector::{check_dimension, rank_exhaustive, Candidate, Embedding};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FactId(pub u64);

impl fmt::Display for FactId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "f{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemanticFact {
    pub id: FactId,
    pub text: String,
    /// Sorted, deduplicated. Kept after the sources themselves are deleted.
    pub source_entry_ids: Vec<EntryId>,
    pub created_turn: u64,
    /// Latest turn among the source entries at distillation time.
    pub source_turn: u64,
    pub embedding: Embedding,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FactHit {
    pub fact_id: FactId,
    pub raw_cosine: f64,
    pub rank: usize,
}

/// Outcome of [`SemanticStore::add_fact`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AddedFact {
    pub id: FactId,
    /// `false` when an identical fact already existed.
    pub created: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemanticStore {
    dimension: usize,
    next_id: u64,
    facts: Vec<SemanticFact>,
}

impl SemanticStore {
    pub fn new(dimension: usize) -> Self {
        assert!(dimension > 0, "dimension must be positive");
        Self {
            dimension,
            next_id: 0,
            facts: Vec::new(),
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    pub fn next_id(&self) -> FactId {
        FactId(self.next_id)
    }

    /// Adds a fact unless one with the same text and source set exists.
    pub fn add_fact(
        &mut self,
        text: impl Into<String>,
        source_ids: &[EntryId],
        embedding: &[f64],
        created_turn: u64,
        source_turn: u64,
    ) -> Result<AddedFact> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(Error::EmptyFactText);
        }
        if source_ids.is_empty() {
            return Err(Error::EmptyFactSources);
        }
        check_dimension(self.dimension, embedding.len())?;
        let mut sources = source_ids.to_vec();
        sources.sort();
        sources.dedup();

        if let Some(existing) = self
            .facts
            .iter()
            .find(|f| f.text == text && f.source_entry_ids == sources)
        {
            return Ok(AddedFact {
                id: existing.id,
                created: false,
            });
        }

        let embedding = Embedding::normalize(embedding)?;
        let id = FactId(self.next_id);
        self.next_id += 1;
        self.facts.push(SemanticFact {
            id,
            text,
            source_entry_ids: sources,
            created_turn,
            source_turn,
            embedding,
        });
        Ok(AddedFact { id, created: true })
    }

    /// Re-adds a serialized fact verbatim (log replay). Duplicates of an
    /// existing id are ignored when identical.
    pub fn restore(&mut self, fact: SemanticFact) -> Result<()> {
        check_dimension(self.dimension, fact.embedding.dimension())?;
        if let Some(existing) = self.facts.iter().find(|f| f.id == fact.id) {
            return if *existing == fact {
                Ok(())
            } else {
                Err(Error::Replay(format!("conflicting fact {}", fact.id)))
            };
        }
        if fact.text.trim().is_empty() {
            return Err(Error::EmptyFactText);
        }
        if fact.source_entry_ids.is_empty() {
            return Err(Error::EmptyFactSources);
        }
        self.next_id = self.next_id.max(fact.id.0 + 1);
        self.facts.push(fact);
        self.facts.sort_by_key(|f| f.id);
        Ok(())
    }

    pub fn get(&self, id: FactId) -> Option<&SemanticFact> {
        self.facts.iter().find(|f| f.id == id)
    }

    /// Creation order.
    pub fn get_all_facts(&self) -> &[SemanticFact] {
        &self.facts
    }

    /// Same ordering contract as the episodic search; the fact's
    /// `created_turn` is its timestamp.
    pub fn query_facts(&self, query: &[f64], k: usize) -> Result<Vec<FactHit>> {
        check_dimension(self.dimension, query.len())?;
        if k == 0 || self.facts.is_empty() {
            return Ok(Vec::new());
        }
        let query = Embedding::normalize(query)?;
        let ranked = rank_exhaustive(
            &query,
            self.facts.iter().map(|f| Candidate {
                id: f.id,
                turn: f.created_turn,
                embedding: &f.embedding,
            }),
            k,
        );
        Ok(ranked
            .into_iter()
            .enumerate()
            .map(|(i, (fact_id, raw_cosine))| FactHit {
                fact_id,
                raw_cosine,
                rank: i + 1,
            })
            .collect())
    }
}
