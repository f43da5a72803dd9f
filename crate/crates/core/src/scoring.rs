//! Utility scoring.
//!
//! Each episodic entry gets a composite score
//!
//! ```text
//! S = alpha * R + beta * E + gamma * U
//! R = exp(-lambda * (t_current - t_entry))      recency, in (0, 1]
//! E = (cos(v_entry, v_task) + 1) / 2            relevance, in [0, 1]
//! U = user_utility / n_max                      normalized utility, in [0, 1]
//! ```
//!
//! All three components share the unit interval so `theta_decay` reads the
//! same way regardless of `n_max`. Raw cosine is kept for retrieval ranking.

use serde::{Deserialize, Serialize};

use crate::config::{DecayConfig, TimeMode};
use crate::error::{Error, Result};
use crate::memory::MemoryEntry;
use crate::vector::{cosine_similarity, Embedding};

/// What the entry is scored against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskContext {
    pub task_vector: Embedding,
    pub current_turn: u64,
    /// Required only in [`TimeMode::WallClock`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub now_secs: Option<f64>,
}

impl TaskContext {
    pub fn new(task_vector: Embedding, current_turn: u64) -> Self {
        Self {
            task_vector,
            current_turn,
            now_secs: None,
        }
    }
}

/// Per-component scores, reported individually for display.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreBreakdown {
    pub recency: f64,
    pub relevance: f64,
    pub user_utility_norm: f64,
    pub total: f64,
}

/// `exp(-lambda * (current_turn - entry_turn))`.
pub fn recency(current_turn: u64, entry_turn: u64, lambda: f64) -> Result<f64> {
    if current_turn < entry_turn {
        return Err(Error::ClockSkew {
            current: current_turn as f64,
            entry: entry_turn as f64,
        });
    }
    recency_elapsed((current_turn - entry_turn) as f64, lambda)
}

/// Recency for an arbitrary nonnegative elapsed time.
pub fn recency_elapsed(elapsed: f64, lambda: f64) -> Result<f64> {
    if elapsed.is_nan() || elapsed < 0.0 {
        return Err(Error::ClockSkew {
            current: 0.0,
            entry: -elapsed,
        });
    }
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(Error::InvalidConfig("lambda must be a finite nonnegative number".into()));
    }
    if lambda == 0.0 {
        return Ok(1.0);
    }
    Ok((-lambda * elapsed).exp())
}

/// Raw cosine similarity between the entry and the task vector, in [-1, 1].
pub fn relevance_cosine(entry_vector: &[f64], task_vector: &[f64]) -> Result<f64> {
    cosine_similarity(entry_vector, task_vector)
}

/// Maps a raw cosine onto [0, 1].
pub fn map_cosine(cosine: f64) -> f64 {
    ((cosine + 1.0) / 2.0).clamp(0.0, 1.0)
}

/// Relevance as used in the score: cosine mapped to [0, 1].
pub fn relevance(entry_vector: &[f64], task_vector: &[f64]) -> Result<f64> {
    relevance_cosine(entry_vector, task_vector).map(map_cosine)
}

pub fn normalize_user_utility(u: u32, n_max: u32) -> Result<f64> {
    if n_max == 0 {
        return Err(Error::InvalidConfig("n_max must be at least 1".into()));
    }
    if u > n_max {
        return Err(Error::UtilityOutOfRange { value: u, n_max });
    }
    Ok(f64::from(u) / f64::from(n_max))
}

/// Weighted sum of the three components.
pub fn combine(config: &DecayConfig, recency: f64, relevance: f64, user_utility_norm: f64) -> ScoreBreakdown {
    ScoreBreakdown {
        recency,
        relevance,
        user_utility_norm,
        total: config.alpha * recency + config.beta * relevance + config.gamma * user_utility_norm,
    }
}

pub fn utility_score(entry: &MemoryEntry, task: &TaskContext, config: &DecayConfig) -> Result<ScoreBreakdown> {
    let r = match config.time_mode {
        TimeMode::Turns => recency(task.current_turn, entry.turn, config.lambda)?,
        TimeMode::WallClock => {
            let (now, then) = match (task.now_secs, entry.wall_clock_secs) {
                (Some(now), Some(then)) => (now, then),
                _ => {
                    return Err(Error::InvalidConfig(
                        "wall-clock mode needs wall-clock stamps on the task and every entry".into(),
                    ))
                }
            };
            if now < then {
                return Err(Error::ClockSkew { current: now, entry: then });
            }
            recency_elapsed(now - then, config.lambda)?
        }
    };
    let e = map_cosine(entry.embedding.cosine(&task.task_vector)?);
    let u = normalize_user_utility(entry.user_utility, config.n_max)?;
    Ok(combine(config, r, e, u))
}
