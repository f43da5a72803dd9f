//! Text embedders.

use crate::error::{Error, Result};

pub const DEFAULT_DIMENSION: usize = 256;
const DEFAULT_HASH_SEED: u64 = 0x6d6e_656d_6578_0001;

pub trait Embedder: Send + Sync {
    fn dimension(&self) -> usize;

    /// Raw (not necessarily unit-norm) vector for `text`.
    fn embed(&self, text: &str) -> Result<Vec<f64>>;
}

/// Feature-hashed bag of words.
///
/// Tokens are lowercase alphanumeric runs. Each token is hashed with seeded
/// FNV-1a; the low bits pick a bucket and one high bit picks the sign, so
/// unrelated texts land near zero cosine instead of sharing a positive bias.
#[derive(Debug, Clone)]
pub struct HashingEmbedder {
    dimension: usize,
    seed: u64,
}

impl Default for HashingEmbedder {
    fn default() -> Self {
        Self::new(DEFAULT_DIMENSION)
    }
}

impl HashingEmbedder {
    pub fn new(dimension: usize) -> Self {
        assert!(dimension > 0, "embedding dimension must be positive");
        Self {
            dimension,
            seed: DEFAULT_HASH_SEED,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn hash(&self, token: &str) -> u64 {
        const PRIME: u64 = 0x0000_0100_0000_01b3;
        let mut h = 0xcbf2_9ce4_8422_2325 ^ self.seed;
        for b in token.bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(PRIME);
        }
        // final avalanche so nearby tokens spread across buckets
        h ^= h >> 33;
        h = h.wrapping_mul(0xff51_afd7_ed55_8ccd);
        h ^= h >> 33;
        h
    }
}

pub fn tokens(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

impl Embedder for HashingEmbedder {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>> {
        let mut v = vec![0.0; self.dimension];
        let mut any = false;
        for tok in tokens(text) {
            let h = self.hash(&tok);
            let bucket = (h % self.dimension as u64) as usize;
            let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
            v[bucket] += sign;
            any = true;
        }
        if !any || v.iter().all(|x| *x == 0.0) {
            return Err(Error::EmptyEmbeddingText);
        }
        Ok(v)
    }
}
