//! Dense vector helpers shared by both stores.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the L2 norm of a stored embedding.
pub const UNIT_NORM_TOLERANCE: f64 = 1e-9;

/// A unit-norm dense vector.
///
/// The only ways to build one are [`Embedding::normalize`], which rejects zero
/// and non-finite input, and [`Embedding::from_unit`], which checks the norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Embedding(Vec<f64>);

impl Embedding {
    pub fn normalize(raw: &[f64]) -> Result<Self> {
        if raw.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        let norm = l2_norm(raw);
        if norm == 0.0 {
            return Err(Error::ZeroVector);
        }
        Ok(Self(raw.iter().map(|x| x / norm).collect()))
    }

    /// Accepts an already-normalized vector verbatim (used on replay so stored
    /// components are reproduced bit-for-bit).
    pub fn from_unit(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        let norm = l2_norm(&values);
        if (norm - 1.0).abs() > UNIT_NORM_TOLERANCE {
            return Err(Error::NotUnitNorm { norm });
        }
        Ok(Self(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    /// Cosine between two unit vectors, clamped into [-1, 1].
    pub fn cosine(&self, other: &Embedding) -> Result<f64> {
        check_dimension(self.dimension(), other.dimension())?;
        Ok(dot(&self.0, &other.0).clamp(-1.0, 1.0))
    }
}

impl TryFrom<Vec<f64>> for Embedding {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::from_unit(values)
    }
}

impl From<Embedding> for Vec<f64> {
    fn from(e: Embedding) -> Self {
        e.0
    }
}

pub fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn check_dimension(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch { expected, actual });
    }
    Ok(())
}

/// Raw cosine similarity of two arbitrary nonzero vectors, in [-1, 1].
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    check_dimension(a.len(), b.len())?;
    if a.iter().chain(b).any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    let (na, nb) = (l2_norm(a), l2_norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok((dot(a, b) / (na * nb)).clamp(-1.0, 1.0))
}

/// One candidate for similarity ranking.
pub(crate) struct Candidate<'a, Id> {
    pub id: Id,
    pub turn: u64,
    pub embedding: &'a Embedding,
}

/// Exhaustive ranking: cosine descending, then newer turn, then lower id.
pub(crate) fn rank_exhaustive<'a, Id, I>(query: &Embedding, candidates: I, k: usize) -> Vec<(Id, f64)>
where
    Id: Ord + Copy + 'a,
    I: IntoIterator<Item = Candidate<'a, Id>>,
{
    let mut scored: Vec<(Id, u64, f64)> = candidates
        .into_iter()
        .map(|c| (c.id, c.turn, dot(query.as_slice(), c.embedding.as_slice()).clamp(-1.0, 1.0)))
        .collect();
    scored.sort_by(|a, b| {
        b.2.total_cmp(&a.2)
            .then_with(|| b.1.cmp(&a.1))
            .then_with(|| a.0.cmp(&b.0))
    });
    scored.truncate(k);
    scored.into_iter().map(|(id, _, cos)| (id, cos)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_rejects_zero_and_nan() {
        assert_eq!(Embedding::normalize(&[0.0, 0.0]), Err(Error::ZeroVector));
        assert_eq!(Embedding::normalize(&[f64::NAN, 1.0]), Err(Error::NonFinite));
    }

    #[test]
    fn normalize_yields_unit_norm() {
        let e = Embedding::normalize(&[3.0, 4.0]).unwrap();
        assert!((l2_norm(e.as_slice()) - 1.0).abs() < 1e-12);
        assert_eq!(e.as_slice(), &[0.6, 0.8]);
    }

    #[test]
    fn from_unit_checks_norm() {
        assert!(Embedding::from_unit(vec![1.0, 1.0]).is_err());
        assert!(Embedding::from_unit(vec![0.0, 1.0]).is_ok());
    }

    #[test]
    fn deserialize_enforces_unit_norm() {
        assert!(serde_json::from_str::<Embedding>("[0.6,0.8]").is_ok());
        assert!(serde_json::from_str::<Embedding>("[1.0,1.0]").is_err());
    }

    #[test]
    fn cosine_dimension_mismatch() {
        assert_eq!(
            cosine_similarity(&[1.0], &[1.0, 0.0]),
            Err(Error::DimensionMismatch { expected: 1, actual: 2 })
        );
    }
}
