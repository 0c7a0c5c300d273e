//! Exact cosine top-k over a flat list of normalized vectors.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{by_score_then_id, IndexError, ScoredChunk, Source};
use crate::embed::{dot, EmbedError, EmbeddingVector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorEntry {
    pub chunk_id: String,
    pub vector: EmbeddingVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorIndex {
    dim: usize,
    entries: Vec<VectorEntry>,
    #[serde(skip)]
    ids: BTreeSet<String>,
}

impl VectorIndex {
    pub fn new(dim: usize) -> Self {
        Self { dim, entries: Vec::new(), ids: BTreeSet::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[VectorEntry] {
        &self.entries
    }

    /// Stores `v` normalized under `chunk_id`.
    pub fn add(&mut self, chunk_id: impl Into<String>, v: EmbeddingVector) -> Result<(), IndexError> {
        let chunk_id = chunk_id.into();
        if v.dim() != self.dim {
            return Err(EmbedError::DimensionMismatch { expected: self.dim, found: v.dim() }.into());
        }
        if self.ids.contains(&chunk_id) {
            return Err(IndexError::DuplicateId(chunk_id));
        }
        let v = if v.is_normalized() { v } else { v.normalize() };
        if !v.is_normalized() {
            return Err(EmbedError::ZeroVector.into());
        }
        self.ids.insert(chunk_id.clone());
        self.entries.push(VectorEntry { chunk_id, vector: v });
        Ok(())
    }

    /// Exact top-k by cosine similarity against every entry.
    pub fn search(&self, query: &EmbeddingVector, top_k: usize) -> Result<Vec<ScoredChunk>, IndexError> {
        if top_k == 0 {
            return Err(IndexError::InvalidTopK);
        }
        if query.dim() != self.dim {
            return Err(EmbedError::DimensionMismatch { expected: self.dim, found: query.dim() }.into());
        }
        if self.entries.is_empty() {
            return Err(IndexError::EmptyIndex);
        }
        let q = if query.is_normalized() { query.clone() } else { query.clone().normalize() };
        if !q.is_normalized() {
            return Err(EmbedError::ZeroVector.into());
        }
        let mut scored: Vec<(usize, f64)> = self
            .entries
            .iter()
            .enumerate()
            .map(|(i, e)| (i, dot(q.values(), e.vector.values()).clamp(-1.0, 1.0)))
            .collect();
        let cmp = |a: &(usize, f64), b: &(usize, f64)| {
            by_score_then_id((&self.entries[a.0].chunk_id, a.1), (&self.entries[b.0].chunk_id, b.1))
        };
        if scored.len() > top_k {
            scored.select_nth_unstable_by(top_k - 1, cmp);
            scored.truncate(top_k);
        }
        scored.sort_by(cmp);
        Ok(scored
            .into_iter()
            .enumerate()
            .map(|(r, (i, score))| ScoredChunk {
                chunk_id: self.entries[i].chunk_id.clone(),
                score,
                source: Source::Dense,
                rank: r + 1,
            })
            .collect())
    }

    /// Rebuilds the id set and checks the invariants, for use after deserialization.
    pub fn validate(&mut self) -> Result<(), IndexError> {
        self.ids.clear();
        for e in &self.entries {
            if e.vector.dim() != self.dim {
                return Err(EmbedError::DimensionMismatch { expected: self.dim, found: e.vector.dim() }.into());
            }
            if !e.vector.is_normalized() || !e.vector.check_invariants() {
                return Err(IndexError::Corrupt(alloc::format!("entry `{}` is not normalized", e.chunk_id)));
            }
            if !self.ids.insert(e.chunk_id.clone()) {
                return Err(IndexError::DuplicateId(e.chunk_id.clone()));
            }
        }
        Ok(())
    }
}
