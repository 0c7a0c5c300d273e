//! In-process lexical and dense indices over chunks.

mod bm25;
mod vector;

pub use bm25::{Bm25Index, Bm25Params, Posting};
pub use vector::{VectorEntry, VectorIndex};

use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::embed::EmbedError;

/// Which stage produced a result list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Bm25,
    Dense,
    Joined,
    Reranked,
}

/// One entry of a ranked result list. Within a list, ranks run 1..=n and
/// scores never increase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredChunk {
    pub chunk_id: String,
    pub score: f64,
    pub source: Source,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IndexError {
    #[error("cannot build an index over zero chunks")]
    EmptyCorpus,
    #[error("vector index is empty")]
    EmptyIndex,
    #[error("top_k must be at least 1")]
    InvalidTopK,
    #[error("invalid BM25 parameters: {0}")]
    InvalidParams(String),
    #[error("duplicate chunk id `{0}`")]
    DuplicateId(String),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error("corrupt index: {0}")]
    Corrupt(String),
}

/// Descending score, then ascending id.
pub(crate) fn by_score_then_id(a: (&str, f64), b: (&str, f64)) -> Ordering {
    b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal).then_with(|| a.0.cmp(b.0))
}

/// Sorts `(id, score)` pairs, keeps the best `top_k`, and assigns ranks.
pub(crate) fn rank_results(mut hits: Vec<(String, f64)>, top_k: usize, source: Source) -> Vec<ScoredChunk> {
    hits.sort_by(|a, b| by_score_then_id((&a.0, a.1), (&b.0, b.1)));
    hits.truncate(top_k);
    hits.into_iter()
        .enumerate()
        .map(|(i, (chunk_id, score))| ScoredChunk { chunk_id, score, source, rank: i + 1 })
        .collect()
}

/// True when ranks are `1..=n` and scores are non-increasing.
pub fn is_rank_consistent(list: &[ScoredChunk]) -> bool {
    list.iter().enumerate().all(|(i, s)| s.rank == i + 1)
        && list.windows(2).all(|w| w[0].score >= w[1].score)
}
