//! Hybrid retrieval: lexical and dense search, result joining, reranking.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::corpus::ChunkStore;
use crate::embed::{EmbedError, Embedder};
use crate::index::{Bm25Index, IndexError, ScoredChunk, Source, VectorIndex};
use crate::metrics::token_f1;
use crate::textnorm::terms;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fusion {
    /// Min-max normalize each list to `[0, 1]`, keep the larger score for duplicates.
    #[default]
    ConcatMaxnorm,
    /// Reciprocal rank fusion, `Σ 1 / (rrf_k + rank)`.
    Rrf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HybridConfig {
    pub bm25_top_k: usize,
    pub dense_top_k: usize,
    pub join_cap: usize,
    pub fusion: Fusion,
    pub rrf_k: usize,
}

impl Default for HybridConfig {
    fn default() -> Self {
        Self { bm25_top_k: 4, dense_top_k: 8, join_cap: 12, fusion: Fusion::ConcatMaxnorm, rrf_k: 60 }
    }
}

impl HybridConfig {
    pub fn validate(&self) -> Result<(), RetrieveError> {
        for (field, v) in [
            ("bm25_top_k", self.bm25_top_k),
            ("dense_top_k", self.dense_top_k),
            ("join_cap", self.join_cap),
            ("rrf_k", self.rrf_k),
        ] {
            if v == 0 {
                return Err(RetrieveError::InvalidConfig(field));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RerankBackend {
    #[default]
    Identity,
    LexicalOverlap,
    Remote,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RerankerConfig {
    pub backend: RerankBackend,
    /// How many of the joined candidates are passed to the reranker.
    pub top_n: usize,
}

impl Default for RerankerConfig {
    fn default() -> Self {
        Self { backend: RerankBackend::Identity, top_n: 12 }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RetrieveError {
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error("invalid hybrid config: {0} must be at least 1")]
    InvalidConfig(&'static str),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RerankError {
    #[error("remote reranker: {0}")]
    RemoteService(String),
    #[error("no candidates to rerank")]
    EmptyCandidates,
    #[error("reranker top_n must be at least 1")]
    InvalidTopN,
    #[error("candidate `{0}` is not in the chunk store")]
    UnknownChunk(String),
    #[error("remote reranker selected but no relevance scorer is configured")]
    MissingScorer,
}

/// Scores documents against a query; backs the remote reranker.
pub trait RelevanceScorer: Send + Sync {
    /// One entry per document; `None` when the service returned no score for it.
    fn relevance(&self, query: &str, documents: &[&str]) -> Result<Vec<Option<f64>>, RerankError>;
}

fn min_max(list: &[ScoredChunk]) -> impl Iterator<Item = (&str, f64)> + '_ {
    let lo = list.iter().map(|s| s.score).fold(f64::INFINITY, f64::min);
    let hi = list.iter().map(|s| s.score).fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    list.iter().map(move |s| {
        let v = if span > 0.0 && span.is_finite() { (s.score - lo) / span } else { 1.0 };
        (s.chunk_id.as_str(), v)
    })
}

/// Merges two ranked lists into one deduplicated list of at most `join_cap`.
pub fn join(a: &[ScoredChunk], b: &[ScoredChunk], cfg: &HybridConfig) -> Vec<ScoredChunk> {
    let mut fused: BTreeMap<&str, f64> = BTreeMap::new();
    match cfg.fusion {
        Fusion::ConcatMaxnorm => {
            for (id, v) in min_max(a).chain(min_max(b)) {
                fused.entry(id).and_modify(|s| *s = s.max(v)).or_insert(v);
            }
        }
        Fusion::Rrf => {
            let k = cfg.rrf_k as f64;
            for list in [a, b] {
                for (pos, s) in list.iter().enumerate() {
                    *fused.entry(s.chunk_id.as_str()).or_insert(0.0) += 1.0 / (k + (pos + 1) as f64);
                }
            }
        }
    }
    let mut out: Vec<(&str, f64)> = fused.into_iter().collect();
    out.sort_by(|x, y| y.1.partial_cmp(&x.1).unwrap_or(Ordering::Equal).then_with(|| x.0.cmp(y.0)));
    out.truncate(cfg.join_cap);
    out.into_iter()
        .enumerate()
        .map(|(i, (id, score))| ScoredChunk { chunk_id: id.into(), score, source: Source::Joined, rank: i + 1 })
        .collect()
}

/// Reorders the first `cfg.top_n` candidates.
///
/// The identity backend returns them untouched. The lexical backend scores
/// each candidate by token F1 against the query; the remote backend uses
/// `scorer`. Sorting is stable, so equal scores keep their prior order.
/// Candidates the remote service left unscored go last, carrying the lowest
/// returned score.
pub fn rerank(
    query: &str,
    candidates: &[ScoredChunk],
    store: &ChunkStore,
    cfg: &RerankerConfig,
    scorer: Option<&dyn RelevanceScorer>,
) -> Result<Vec<ScoredChunk>, RerankError> {
    if candidates.is_empty() {
        return Err(RerankError::EmptyCandidates);
    }
    if cfg.top_n == 0 {
        return Err(RerankError::InvalidTopN);
    }
    let pool = &candidates[..cfg.top_n.min(candidates.len())];
    if cfg.backend == RerankBackend::Identity {
        return Ok(pool.to_vec());
    }
    let texts = pool
        .iter()
        .map(|c| store.get(&c.chunk_id).map(|ch| ch.text.as_str()).ok_or_else(|| RerankError::UnknownChunk(c.chunk_id.clone())))
        .collect::<Result<Vec<&str>, _>>()?;
    let scores: Vec<Option<f64>> = match cfg.backend {
        RerankBackend::Identity => unreachable!(),
        RerankBackend::LexicalOverlap => {
            let q = terms(query);
            texts.iter().map(|t| Some(token_f1(&terms(t), &q))).collect()
        }
        RerankBackend::Remote => {
            let scorer = scorer.ok_or(RerankError::MissingScorer)?;
            let s = scorer.relevance(query, &texts)?;
            if s.len() != texts.len() {
                return Err(RerankError::RemoteService(alloc::format!(
                    "expected {} scores, got {}",
                    texts.len(),
                    s.len()
                )));
            }
            s
        }
    };
    let floor = scores.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    let floor = if floor.is_finite() { floor } else { 0.0 };
    let mut order: Vec<(usize, Option<f64>)> = scores.into_iter().enumerate().collect();
    order.sort_by(|x, y| match (x.1, y.1) {
        (Some(a), Some(b)) => b.partial_cmp(&a).unwrap_or(Ordering::Equal),
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => Ordering::Equal,
    });
    Ok(order
        .into_iter()
        .enumerate()
        .map(|(r, (i, s))| ScoredChunk {
            chunk_id: pool[i].chunk_id.clone(),
            score: s.unwrap_or(floor),
            source: Source::Reranked,
            rank: r + 1,
        })
        .collect())
}

/// BM25 plus dense search over the same chunk set, joined.
pub struct HybridRetriever<'a> {
    pub bm25: &'a Bm25Index,
    pub vectors: &'a VectorIndex,
    pub embedder: &'a dyn Embedder,
    pub config: HybridConfig,
}

impl HybridRetriever<'_> {
    pub fn lexical(&self, query: &str) -> Result<Vec<ScoredChunk>, RetrieveError> {
        Ok(self.bm25.search(query, self.config.bm25_top_k)?)
    }

    /// Dense hits; a query that embeds to the zero vector has none.
    pub fn dense(&self, query: &str) -> Result<Vec<ScoredChunk>, RetrieveError> {
        let qv = self.embedder.embed_one(query)?;
        if qv.is_zero() || self.vectors.is_empty() {
            return Ok(Vec::new());
        }
        Ok(self.vectors.search(&qv, self.config.dense_top_k)?)
    }

    pub fn retrieve(&self, query: &str) -> Result<Vec<ScoredChunk>, RetrieveError> {
        self.config.validate()?;
        let lexical = self.lexical(query)?;
        let dense = self.dense(query)?;
        Ok(join(&lexical, &dense, &self.config))
    }
}
