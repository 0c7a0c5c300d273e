//! Deterministic grid sweeps over pipeline hyperparameters.
//!
//! Trials are enumerated in lexicographic order of the parameter lists, with
//! `chunk_size_tokens` varying slowest and `embedding_dim` fastest.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::time::Duration;

use serde::{Deserialize, Serialize};

use crate::corpus::ChunkingConfig;
use crate::eval::{eval_end_to_end, EvalError, QAExample};
use crate::pipeline::{Backends, PipelineSettings};
use crate::retrieve::{Fusion, RerankBackend};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    RetrievalTop1Pct,
    #[default]
    E2eCorrectPct,
}

impl Objective {
    pub fn name(self) -> &'static str {
        match self {
            Objective::RetrievalTop1Pct => "retrieval_top1_pct",
            Objective::E2eCorrectPct => "e2e_correct_pct",
        }
    }
}

/// Candidate values per parameter. `embedding_dim` may be left empty, in
/// which case the embedder keeps its configured dimension.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSpace {
    pub chunk_size_tokens: Vec<usize>,
    pub overlap_tokens: Vec<usize>,
    pub bm25_top_k: Vec<usize>,
    pub dense_top_k: Vec<usize>,
    pub join_cap: Vec<usize>,
    pub fusion: Vec<Fusion>,
    pub reranker: Vec<RerankBackend>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub embedding_dim: Vec<usize>,
}

impl SearchSpace {
    /// The one-point space holding the values of `settings`.
    pub fn point(settings: &PipelineSettings) -> Self {
        Self {
            chunk_size_tokens: alloc::vec![settings.chunking.chunk_size_tokens],
            overlap_tokens: alloc::vec![settings.chunking.overlap_tokens],
            bm25_top_k: alloc::vec![settings.hybrid.bm25_top_k],
            dense_top_k: alloc::vec![settings.hybrid.dense_top_k],
            join_cap: alloc::vec![settings.hybrid.join_cap],
            fusion: alloc::vec![settings.hybrid.fusion],
            reranker: alloc::vec![settings.reranker.backend],
            embedding_dim: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<(), TuneError> {
        let lists = [
            ("chunk_size_tokens", self.chunk_size_tokens.is_empty()),
            ("overlap_tokens", self.overlap_tokens.is_empty()),
            ("bm25_top_k", self.bm25_top_k.is_empty()),
            ("dense_top_k", self.dense_top_k.is_empty()),
            ("join_cap", self.join_cap.is_empty()),
            ("fusion", self.fusion.is_empty()),
            ("reranker", self.reranker.is_empty()),
        ];
        match lists.iter().find(|(_, empty)| *empty) {
            Some((name, _)) => Err(TuneError::EmptyCandidates(name)),
            None => Ok(()),
        }
    }

    /// Number of grid points, valid or not.
    pub fn len(&self) -> usize {
        self.chunk_size_tokens.len()
            * self.overlap_tokens.len()
            * self.bm25_top_k.len()
            * self.dense_top_k.len()
            * self.join_cap.len()
            * self.fusion.len()
            * self.reranker.len()
            * self.embedding_dim.len().max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub chunk_size_tokens: usize,
    pub overlap_tokens: usize,
    pub bm25_top_k: usize,
    pub dense_top_k: usize,
    pub join_cap: usize,
    pub fusion: Fusion,
    pub reranker: RerankBackend,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding_dim: Option<usize>,
}

impl TrialConfig {
    /// `base` with this trial's values substituted.
    pub fn apply(&self, base: &PipelineSettings) -> PipelineSettings {
        let mut s = base.clone();
        s.chunking = ChunkingConfig { chunk_size_tokens: self.chunk_size_tokens, overlap_tokens: self.overlap_tokens };
        s.hybrid.bm25_top_k = self.bm25_top_k;
        s.hybrid.dense_top_k = self.dense_top_k;
        s.hybrid.join_cap = self.join_cap;
        s.hybrid.fusion = self.fusion;
        s.reranker.backend = self.reranker;
        s
    }

    /// Why this combination cannot run, if it cannot.
    pub fn invalid_reason(&self, base: &PipelineSettings) -> Option<String> {
        let s = self.apply(base);
        if let Err(e) = s.chunking.validate() {
            return Some(e.to_string());
        }
        if let Err(e) = s.hybrid.validate() {
            return Some(e.to_string());
        }
        if self.embedding_dim == Some(0) {
            return Some("embedding_dim must be greater than zero".into());
        }
        None
    }
}

/// Every grid point in enumeration order.
pub fn enumerate(space: &SearchSpace) -> Vec<TrialConfig> {
    let dims: Vec<Option<usize>> =
        if space.embedding_dim.is_empty() { alloc::vec![None] } else { space.embedding_dim.iter().copied().map(Some).collect() };
    let mut out = Vec::with_capacity(space.len());
    for &chunk_size_tokens in &space.chunk_size_tokens {
        for &overlap_tokens in &space.overlap_tokens {
            for &bm25_top_k in &space.bm25_top_k {
                for &dense_top_k in &space.dense_top_k {
                    for &join_cap in &space.join_cap {
                        for &fusion in &space.fusion {
                            for &reranker in &space.reranker {
                                for &embedding_dim in &dims {
                                    out.push(TrialConfig {
                                        chunk_size_tokens,
                                        overlap_tokens,
                                        bm25_top_k,
                                        dense_top_k,
                                        join_cap,
                                        fusion,
                                        reranker,
                                        embedding_dim,
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialStatus {
    Ok,
    Failed,
    Skipped,
}

/// One trial. The wall-clock duration is kept in memory only, so logs of
/// repeated sweeps compare byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    /// Position in enumeration order.
    pub index: usize,
    pub config: TrialConfig,
    pub objective: Objective,
    pub value: Option<f64>,
    pub status: TrialStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip)]
    pub duration: Duration,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TuneError {
    #[error("search space: `{0}` has no candidates")]
    EmptyCandidates(&'static str),
    #[error("dataset is empty")]
    EmptyDataset,
}

/// Objective value of `config` on `dataset`, rebuilding chunks and indices from scratch.
pub fn evaluate_trial(
    dataset: &[QAExample],
    base: &PipelineSettings,
    backends: &dyn Backends,
    config: &TrialConfig,
    objective: Objective,
) -> Result<f64, EvalError> {
    let settings = config.apply(base);
    let e = eval_end_to_end(dataset, &settings, backends, config.embedding_dim)?;
    Ok(match objective {
        Objective::RetrievalTop1Pct => e.retrieval_top1_pct(),
        Objective::E2eCorrectPct => e.correct_pct(),
    })
}

/// Result record for a trial that ran (or was skipped), in enumeration order.
pub fn trial_result(
    index: usize,
    config: TrialConfig,
    objective: Objective,
    outcome: Result<f64, String>,
    duration: Duration,
) -> TrialResult {
    let (value, status, error) = match outcome {
        Ok(v) => (Some(v), TrialStatus::Ok, None),
        Err(e) => (None, TrialStatus::Failed, Some(e)),
    };
    TrialResult { index, config, objective, value, status, error, duration }
}

pub fn skipped(index: usize, config: TrialConfig, objective: Objective, reason: String) -> TrialResult {
    TrialResult {
        index,
        config,
        objective,
        value: None,
        status: TrialStatus::Skipped,
        error: Some(reason),
        duration: Duration::ZERO,
    }
}

/// Runs every trial sequentially. `run` returns the objective value (or an
/// error message) and the time it took; failures do not stop the sweep.
/// Results come back in enumeration order.
pub fn sweep_with<F>(
    space: &SearchSpace,
    base: &PipelineSettings,
    objective: Objective,
    mut run: F,
) -> Result<Vec<TrialResult>, TuneError>
where
    F: FnMut(&TrialConfig) -> (Result<f64, String>, Duration),
{
    space.validate()?;
    Ok(enumerate(space)
        .into_iter()
        .enumerate()
        .map(|(i, cfg)| match cfg.invalid_reason(base) {
            Some(reason) => skipped(i, cfg, objective, reason),
            None => {
                let (outcome, d) = run(&cfg);
                trial_result(i, cfg, objective, outcome, d)
            }
        })
        .collect())
}

/// Sequential sweep with the end-to-end evaluator. Durations are zero; the
/// std companion times trials and runs them in parallel.
pub fn sweep(
    space: &SearchSpace,
    dataset: &[QAExample],
    base: &PipelineSettings,
    backends: &dyn Backends,
    objective: Objective,
) -> Result<Vec<TrialResult>, TuneError> {
    if dataset.is_empty() {
        return Err(TuneError::EmptyDataset);
    }
    sweep_with(space, base, objective, |cfg| {
        let v = evaluate_trial(dataset, base, backends, cfg, objective).map_err(|e| format!("{e}"));
        (v, Duration::ZERO)
    })
}

fn by_value_then_index(a: &TrialResult, b: &TrialResult) -> Ordering {
    match (a.value, b.value) {
        (Some(x), Some(y)) => y.total_cmp(&x).then(a.index.cmp(&b.index)),
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => a.index.cmp(&b.index),
    }
}

/// Trials by objective value descending, ties by enumeration order; trials
/// without a value last.
pub fn ranked(results: &[TrialResult]) -> Vec<&TrialResult> {
    let mut v: Vec<&TrialResult> = results.iter().collect();
    v.sort_by(|a, b| by_value_then_index(a, b));
    v
}

pub fn best(results: &[TrialResult]) -> Option<&TrialResult> {
    ranked(results).into_iter().next().filter(|t| t.value.is_some())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::ReferenceBackends;
    use alloc::vec;

    fn space() -> SearchSpace {
        SearchSpace::point(&PipelineSettings::default())
    }

    #[test]
    fn single_point_is_one_trial() {
        let r = sweep_with(&space(), &PipelineSettings::default(), Objective::E2eCorrectPct, |_| (Ok(1.0), Duration::ZERO)).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].status, TrialStatus::Ok);
    }

    #[test]
    fn two_by_two_in_lexicographic_order() {
        let mut s = space();
        s.chunk_size_tokens = vec![32, 64];
        s.fusion = vec![Fusion::ConcatMaxnorm, Fusion::Rrf];
        let t = enumerate(&s);
        let got: Vec<_> = t.iter().map(|c| (c.chunk_size_tokens, c.fusion)).collect();
        assert_eq!(
            got,
            [(32, Fusion::ConcatMaxnorm), (32, Fusion::Rrf), (64, Fusion::ConcatMaxnorm), (64, Fusion::Rrf)]
        );
    }

    #[test]
    fn invalid_combinations_are_skipped() {
        let mut s = space();
        s.chunk_size_tokens = vec![8, 32];
        s.overlap_tokens = vec![16];
        let mut calls = 0;
        let r = sweep_with(&s, &PipelineSettings::default(), Objective::E2eCorrectPct, |_| {
            calls += 1;
            (Ok(0.0), Duration::ZERO)
        })
        .unwrap();
        assert_eq!(calls, 1);
        assert_eq!(r[0].status, TrialStatus::Skipped);
        assert!(r[0].error.as_deref().unwrap().contains("overlap_tokens"));
        assert_eq!(r[1].status, TrialStatus::Ok);
    }

    #[test]
    fn empty_list_rejected() {
        let mut s = space();
        s.reranker.clear();
        assert_eq!(s.validate(), Err(TuneError::EmptyCandidates("reranker")));
    }

    #[test]
    fn ranking_and_best() {
        let mut s = space();
        s.join_cap = vec![1, 2, 3, 4];
        let vals = [Ok(50.0), Ok(80.0), Err("boom".to_string()), Ok(80.0)];
        let mut i = 0;
        let r = sweep_with(&s, &PipelineSettings::default(), Objective::RetrievalTop1Pct, |_| {
            i += 1;
            (vals[i - 1].clone(), Duration::ZERO)
        })
        .unwrap();
        let order: Vec<usize> = ranked(&r).iter().map(|t| t.index).collect();
        assert_eq!(order, [1, 3, 0, 2]);
        assert_eq!(best(&r).unwrap().index, 1);
        assert_eq!(r[2].status, TrialStatus::Failed);
    }

    #[test]
    fn best_matches_standalone() {
        let ds: Vec<QAExample> = ["سیب سرخ است. درخت بلند است.", "آسمان آبی است. ابر سفید است."]
            .iter()
            .map(|p| QAExample::new(*p, "رنگ آسمان", "آسمان آبی است"))
            .collect();
        let mut s = space();
        s.chunk_size_tokens = vec![4, 32];
        s.overlap_tokens = vec![0, 2];
        let base = PipelineSettings::default();
        let backends = ReferenceBackends::default();
        let r = sweep(&s, &ds, &base, &backends, Objective::E2eCorrectPct).unwrap();
        assert_eq!(r.len(), 4);
        let b = best(&r).unwrap();
        let again = evaluate_trial(&ds, &base, &backends, &b.config, Objective::E2eCorrectPct).unwrap();
        assert_eq!(b.value, Some(again));
        assert_eq!(sweep(&s, &[], &base, &backends, Objective::E2eCorrectPct), Err(TuneError::EmptyDataset));
    }
}
