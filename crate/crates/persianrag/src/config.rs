//! Pipeline configuration file and the backends it selects.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use persianrag_core::corpus::{ChunkStore, ChunkingConfig};
use persianrag_core::embed::{Embedder, HashedTfIdf, DEFAULT_DIM, DEFAULT_SEED};
use persianrag_core::generate::{ExtractiveReference, GeneratorBackend, GeneratorConfig, Generator};
use persianrag_core::index::{Bm25Params, IndexError};
use persianrag_core::pipeline::{Backends, PipelineError, PipelineSettings, PromptSettings};
use persianrag_core::retrieve::{HybridConfig, RelevanceScorer, RerankBackend, RerankerConfig};
use persianrag_core::textnorm::NormalizationConfig;
use serde::{Deserialize, Serialize};

use crate::persist::EmbedderState;
use crate::remote::{HttpClient, RemoteEmbedder, RemoteGenerator, RemoteReranker};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EmbedderConfig {
    /// Hashed TF-IDF fitted on the indexed chunks.
    Reference {
        #[serde(default = "default_dim")]
        dim: usize,
        #[serde(default)]
        seed: u64,
    },
    Remote {
        endpoint: String,
        /// Expected vector dimension; learned from the service when absent.
        #[serde(default)]
        dim: Option<usize>,
        #[serde(default = "default_batch")]
        batch_size: usize,
        #[serde(default = "default_parallelism")]
        parallelism: usize,
        #[serde(default = "default_timeout")]
        timeout_ms: u64,
    },
}

fn default_dim() -> usize {
    DEFAULT_DIM
}
fn default_batch() -> usize {
    32
}
fn default_parallelism() -> usize {
    4
}
fn default_timeout() -> u64 {
    30_000
}

impl Default for EmbedderConfig {
    fn default() -> Self {
        EmbedderConfig::Reference { dim: DEFAULT_DIM, seed: DEFAULT_SEED }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RerankerSection {
    pub backend: RerankBackend,
    pub top_n: usize,
    /// Base URL of the remote reranker; `/rerank` is appended.
    pub endpoint: Option<String>,
    pub timeout_ms: u64,
}

impl Default for RerankerSection {
    fn default() -> Self {
        let c = RerankerConfig::default();
        Self { backend: c.backend, top_n: c.top_n, endpoint: None, timeout_ms: default_timeout() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetPaths {
    pub corpus: Option<PathBuf>,
    pub dataset: Option<PathBuf>,
    pub search_space: Option<PathBuf>,
}

/// Everything a run needs. Unknown keys are rejected at every level.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfigFile {
    pub normalization: NormalizationConfig,
    pub chunking: ChunkingConfig,
    pub bm25: Bm25Params,
    pub hybrid: HybridConfig,
    pub reranker: RerankerSection,
    pub generator: GeneratorConfig,
    pub embedder: EmbedderConfig,
    pub prompt: PromptSettings,
    pub paths: DatasetPaths,
    /// Worker threads for evaluation and sweeps; all cores when absent.
    pub workers: Option<usize>,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("config: {0}")]
    Invalid(String),
}

impl PipelineConfigFile {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let src = fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        serde_json::from_str(&src).map_err(|e| ConfigError::Parse { path: path.into(), message: e.to_string() })
    }

    pub fn settings(&self) -> PipelineSettings {
        PipelineSettings {
            normalization: self.normalization,
            chunking: self.chunking,
            bm25: self.bm25,
            hybrid: self.hybrid,
            reranker: RerankerConfig { backend: self.reranker.backend, top_n: self.reranker.top_n },
            prompt: self.prompt.clone(),
        }
    }

    /// Checks the values that can be checked without touching data.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |e: &dyn std::fmt::Display| ConfigError::Invalid(e.to_string());
        self.chunking.validate().map_err(|e| invalid(&e))?;
        self.bm25.validate().map_err(|e| invalid(&e))?;
        self.hybrid.validate().map_err(|e| invalid(&e))?;
        if self.reranker.top_n == 0 {
            return Err(ConfigError::Invalid("reranker.top_n must be at least 1".into()));
        }
        if self.reranker.backend == RerankBackend::Remote && self.reranker.endpoint.is_none() {
            return Err(ConfigError::Invalid("reranker.endpoint is required for the remote reranker".into()));
        }
        if self.generator.backend == GeneratorBackend::Remote && self.generator.endpoint.is_none() {
            return Err(ConfigError::Invalid("generator.endpoint is required for the remote generator".into()));
        }
        match &self.embedder {
            EmbedderConfig::Reference { dim: 0, .. } | EmbedderConfig::Remote { dim: Some(0), .. } => {
                return Err(ConfigError::Invalid("embedder.dim must be at least 1".into()))
            }
            EmbedderConfig::Remote { batch_size: 0, .. } => {
                return Err(ConfigError::Invalid("embedder.batch_size must be at least 1".into()))
            }
            _ => {}
        }
        if self.workers == Some(0) {
            return Err(ConfigError::Invalid("workers must be at least 1".into()));
        }
        Ok(())
    }

    pub fn backends(&self) -> ConfiguredBackends {
        ConfiguredBackends {
            embedder: self.embedder.clone(),
            reranker: self.reranker.clone(),
            generator: self.generator.clone(),
        }
    }

    pub fn to_pretty_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

/// Backends as selected by a configuration file.
#[derive(Debug, Clone)]
pub struct ConfiguredBackends {
    pub embedder: EmbedderConfig,
    pub reranker: RerankerSection,
    pub generator: GeneratorConfig,
}

impl ConfiguredBackends {
    fn remote_embedder(&self, dim: Option<usize>, sample: Option<&str>) -> Result<RemoteEmbedder, PipelineError> {
        let EmbedderConfig::Remote { endpoint, dim: configured, batch_size, parallelism, timeout_ms } = &self.embedder else {
            unreachable!("called for remote embedders only")
        };
        let client = HttpClient::new(endpoint, Duration::from_millis(*timeout_ms));
        let dim = match dim.or(*configured) {
            Some(d) => d,
            None => RemoteEmbedder::probe_dim(&client, sample.unwrap_or("probe"))?,
        };
        Ok(RemoteEmbedder::new(client, dim, *batch_size, *parallelism))
    }

    /// Query-time embedder for an index saved with `state`.
    pub fn embedder_for(&self, state: &EmbedderState) -> Result<Box<dyn Embedder>, PipelineError> {
        match state {
            EmbedderState::Reference { model } => Ok(Box::new(model.clone())),
            EmbedderState::Remote { dim } => match self.embedder {
                EmbedderConfig::Remote { .. } => Ok(Box::new(self.remote_embedder(Some(*dim), None)?)),
                EmbedderConfig::Reference { .. } => Err(PipelineError::Index(IndexError::Corrupt(
                    "index was built with a remote embedder but the config selects the reference embedder".into(),
                ))),
            },
        }
    }

    /// Embedder for building an index over `store`, with the state to save beside it.
    pub fn index_embedder(&self, store: &ChunkStore) -> Result<(Box<dyn Embedder>, EmbedderState), PipelineError> {
        match self.embedder {
            EmbedderConfig::Reference { dim, seed } => {
                let model = HashedTfIdf::fit(dim, seed, store.chunks())?;
                Ok((Box::new(model.clone()), EmbedderState::Reference { model }))
            }
            EmbedderConfig::Remote { .. } => {
                let e = self.remote_embedder(None, store.chunks().first().map(|c| c.text.as_str()))?;
                let dim = e.dim();
                Ok((Box::new(e), EmbedderState::Remote { dim }))
            }
        }
    }
}

impl Backends for ConfiguredBackends {
    fn embedder(&self, store: &ChunkStore, dim: Option<usize>) -> Result<Box<dyn Embedder>, PipelineError> {
        match self.embedder {
            EmbedderConfig::Reference { dim: d, seed } => Ok(Box::new(HashedTfIdf::fit(dim.unwrap_or(d), seed, store.chunks())?)),
            EmbedderConfig::Remote { .. } => {
                let sample = store.chunks().first().map(|c| c.text.as_str());
                Ok(Box::new(self.remote_embedder(None, sample)?))
            }
        }
    }

    fn relevance_scorer(&self) -> Option<Box<dyn RelevanceScorer>> {
        self.reranker.endpoint.as_deref().map(|e| {
            Box::new(RemoteReranker::new(HttpClient::new(e, Duration::from_millis(self.reranker.timeout_ms))))
                as Box<dyn RelevanceScorer>
        })
    }

    fn generator(&self) -> Box<dyn Generator> {
        match (&self.generator.backend, &self.generator.endpoint) {
            (GeneratorBackend::Remote, Some(endpoint)) => Box::new(RemoteGenerator::new(
                HttpClient::new(endpoint, Duration::from_millis(self.generator.timeout_ms)),
                self.generator.max_answer_chars,
            )),
            _ => Box::new(ExtractiveReference { max_answer_chars: self.generator.max_answer_chars }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = PipelineConfigFile::default();
        let back: PipelineConfigFile = serde_json::from_str(&c.to_pretty_json()).unwrap();
        assert_eq!(back, c);
        assert_eq!(c.settings(), PipelineSettings::default());
    }

    #[test]
    fn unknown_keys_rejected_at_every_level() {
        for bad in [
            r#"{"colour": 1}"#,
            r#"{"chunking": {"chunk_size": 3}}"#,
            r#"{"hybrid": {"top_k": 3}}"#,
            r#"{"embedder": {"kind": "reference", "dims": 3}}"#,
            r#"{"embedder": {"kind": "quantum"}}"#,
        ] {
            assert!(serde_json::from_str::<PipelineConfigFile>(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn partial_sections_fill_defaults() {
        let c: PipelineConfigFile = serde_json::from_str(
            r#"{"chunking": {"chunk_size_tokens": 64}, "embedder": {"kind": "remote", "endpoint": "http://x"}}"#,
        )
        .unwrap();
        assert_eq!(c.chunking, ChunkingConfig { chunk_size_tokens: 64, overlap_tokens: 16 });
        assert!(matches!(c.embedder, EmbedderConfig::Remote { batch_size: 32, parallelism: 4, .. }));
    }

    #[test]
    fn validation_names_the_field() {
        let mut c = PipelineConfigFile::default();
        c.chunking.overlap_tokens = 500;
        assert!(c.validate().unwrap_err().to_string().contains("overlap_tokens"));
        let mut c = PipelineConfigFile::default();
        c.reranker.backend = RerankBackend::Remote;
        assert!(c.validate().unwrap_err().to_string().contains("reranker.endpoint"));
    }
}
