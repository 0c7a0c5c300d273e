//! Wires retrieval, reranking, prompting, and generation into one question
//! answering system.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::corpus::{ChunkStore, ChunkingConfig, CorpusError, Document};
use crate::embed::{EmbedError, Embedder, HashedTfIdf, DEFAULT_DIM, DEFAULT_SEED};
use crate::generate::{ExtractiveReference, GenerateError, Generator};
use crate::index::{Bm25Index, Bm25Params, IndexError, ScoredChunk, VectorIndex};
use crate::prompt::{build_prompt, Language, PromptError, PromptParts, RetrievedChunk};
use crate::retrieve::{rerank, HybridConfig, HybridRetriever, RelevanceScorer, RerankError, RerankerConfig, RetrieveError};
use crate::textnorm::{normalize_text, NormalizationConfig};

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PromptSettings {
    pub language: Language,
    /// Overrides the language's default instruction text.
    pub instructions: Option<String>,
}

impl PromptSettings {
    pub fn instructions(&self) -> &str {
        self.instructions.as_deref().unwrap_or(self.language.default_instructions())
    }
}

/// The tunable, backend-independent part of a pipeline configuration.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineSettings {
    pub normalization: NormalizationConfig,
    pub chunking: ChunkingConfig,
    pub bm25: Bm25Params,
    pub hybrid: HybridConfig,
    pub reranker: RerankerConfig,
    pub prompt: PromptSettings,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Retrieve(#[from] RetrieveError),
    #[error(transparent)]
    Rerank(#[from] RerankError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Generate(#[from] GenerateError),
}

impl PipelineError {
    /// Remote-service failures and empty retrievals fail a single question,
    /// not a whole evaluation run.
    pub fn is_per_question(&self) -> bool {
        self.is_remote() || matches!(self, PipelineError::Generate(GenerateError::NoRetrievedContent))
    }

    pub fn is_remote(&self) -> bool {
        matches!(
            self,
            PipelineError::Embed(EmbedError::RemoteService(_))
                | PipelineError::Index(IndexError::Embed(EmbedError::RemoteService(_)))
                | PipelineError::Retrieve(RetrieveError::Embed(EmbedError::RemoteService(_)))
                | PipelineError::Retrieve(RetrieveError::Index(IndexError::Embed(EmbedError::RemoteService(_))))
                | PipelineError::Rerank(RerankError::RemoteService(_))
                | PipelineError::Generate(GenerateError::RemoteService(_))
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Answer {
    pub text: String,
    /// Final ranked chunks handed to the prompt.
    pub retrieved: Vec<ScoredChunk>,
    /// Document id of each entry of `retrieved`.
    pub retrieved_docs: Vec<String>,
    pub prompt: String,
}

/// Anything that answers a question from its own index.
pub trait QaSystem: Sync {
    fn answer(&self, question: &str) -> Result<Answer, PipelineError>;
}

/// Supplies the model-backed stages of a pipeline.
pub trait Backends: Sync {
    /// An embedder ready to index `store`. `dim` overrides the dimension
    /// where the backend allows it.
    fn embedder(&self, store: &ChunkStore, dim: Option<usize>) -> Result<Box<dyn Embedder>, PipelineError>;
    /// Scorer for the remote reranker backend, if one is configured.
    fn relevance_scorer(&self) -> Option<Box<dyn RelevanceScorer>>;
    fn generator(&self) -> Box<dyn Generator>;
}

/// Hashed TF-IDF embedder fitted on the chunks, plus the extractive answerer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReferenceBackends {
    pub dim: usize,
    pub seed: u64,
    pub max_answer_chars: usize,
}

impl Default for ReferenceBackends {
    fn default() -> Self {
        Self { dim: DEFAULT_DIM, seed: DEFAULT_SEED, max_answer_chars: ExtractiveReference::default().max_answer_chars }
    }
}

impl Backends for ReferenceBackends {
    fn embedder(&self, store: &ChunkStore, dim: Option<usize>) -> Result<Box<dyn Embedder>, PipelineError> {
        Ok(Box::new(HashedTfIdf::fit(dim.unwrap_or(self.dim), self.seed, store.chunks())?))
    }

    fn relevance_scorer(&self) -> Option<Box<dyn RelevanceScorer>> {
        None
    }

    fn generator(&self) -> Box<dyn Generator> {
        Box::new(ExtractiveReference { max_answer_chars: self.max_answer_chars })
    }
}

/// Builds the BM25 index and the vector index over every chunk of `store`.
/// Chunks whose embedding is the zero vector stay out of the vector index.
pub fn build_indices(
    store: &ChunkStore,
    params: Bm25Params,
    embedder: &dyn Embedder,
) -> Result<(Bm25Index, VectorIndex), PipelineError> {
    let bm25 = Bm25Index::build(store.chunks(), params)?;
    let texts: Vec<&str> = store.iter().map(|c| c.text.as_str()).collect();
    let vectors = embedder.embed_texts(&texts)?;
    if vectors.len() != texts.len() {
        return Err(EmbedError::RemoteService(alloc::format!(
            "expected {} vectors, got {}",
            texts.len(),
            vectors.len()
        ))
        .into());
    }
    let mut index = VectorIndex::new(embedder.dim());
    for (chunk, v) in store.iter().zip(vectors) {
        if !v.is_zero() {
            index.add(chunk.id.clone(), v)?;
        }
    }
    Ok((bm25, index))
}

pub struct RagPipeline {
    pub settings: PipelineSettings,
    pub store: ChunkStore,
    pub bm25: Bm25Index,
    pub vectors: VectorIndex,
    pub embedder: Box<dyn Embedder>,
    pub scorer: Option<Box<dyn RelevanceScorer>>,
    pub generator: Box<dyn Generator>,
}

impl RagPipeline {
    /// Chunks `docs`, builds both indices, and takes the model stages from `backends`.
    pub fn build(
        docs: &[Document],
        settings: &PipelineSettings,
        backends: &dyn Backends,
        embedding_dim: Option<usize>,
    ) -> Result<Self, PipelineError> {
        settings.hybrid.validate()?;
        let store = ChunkStore::build(docs, &settings.chunking)?;
        if store.is_empty() {
            return Err(IndexError::EmptyCorpus.into());
        }
        let embedder = backends.embedder(&store, embedding_dim)?;
        let (bm25, vectors) = build_indices(&store, settings.bm25, embedder.as_ref())?;
        Ok(Self {
            settings: settings.clone(),
            store,
            bm25,
            vectors,
            embedder,
            scorer: backends.relevance_scorer(),
            generator: backends.generator(),
        })
    }

    /// Joined (and, when configured, reranked) chunks for an already normalized query.
    pub fn retrieve(&self, query: &str) -> Result<Vec<ScoredChunk>, PipelineError> {
        let retriever = HybridRetriever {
            bm25: &self.bm25,
            vectors: &self.vectors,
            embedder: self.embedder.as_ref(),
            config: self.settings.hybrid,
        };
        let joined = retriever.retrieve(query)?;
        if joined.is_empty() {
            return Ok(joined);
        }
        Ok(rerank(query, &joined, &self.store, &self.settings.reranker, self.scorer.as_deref())?)
    }
}

impl QaSystem for RagPipeline {
    fn answer(&self, question: &str) -> Result<Answer, PipelineError> {
        let query = normalize_text(question, &self.settings.normalization);
        let retrieved = self.retrieve(&query)?;
        let chunks: Vec<_> = retrieved
            .iter()
            .map(|s| {
                self.store
                    .get(&s.chunk_id)
                    .map(|chunk| RetrievedChunk { chunk, score: s.score })
                    .ok_or_else(|| IndexError::Corrupt(alloc::format!("chunk `{}` missing from store", s.chunk_id)))
            })
            .collect::<Result<_, _>>()?;
        let parts = PromptParts {
            instructions: self.settings.prompt.instructions(),
            user_query: &query,
            chunks,
            language: self.settings.prompt.language,
        };
        let prompt = build_prompt(&parts)?;
        let refs: Vec<_> = parts.chunks.iter().map(|rc| rc.chunk).collect();
        let retrieved_docs = refs.iter().map(|c| c.doc_id.clone()).collect();
        let text = self.generator.generate(&prompt, &refs, &query)?;
        Ok(Answer { text, retrieved, retrieved_docs, prompt })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{ingest, RawDocument};

    fn docs() -> Vec<Document> {
        ingest(
            &[
                RawDocument::new("iran", "تهران پایتخت ایران است. جمعیت تهران زیاد است."),
                RawDocument::new("france", "پاریس پایتخت فرانسه است. برج ایفل در پاریس است."),
                RawDocument::new("japan", "توکیو پایتخت ژاپن است. کوه فوجی در ژاپن است."),
            ],
            &NormalizationConfig::default(),
        )
        .unwrap()
    }

    #[test]
    fn answers_from_the_right_document() {
        let p = RagPipeline::build(&docs(), &PipelineSettings::default(), &ReferenceBackends::default(), None).unwrap();
        let a = p.answer("پایتخت فرانسه کجاست؟").unwrap();
        assert_eq!(a.text, "پاریس پایتخت فرانسه است");
        assert_eq!(a.retrieved_docs[0], "france");
        assert!(a.prompt.starts_with("### Instructions\n"));
        assert!(a.prompt.ends_with("### Your Response:\n"));
    }

    #[test]
    fn no_overlap_means_no_content() {
        let p = RagPipeline::build(&docs(), &PipelineSettings::default(), &ReferenceBackends::default(), None).unwrap();
        let err = p.answer("qqq zzz").unwrap_err();
        assert_eq!(err, PipelineError::Generate(GenerateError::NoRetrievedContent));
        assert!(err.is_per_question());
    }

    #[test]
    fn remote_errors_are_per_question() {
        assert!(PipelineError::Generate(GenerateError::RemoteService("x".into())).is_per_question());
        assert!(PipelineError::Retrieve(RetrieveError::Embed(EmbedError::RemoteService("x".into()))).is_remote());
        assert!(!PipelineError::Index(IndexError::EmptyCorpus).is_per_question());
    }

    #[test]
    fn invalid_settings_rejected() {
        let mut s = PipelineSettings::default();
        s.chunking.overlap_tokens = s.chunking.chunk_size_tokens;
        assert!(matches!(
            RagPipeline::build(&docs(), &s, &ReferenceBackends::default(), None),
            Err(PipelineError::Corpus(CorpusError::InvalidChunkConfig { .. }))
        ));
        let mut s = PipelineSettings::default();
        s.hybrid.join_cap = 0;
        assert!(RagPipeline::build(&docs(), &s, &ReferenceBackends::default(), None).is_err());
    }
}
