//! Core of a retrieval-augmented generation engine for Persian text.
//!
//! Everything here is allocation-only and free of IO, so it builds under
//! `no_std` with `alloc`. The stages line up with the pipeline:
//!
//! * [`textnorm`]: character unification, half-space (ZWNJ) policy, digits, tokenization
//! * [`corpus`]: documents and overlapping token-window chunks
//! * [`embed`]: the [`embed::Embedder`] interface and the hashed TF-IDF reference embedder
//! * [`index`]: Okapi BM25 inverted index and exact cosine vector index
//! * [`retrieve`]: hybrid retrieval, result joining, reranking
//! * [`prompt`]: sectioned prompt construction with metadata prefixes and Markdown tables
//! * [`generate`]: the [`generate::Generator`] interface and the extractive reference answerer
//! * [`pipeline`]: wiring of the stages above into a question answering system
//! * [`eval`]: rank-bucket and Wrong/Middle/Correct evaluation protocols
//! * [`tune`]: deterministic grid sweeps over pipeline hyperparameters
//!
//! File formats, remote service clients and the command line live in the
//! `persianrag` crate.

#![cfg_attr(not(any(feature = "std", test)), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod corpus;
pub mod embed;
pub mod eval;
pub mod generate;
pub mod index;
pub mod metrics;
pub mod pipeline;
pub mod prompt;
pub mod retrieve;
pub mod textnorm;
pub mod tune;

pub use corpus::{Chunk, ChunkStore, ChunkingConfig, DocType, Document, Metadata, RawDocument};
pub use embed::{cosine, Embedder, EmbeddingVector, HashedTfIdf, IdfTable};
pub use index::{Bm25Index, Bm25Params, ScoredChunk, Source, VectorIndex};
pub use retrieve::{Fusion, HybridConfig, RerankBackend, RerankerConfig};
pub use textnorm::{normalize_text, tokenize, NormalizationConfig};
