//! Text embeddings: the [`Embedder`] interface, vector math, and the hashed
//! TF-IDF reference embedder.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::corpus::Chunk;
use crate::textnorm::terms;

/// Tolerance on the L2 norm of a vector flagged as normalized.
pub const NORM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EmbedError {
    #[error("remote embedding service: {0}")]
    RemoteService(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("zero vector has no direction")]
    ZeroVector,
    #[error("nothing to embed")]
    EmptyInput,
    #[error("cannot fit IDF on an empty corpus")]
    EmptyCorpus,
    #[error("embedding dimension must be positive")]
    ZeroDimension,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    values: Vec<f64>,
    normalized: bool,
}

impl EmbeddingVector {
    /// A raw, unnormalized vector.
    pub fn new(values: Vec<f64>) -> Self {
        Self { values, normalized: false }
    }

    pub fn zeros(dim: usize) -> Self {
        Self::new(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.values.iter().map(|x| x * x).sum())
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&x| x == 0.0)
    }

    /// L2-normalizes in place. The zero vector is left as is, flagged unnormalized.
    pub fn normalize(mut self) -> Self {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            self.normalized = false;
            return self;
        }
        for x in &mut self.values {
            *x /= n;
        }
        self.normalized = true;
        self
    }

    pub fn dot(&self, other: &Self) -> Result<f64, EmbedError> {
        if self.dim() != other.dim() {
            return Err(EmbedError::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        Ok(dot(&self.values, &other.values))
    }

    /// Re-checks the normalization flag against the actual norm.
    pub fn check_invariants(&self) -> bool {
        !self.normalized || (self.norm() - 1.0).abs() <= NORM_TOLERANCE
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Cosine similarity, clamped to `[-1, 1]`.
pub fn cosine(u: &EmbeddingVector, v: &EmbeddingVector) -> Result<f64, EmbedError> {
    let d = u.dot(v)?;
    let nu = u.norm();
    let nv = v.norm();
    if nu == 0.0 || nv == 0.0 {
        return Err(EmbedError::ZeroVector);
    }
    Ok((d / (nu * nv)).clamp(-1.0, 1.0))
}

/// Anything that maps texts to vectors of one fixed dimension.
pub trait Embedder: Send + Sync {
    fn dim(&self) -> usize;

    /// One vector per input text, all of dimension [`Embedder::dim`].
    fn embed_texts(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbedError>;

    fn embed_one(&self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        let mut out = self.embed_texts(&[text])?;
        out.pop().ok_or(EmbedError::EmptyInput)
    }
}

impl<E: Embedder + ?Sized> Embedder for alloc::boxed::Box<E> {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn embed_texts(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        (**self).embed_texts(texts)
    }
}

/// Document frequencies over a chunk collection.
///
/// `idf(t) = ln((doc_count + 1) / (df(t) + 1)) + 1`, which is at least 1 for
/// every term, including unseen ones.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdfTable {
    doc_count: usize,
    df: BTreeMap<String, usize>,
}

impl IdfTable {
    pub fn fit<'a, I>(texts: I) -> Result<Self, EmbedError>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut doc_count = 0;
        let mut df: BTreeMap<String, usize> = BTreeMap::new();
        for text in texts {
            doc_count += 1;
            let mut seen = terms(text);
            seen.sort_unstable();
            seen.dedup();
            for t in seen {
                *df.entry(t).or_insert(0) += 1;
            }
        }
        if doc_count == 0 {
            return Err(EmbedError::EmptyCorpus);
        }
        Ok(Self { doc_count, df })
    }

    pub fn doc_count(&self) -> usize {
        self.doc_count
    }

    pub fn df(&self, term: &str) -> usize {
        self.df.get(term).copied().unwrap_or(0)
    }

    pub fn contains(&self, term: &str) -> bool {
        self.df.contains_key(term)
    }

    pub fn idf(&self, term: &str) -> f64 {
        let n = self.doc_count as f64;
        libm::log((n + 1.0) / (self.df(term) as f64 + 1.0)) + 1.0
    }

    pub fn vocabulary_len(&self) -> usize {
        self.df.len()
    }

    /// `df <= doc_count` for every term and at least one document.
    pub fn check_invariants(&self) -> bool {
        self.doc_count >= 1 && self.df.values().all(|&d| d >= 1 && d <= self.doc_count)
    }
}

pub fn fit_idf(chunks: &[Chunk]) -> Result<IdfTable, EmbedError> {
    IdfTable::fit(chunks.iter().map(|c| c.text.as_str()))
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a over the seed's eight little-endian bytes followed by `bytes`.
pub fn fnv1a64(seed: u64, bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET;
    for &b in seed.to_le_bytes().iter().chain(bytes) {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

pub const DEFAULT_DIM: usize = 256;
pub const DEFAULT_SEED: u64 = 0;

/// Hashed TF-IDF embedder.
///
/// Each term `t` adds `tf(t) * idf(t)` to bucket `fnv1a64(seed, t) % dim`,
/// and the result is L2-normalized. Without an IDF table every idf is 1.
/// With a table, terms the table has never seen are dropped, so a text made
/// only of unseen terms embeds to the zero vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HashedTfIdf {
    dim: usize,
    seed: u64,
    idf: Option<IdfTable>,
}

impl HashedTfIdf {
    pub fn new(dim: usize, seed: u64) -> Result<Self, EmbedError> {
        if dim == 0 {
            return Err(EmbedError::ZeroDimension);
        }
        Ok(Self { dim, seed, idf: None })
    }

    pub fn with_idf(mut self, idf: IdfTable) -> Self {
        self.idf = Some(idf);
        self
    }

    /// Fits the IDF table on `chunks`.
    pub fn fit(dim: usize, seed: u64, chunks: &[Chunk]) -> Result<Self, EmbedError> {
        Ok(Self::new(dim, seed)?.with_idf(fit_idf(chunks)?))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn idf_table(&self) -> Option<&IdfTable> {
        self.idf.as_ref()
    }

    pub fn bucket(&self, term: &str) -> usize {
        (fnv1a64(self.seed, term.as_bytes()) % self.dim as u64) as usize
    }

    pub fn embed(&self, text: &str) -> EmbeddingVector {
        let mut tf: BTreeMap<String, usize> = BTreeMap::new();
        for t in terms(text) {
            *tf.entry(t).or_insert(0) += 1;
        }
        let mut values = vec![0.0; self.dim];
        for (term, count) in &tf {
            let weight = match &self.idf {
                Some(table) if !table.contains(term) => continue,
                Some(table) => table.idf(term),
                None => 1.0,
            };
            values[self.bucket(term)] += *count as f64 * weight;
        }
        EmbeddingVector::new(values).normalize()
    }
}

impl Embedder for HashedTfIdf {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed_texts(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        if texts.is_empty() {
            return Err(EmbedError::EmptyInput);
        }
        Ok(texts.iter().map(|t| self.embed(t)).collect())
    }
}
