//! HTTP clients for the embedding, rerank and generation services.
//!
//! Each service is reached at `{endpoint}/embed`, `{endpoint}/rerank` or
//! `{endpoint}/generate` with a JSON POST. Any transport failure, non-2xx
//! status, or malformed body is reported as the stage's remote-service error.

use std::time::Duration;

use persianrag_core::corpus::Chunk;
use persianrag_core::embed::{EmbedError, Embedder, EmbeddingVector};
use persianrag_core::generate::{trim_and_truncate, GenerateError, Generator};
use persianrag_core::retrieve::{RelevanceScorer, RerankError};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::par;

#[derive(Debug, Clone)]
pub struct HttpClient {
    agent: ureq::Agent,
    base: String,
}

impl HttpClient {
    pub fn new(endpoint: &str, timeout: Duration) -> Self {
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(true)
            .build();
        Self { agent: ureq::Agent::new_with_config(config), base: endpoint.trim_end_matches('/').to_string() }
    }

    pub fn endpoint(&self) -> &str {
        &self.base
    }

    pub fn post<Req: Serialize, Resp: DeserializeOwned>(&self, path: &str, body: &Req) -> Result<Resp, String> {
        let url = format!("{}{}", self.base, path);
        let mut resp = self.agent.post(&url).send_json(body).map_err(|e| format!("POST {url}: {e}"))?;
        resp.body_mut().read_json::<Resp>().map_err(|e| format!("POST {url}: bad response body: {e}"))
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [&'a str],
}

#[derive(Deserialize)]
struct EmbedResponse {
    dim: usize,
    vectors: Vec<Vec<f64>>,
}

/// Embedder backed by the `/embed` service. Texts are sent in batches of
/// `batch_size`, with up to `parallelism` requests in flight.
#[derive(Debug, Clone)]
pub struct RemoteEmbedder {
    client: HttpClient,
    dim: usize,
    batch_size: usize,
    parallelism: usize,
}

impl RemoteEmbedder {
    pub fn new(client: HttpClient, dim: usize, batch_size: usize, parallelism: usize) -> Self {
        Self { client, dim, batch_size: batch_size.max(1), parallelism: parallelism.max(1) }
    }

    /// Asks the service for the vector of `sample` to learn its dimension.
    pub fn probe_dim(client: &HttpClient, sample: &str) -> Result<usize, EmbedError> {
        let r: EmbedResponse =
            client.post("/embed", &EmbedRequest { texts: &[sample] }).map_err(EmbedError::RemoteService)?;
        if r.dim == 0 {
            return Err(EmbedError::RemoteService("service reported dim 0".into()));
        }
        Ok(r.dim)
    }

    fn embed_batch(&self, batch: &[&str]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        let r: EmbedResponse =
            self.client.post("/embed", &EmbedRequest { texts: batch }).map_err(EmbedError::RemoteService)?;
        if r.dim != self.dim {
            return Err(EmbedError::DimensionMismatch { expected: self.dim, found: r.dim });
        }
        if r.vectors.len() != batch.len() {
            return Err(EmbedError::RemoteService(format!(
                "sent {} texts, received {} vectors",
                batch.len(),
                r.vectors.len()
            )));
        }
        r.vectors
            .into_iter()
            .map(|v| {
                if v.len() != self.dim {
                    Err(EmbedError::DimensionMismatch { expected: self.dim, found: v.len() })
                } else {
                    Ok(EmbeddingVector::new(v).normalize())
                }
            })
            .collect()
    }
}

impl Embedder for RemoteEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed_texts(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        if texts.is_empty() {
            return Err(EmbedError::EmptyInput);
        }
        let batches: Vec<&[&str]> = texts.chunks(self.batch_size).collect();
        let mut out = Vec::with_capacity(texts.len());
        for r in par::map(&batches, self.parallelism, |_, b| self.embed_batch(b)) {
            out.extend(r?);
        }
        Ok(out)
    }
}

#[derive(Serialize)]
struct RerankRequest<'a> {
    query: &'a str,
    documents: &'a [&'a str],
    top_n: usize,
}

#[derive(Deserialize)]
struct RerankResult {
    index: usize,
    relevance_score: f64,
}

#[derive(Deserialize)]
struct RerankResponse {
    results: Vec<RerankResult>,
}

#[derive(Debug, Clone)]
pub struct RemoteReranker {
    client: HttpClient,
}

impl RemoteReranker {
    pub fn new(client: HttpClient) -> Self {
        Self { client }
    }
}

impl RelevanceScorer for RemoteReranker {
    fn relevance(&self, query: &str, documents: &[&str]) -> Result<Vec<Option<f64>>, RerankError> {
        let r: RerankResponse = self
            .client
            .post("/rerank", &RerankRequest { query, documents, top_n: documents.len() })
            .map_err(RerankError::RemoteService)?;
        let mut scores = vec![None; documents.len()];
        for item in r.results {
            let slot = scores
                .get_mut(item.index)
                .ok_or_else(|| RerankError::RemoteService(format!("result index {} out of range", item.index)))?;
            if !item.relevance_score.is_finite() {
                return Err(RerankError::RemoteService(format!("non-finite score for index {}", item.index)));
            }
            *slot = Some(item.relevance_score);
        }
        Ok(scores)
    }
}

#[derive(Serialize)]
struct GenerateRequest<'a> {
    prompt: &'a str,
}

#[derive(Deserialize)]
struct GenerateResponse {
    text: String,
}

#[derive(Debug, Clone)]
pub struct RemoteGenerator {
    client: HttpClient,
    max_answer_chars: usize,
}

impl RemoteGenerator {
    pub fn new(client: HttpClient, max_answer_chars: usize) -> Self {
        Self { client, max_answer_chars }
    }
}

impl Generator for RemoteGenerator {
    fn generate(&self, prompt: &str, _retrieved: &[&Chunk], _query: &str) -> Result<String, GenerateError> {
        if prompt.is_empty() {
            return Err(GenerateError::EmptyPrompt);
        }
        let r: GenerateResponse =
            self.client.post("/generate", &GenerateRequest { prompt }).map_err(GenerateError::RemoteService)?;
        Ok(trim_and_truncate(&r.text, self.max_answer_chars).to_string())
    }
}
