//! Documents and token-window chunking.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::textnorm::{normalize_text, tokenize, NormalizationConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DocType {
    #[default]
    Plain,
    Table,
}

/// One record of the input corpus, before normalization.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawDocument {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_file: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub datetime: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub doc_type: Option<DocType>,
}

impl RawDocument {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Self { id: id.into(), text: text.into(), source_file: None, datetime: None, doc_type: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Metadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_file: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub datetime: Option<String>,
    #[serde(default)]
    pub doc_type: DocType,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    /// Normalized text. Table documents hold one row per line with cells
    /// separated by tabs.
    pub text: String,
    pub metadata: Metadata,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub id: String,
    pub doc_id: String,
    pub seq: usize,
    pub text: String,
    /// Half-open token range `[start, end)` within the document's token stream.
    pub token_span: (usize, usize),
    pub metadata: Metadata,
    pub is_table: bool,
}

pub fn chunk_id(doc_id: &str, seq: usize) -> String {
    format!("{doc_id}#{seq}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChunkingConfig {
    pub chunk_size_tokens: usize,
    pub overlap_tokens: usize,
}

impl Default for ChunkingConfig {
    fn default() -> Self {
        Self { chunk_size_tokens: 128, overlap_tokens: 16 }
    }
}

impl ChunkingConfig {
    pub fn new(chunk_size_tokens: usize, overlap_tokens: usize) -> Result<Self, CorpusError> {
        let cfg = Self { chunk_size_tokens, overlap_tokens };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.chunk_size_tokens == 0 {
            return Err(CorpusError::InvalidChunkConfig {
                field: "chunk_size_tokens",
                reason: "must be greater than zero".into(),
            });
        }
        if self.overlap_tokens >= self.chunk_size_tokens {
            return Err(CorpusError::InvalidChunkConfig {
                field: "overlap_tokens",
                reason: format!(
                    "{} must be smaller than chunk_size_tokens ({})",
                    self.overlap_tokens, self.chunk_size_tokens
                ),
            });
        }
        Ok(())
    }

    pub fn stride(&self) -> usize {
        self.chunk_size_tokens - self.overlap_tokens
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CorpusError {
    #[error("duplicate document id `{0}`")]
    DuplicateId(String),
    #[error("document `{0}` is empty after normalization")]
    EmptyDocument(String),
    #[error("invalid chunking config: {field} {reason}")]
    InvalidChunkConfig { field: &'static str, reason: String },
    #[error("table document `{doc_id}`: row {row} has {found} cells, header has {expected}")]
    MalformedTable { doc_id: String, row: usize, expected: usize, found: usize },
}

/// Normalizes raw records into documents, rejecting duplicate ids and empty texts.
pub fn ingest(records: &[RawDocument], cfg: &NormalizationConfig) -> Result<Vec<Document>, CorpusError> {
    let mut seen = BTreeSet::new();
    let mut docs = Vec::with_capacity(records.len());
    for rec in records {
        if !seen.insert(rec.id.as_str()) {
            return Err(CorpusError::DuplicateId(rec.id.clone()));
        }
        let doc_type = rec.doc_type.unwrap_or_default();
        let text = match doc_type {
            DocType::Plain => normalize_text(&rec.text, cfg),
            DocType::Table => normalize_table(&rec.id, &rec.text, cfg)?,
        };
        if text.trim().is_empty() {
            return Err(CorpusError::EmptyDocument(rec.id.clone()));
        }
        docs.push(Document {
            id: rec.id.clone(),
            text,
            metadata: Metadata {
                source_file: rec.source_file.clone(),
                datetime: rec.datetime.clone(),
                doc_type,
            },
        });
    }
    Ok(docs)
}

/// Splits a table source into rows of cells. Rows are lines; cells are
/// tab-separated, or pipe-separated when the line has no tab. Markdown
/// separator rows (`|---|:--:|`) are dropped.
pub fn parse_table_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|line| {
            if line.contains('\t') {
                line.split('\t').map(|c| c.trim().to_string()).collect::<Vec<_>>()
            } else {
                let inner = line.strip_prefix('|').unwrap_or(line);
                let inner = inner.strip_suffix('|').unwrap_or(inner);
                inner.split('|').map(|c| c.trim().to_string()).collect()
            }
        })
        .filter(|cells| !is_separator_row(cells))
        .collect()
}

fn is_separator_row(cells: &[String]) -> bool {
    !cells.is_empty()
        && cells.iter().all(|c| {
            let c = c.trim();
            c.contains('-') && c.chars().all(|ch| ch == '-' || ch == ':')
        })
}

fn normalize_table(doc_id: &str, text: &str, cfg: &NormalizationConfig) -> Result<String, CorpusError> {
    let rows = parse_table_rows(text);
    let width = rows.first().map_or(0, Vec::len);
    let mut out = String::new();
    for (i, row) in rows.iter().enumerate() {
        if row.len() != width {
            return Err(CorpusError::MalformedTable {
                doc_id: doc_id.into(),
                row: i,
                expected: width,
                found: row.len(),
            });
        }
        if i > 0 {
            out.push('\n');
        }
        for (j, cell) in row.iter().enumerate() {
            if j > 0 {
                out.push('\t');
            }
            let cell = normalize_text(cell, cfg);
            // Keep the row structure intact regardless of the whitespace policy.
            out.extend(cell.chars().map(|c| if c == '\t' || c == '\n' || c == '\r' { ' ' } else { c }));
        }
    }
    Ok(out)
}

/// Slices a document into overlapping token windows.
///
/// Plain documents use a sliding window of `chunk_size_tokens` with stride
/// `chunk_size_tokens - overlap_tokens`; the tail window is emitted unless it
/// lies wholly inside the previous one. Table documents are grouped by whole
/// rows instead, with the header row repeated at the top of every chunk.
pub fn chunk_document(doc: &Document, cfg: &ChunkingConfig) -> Result<Vec<Chunk>, CorpusError> {
    cfg.validate()?;
    match doc.metadata.doc_type {
        DocType::Plain => Ok(chunk_plain(doc, cfg)),
        DocType::Table => Ok(chunk_table(doc, cfg)),
    }
}

fn make_chunk(doc: &Document, seq: usize, text: String, span: (usize, usize), is_table: bool) -> Chunk {
    Chunk {
        id: chunk_id(&doc.id, seq),
        doc_id: doc.id.clone(),
        seq,
        text,
        token_span: span,
        metadata: doc.metadata.clone(),
        is_table,
    }
}

/// Token windows `[start, end)` over `n` tokens.
pub fn window_spans(n: usize, cfg: &ChunkingConfig) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    if n == 0 {
        return spans;
    }
    let mut start = 0;
    loop {
        let end = (start + cfg.chunk_size_tokens).min(n);
        spans.push((start, end));
        if end == n {
            break;
        }
        start += cfg.stride();
    }
    spans
}

fn chunk_plain(doc: &Document, cfg: &ChunkingConfig) -> Vec<Chunk> {
    let stream = tokenize(&doc.text);
    let toks = stream.tokens();
    window_spans(toks.len(), cfg)
        .into_iter()
        .enumerate()
        .map(|(seq, (s, e))| {
            let text = doc.text[toks[s].start..toks[e - 1].end].to_string();
            make_chunk(doc, seq, text, (s, e), false)
        })
        .collect()
}

fn chunk_table(doc: &Document, cfg: &ChunkingConfig) -> Vec<Chunk> {
    let lines: Vec<&str> = doc.text.split('\n').collect();
    let counts: Vec<usize> = lines.iter().map(|l| tokenize(l).len()).collect();
    let Some((&header, rows)) = lines.split_first() else {
        return Vec::new();
    };
    let header_tokens = counts[0];
    if rows.is_empty() {
        return alloc::vec![make_chunk(doc, 0, header.to_string(), (0, header_tokens), true)];
    }
    let budget = cfg.chunk_size_tokens.saturating_sub(header_tokens).max(1);
    let mut chunks = Vec::new();
    let mut first_token = header_tokens;
    let mut i = 0;
    while i < rows.len() {
        let mut j = i;
        let mut used = 0;
        // Always take at least one row, then as many whole rows as fit.
        while j < rows.len() && (j == i || used + counts[j + 1] <= budget) {
            used += counts[j + 1];
            j += 1;
        }
        let mut text = String::from(header);
        for row in &rows[i..j] {
            text.push('\n');
            text.push_str(row);
        }
        let seq = chunks.len();
        chunks.push(make_chunk(doc, seq, text, (first_token, first_token + used), true));
        first_token += used;
        i = j;
    }
    chunks
}

/// All chunks of a corpus, addressable by id and kept in corpus order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<Chunk>", into = "Vec<Chunk>")]
pub struct ChunkStore {
    chunks: Vec<Chunk>,
    by_id: BTreeMap<String, usize>,
}

impl From<Vec<Chunk>> for ChunkStore {
    fn from(chunks: Vec<Chunk>) -> Self {
        let by_id = chunks.iter().enumerate().map(|(i, c)| (c.id.clone(), i)).collect();
        Self { chunks, by_id }
    }
}

impl From<ChunkStore> for Vec<Chunk> {
    fn from(store: ChunkStore) -> Self {
        store.chunks
    }
}

impl ChunkStore {
    /// Chunks every document; chunk ids are unique because document ids are.
    pub fn build(docs: &[Document], cfg: &ChunkingConfig) -> Result<Self, CorpusError> {
        cfg.validate()?;
        let mut chunks = Vec::new();
        let mut seen = BTreeSet::new();
        for doc in docs {
            if !seen.insert(doc.id.as_str()) {
                return Err(CorpusError::DuplicateId(doc.id.clone()));
            }
            chunks.extend(chunk_document(doc, cfg)?);
        }
        Ok(Self::from(chunks))
    }

    pub fn from_chunks(chunks: Vec<Chunk>) -> Result<Self, CorpusError> {
        let mut seen = BTreeSet::new();
        for c in &chunks {
            if !seen.insert(c.id.as_str()) {
                return Err(CorpusError::DuplicateId(c.id.clone()));
            }
        }
        Ok(Self::from(chunks))
    }

    pub fn get(&self, id: &str) -> Option<&Chunk> {
        self.by_id.get(id).map(|&i| &self.chunks[i])
    }

    pub fn chunks(&self) -> &[Chunk] {
        &self.chunks
    }

    pub fn len(&self) -> usize {
        self.chunks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chunks.is_empty()
    }

    pub fn iter(&self) -> core::slice::Iter<'_, Chunk> {
        self.chunks.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn doc(text: &str) -> Document {
        Document { id: "d".into(), text: text.into(), metadata: Metadata::default() }
    }

    fn spans(chunks: &[Chunk]) -> Vec<(usize, usize)> {
        chunks.iter().map(|c| c.token_span).collect()
    }

    #[test]
    fn ingest_examples() {
        let cfg = NormalizationConfig::default();
        let recs = vec![RawDocument::new("a", "سلام"), RawDocument::new("b", "دنیا")];
        assert_eq!(ingest(&recs, &cfg).unwrap().len(), 2);

        let dup = vec![RawDocument::new("a", "x"), RawDocument::new("a", "y")];
        assert_eq!(ingest(&dup, &cfg), Err(CorpusError::DuplicateId("a".into())));

        let blank = vec![RawDocument::new("w", " \t\n ")];
        assert_eq!(ingest(&blank, &cfg), Err(CorpusError::EmptyDocument("w".into())));
    }

    #[test]
    fn sliding_window_ten_tokens() {
        let d = doc("t0 t1 t2 t3 t4 t5 t6 t7 t8 t9");
        let chunks = chunk_document(&d, &ChunkingConfig::new(4, 1).unwrap()).unwrap();
        assert_eq!(spans(&chunks), vec![(0, 4), (3, 7), (6, 10)]);
        assert_eq!(chunks[1].text, "t3 t4 t5 t6");
        assert_eq!(chunks[2].id, "d#2");
    }

    #[test]
    fn short_document_single_chunk() {
        let d = doc("a b c");
        let chunks = chunk_document(&d, &ChunkingConfig { chunk_size_tokens: 8, overlap_tokens: 0 }).unwrap();
        assert_eq!(spans(&chunks), vec![(0, 3)]);
        assert_eq!(chunks[0].text, "a b c");
    }

    #[test]
    fn exact_multiple_has_no_contained_tail() {
        let d = doc("a b c d e f g");
        let chunks = chunk_document(&d, &ChunkingConfig::new(4, 1).unwrap()).unwrap();
        assert_eq!(spans(&chunks), vec![(0, 4), (3, 7)]);
    }

    #[test]
    fn overlap_equal_to_size_rejected() {
        let bad = ChunkingConfig { chunk_size_tokens: 4, overlap_tokens: 4 };
        assert!(matches!(
            chunk_document(&doc("a"), &bad),
            Err(CorpusError::InvalidChunkConfig { field: "overlap_tokens", .. })
        ));
        assert!(ChunkingConfig::new(0, 0).is_err());
    }

    #[test]
    fn chunk_text_keeps_inner_spacing() {
        let raw = NormalizationConfig { collapse_whitespace: false, ..Default::default() };
        let docs = ingest(&[RawDocument::new("d", "a,  b.\n c d")], &raw).unwrap();
        let chunks = chunk_document(&docs[0], &ChunkingConfig::new(3, 0).unwrap()).unwrap();
        assert_eq!(chunks[0].text, "a,  b.\n c");
        assert_eq!(chunks[1].text, "d");
    }

    #[test]
    fn table_chunks_repeat_header() {
        let mut rec = RawDocument::new("t", "| City | Pop |\n|---|---|\n| Tehran | 9 |\n| Isfahan | 2 |\n| Shiraz | 1 |");
        rec.doc_type = Some(DocType::Table);
        let docs = ingest(&[rec], &NormalizationConfig::default()).unwrap();
        assert_eq!(docs[0].text, "City\tPop\nTehran\t9\nIsfahan\t2\nShiraz\t1");
        let chunks = chunk_document(&docs[0], &ChunkingConfig::new(6, 0).unwrap()).unwrap();
        let texts: Vec<&str> = chunks.iter().map(|c| c.text.as_str()).collect();
        assert_eq!(texts, vec!["City\tPop\nTehran\t9\nIsfahan\t2", "City\tPop\nShiraz\t1"]);
        assert_eq!(spans(&chunks), vec![(2, 6), (6, 8)]);
        assert!(chunks.iter().all(|c| c.is_table));
    }

    #[test]
    fn ragged_table_rejected_at_ingest() {
        let mut rec = RawDocument::new("t", "a\tb\n1\t2\t3");
        rec.doc_type = Some(DocType::Table);
        assert!(matches!(
            ingest(&[rec], &NormalizationConfig::default()),
            Err(CorpusError::MalformedTable { row: 1, expected: 2, found: 3, .. })
        ));
    }

    #[test]
    fn store_lookup_and_duplicates() {
        let docs = vec![doc("a b c"), Document { id: "e".into(), ..doc("x") }];
        let store = ChunkStore::build(&docs, &ChunkingConfig::new(2, 0).unwrap()).unwrap();
        assert_eq!(store.len(), 3);
        assert_eq!(store.get("d#1").unwrap().text, "c");
        assert_eq!(store.get("e#0").unwrap().doc_id, "e");
        let twice = vec![doc("a"), doc("b")];
        assert!(matches!(ChunkStore::build(&twice, &ChunkingConfig::default()), Err(CorpusError::DuplicateId(_))));
    }
}
