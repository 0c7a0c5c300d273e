//! Prompt construction.
//!
//! The prompt has four `###` sections in a fixed order: instructions, user
//! query, retrieved information, and an open response slot. Each retrieved
//! chunk is preceded by a one-line metadata prefix when it has metadata, and
//! table chunks are rendered as Markdown pipe tables.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::corpus::Chunk;

pub const INSTRUCTIONS_HEADER: &str = "### Instructions";
pub const QUERY_HEADER: &str = "### User Query";
pub const RETRIEVED_HEADER: &str = "### Retrieved Information";
pub const RESPONSE_HEADER: &str = "### Your Response:";
pub const NO_DOCUMENTS: &str = "(no documents retrieved)";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Language {
    #[default]
    Fa,
    En,
}

impl Language {
    pub fn default_instructions(self) -> &'static str {
        match self {
            Language::Fa => {
                "فقط با استفاده از اطلاعات بازیابی\u{200C}شده به پرسش کاربر پاسخ دهید. پاسخ را کوتاه و به زبان فارسی بنویسید. اگر پاسخ در اطلاعات بازیابی\u{200C}شده نیست، بگویید که نمی\u{200C}دانید."
            }
            Language::En => {
                "Answer the user's question using only the retrieved information. Keep the answer short and write it in Persian. If the answer is not in the retrieved information, say that you do not know."
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PromptError {
    #[error("user query is empty")]
    EmptyQuery,
    #[error("table chunk `{chunk_id}`: row {row} has {found} cells, header has {expected}")]
    MalformedTable { chunk_id: String, row: usize, expected: usize, found: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetrievedChunk<'a> {
    pub chunk: &'a Chunk,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PromptParts<'a> {
    pub instructions: &'a str,
    pub user_query: &'a str,
    /// In ranking order; rendered in this order.
    pub chunks: Vec<RetrievedChunk<'a>>,
    pub language: Language,
}

impl<'a> PromptParts<'a> {
    /// Parts with the language's default instructions.
    pub fn new(user_query: &'a str, chunks: Vec<RetrievedChunk<'a>>, language: Language) -> Self {
        Self { instructions: language.default_instructions(), user_query, chunks, language }
    }
}

pub fn build_prompt(parts: &PromptParts<'_>) -> Result<String, PromptError> {
    if parts.user_query.trim().is_empty() {
        return Err(PromptError::EmptyQuery);
    }
    let body = if parts.chunks.is_empty() {
        String::from(NO_DOCUMENTS)
    } else {
        let mut rendered = Vec::with_capacity(parts.chunks.len());
        for rc in &parts.chunks {
            let text = render_chunk(rc.chunk)?;
            rendered.push(match attach_metadata(rc.chunk) {
                Some(prefix) => format!("{prefix}\n{text}"),
                None => text,
            });
        }
        rendered.join("\n\n")
    };
    Ok(format!(
        "{INSTRUCTIONS_HEADER}\n{}\n\n{QUERY_HEADER}\n{}\n\n{RETRIEVED_HEADER}\n{body}\n\n{RESPONSE_HEADER}\n",
        parts.instructions, parts.user_query
    ))
}

/// Plain chunks verbatim; table chunks as a Markdown pipe table whose first
/// row is the header.
pub fn render_chunk(chunk: &Chunk) -> Result<String, PromptError> {
    if !chunk.is_table {
        return Ok(chunk.text.clone());
    }
    let rows: Vec<Vec<&str>> = chunk.text.split('\n').map(|r| r.split('\t').collect()).collect();
    let width = rows.first().map_or(0, Vec::len);
    let mut lines = Vec::with_capacity(rows.len() + 1);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != width {
            return Err(PromptError::MalformedTable {
                chunk_id: chunk.id.clone(),
                row: i,
                expected: width,
                found: row.len(),
            });
        }
        lines.push(pipe_row(row.iter().map(|c| escape_cell(c))));
        if i == 0 {
            lines.push(pipe_row((0..width).map(|_| String::from("---"))));
        }
    }
    Ok(lines.join("\n"))
}

fn pipe_row<I: Iterator<Item = String>>(cells: I) -> String {
    let mut line = String::from("|");
    for c in cells {
        line.push(' ');
        line.push_str(&c);
        line.push_str(" |");
    }
    line
}

fn escape_cell(cell: &str) -> String {
    cell.trim().replace('|', "\\|")
}

/// The `[source: … | date: …]` line for a chunk, listing only the keys it has.
pub fn attach_metadata(chunk: &Chunk) -> Option<String> {
    let mut fields = Vec::new();
    if let Some(src) = &chunk.metadata.source_file {
        fields.push(format!("source: {src}"));
    }
    if let Some(dt) = &chunk.metadata.datetime {
        fields.push(format!("date: {dt}"));
    }
    if fields.is_empty() {
        None
    } else {
        Some(format!("[{}]", fields.join(" | ")))
    }
}
