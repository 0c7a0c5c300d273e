//! Answer generation: the [`Generator`] interface and an extractive
//! reference answerer.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::corpus::Chunk;
use crate::metrics::token_f1;
use crate::textnorm::terms;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorBackend {
    Remote,
    #[default]
    ExtractiveReference,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub backend: GeneratorBackend,
    /// Base URL of the remote generator; `/generate` is appended.
    pub endpoint: Option<String>,
    pub timeout_ms: u64,
    pub max_answer_chars: usize,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            backend: GeneratorBackend::ExtractiveReference,
            endpoint: None,
            timeout_ms: 30_000,
            max_answer_chars: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GenerateError {
    #[error("remote generator: {0}")]
    RemoteService(String),
    #[error("no retrieved content to answer from")]
    NoRetrievedContent,
    #[error("prompt is empty")]
    EmptyPrompt,
}

pub trait Generator: Send + Sync {
    /// Produces an answer. `retrieved` is in ranking order.
    fn generate(&self, prompt: &str, retrieved: &[&Chunk], query: &str) -> Result<String, GenerateError>;
}

/// Keeps at most `max_chars` characters of the trimmed text.
pub fn trim_and_truncate(text: &str, max_chars: usize) -> &str {
    let t = text.trim();
    match t.char_indices().nth(max_chars) {
        Some((cut, _)) => &t[..cut],
        None => t,
    }
}

pub fn is_sentence_break(c: char) -> bool {
    matches!(c, '.' | '\u{061F}' | '?' | '!' | '\u{061B}' | '\n')
}

/// Trimmed, non-empty sentences of `text`, as slices of it.
pub fn split_sentences(text: &str) -> Vec<&str> {
    text.split(is_sentence_break).map(str::trim).filter(|s| !s.is_empty()).collect()
}

/// Returns the sentence of the retrieved chunks with the highest token F1
/// against the query. Ties go to the earliest sentence of the highest-ranked chunk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExtractiveReference {
    pub max_answer_chars: usize,
}

impl Default for ExtractiveReference {
    fn default() -> Self {
        Self { max_answer_chars: GeneratorConfig::default().max_answer_chars }
    }
}

impl ExtractiveReference {
    pub fn best_sentence<'a>(&self, retrieved: &[&'a Chunk], query: &str) -> Option<(&'a str, f64)> {
        let q = terms(query);
        let mut best: Option<(&'a str, f64)> = None;
        for chunk in retrieved {
            for sentence in split_sentences(&chunk.text) {
                let f1 = token_f1(&terms(sentence), &q);
                if best.is_none_or(|(_, b)| f1 > b) {
                    best = Some((sentence, f1));
                }
            }
        }
        best
    }
}

impl Generator for ExtractiveReference {
    fn generate(&self, prompt: &str, retrieved: &[&Chunk], query: &str) -> Result<String, GenerateError> {
        if prompt.is_empty() {
            return Err(GenerateError::EmptyPrompt);
        }
        let (sentence, _) = self.best_sentence(retrieved, query).ok_or(GenerateError::NoRetrievedContent)?;
        Ok(String::from(trim_and_truncate(sentence, self.max_answer_chars)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Metadata;

    fn chunk(text: &str) -> Chunk {
        Chunk {
            id: "c#0".into(),
            doc_id: "c".into(),
            seq: 0,
            text: text.into(),
            token_span: (0, 0),
            metadata: Metadata::default(),
            is_table: false,
        }
    }

    fn answer(chunks: &[Chunk], q: &str) -> Result<String, GenerateError> {
        let refs: Vec<&Chunk> = chunks.iter().collect();
        ExtractiveReference::default().generate("p", &refs, q)
    }

    #[test]
    fn single_sentence() {
        assert_eq!(answer(&[chunk("تهران پایتخت ایران است.")], "پایتخت").unwrap(), "تهران پایتخت ایران است");
    }

    #[test]
    fn verbatim_query_sentence_wins() {
        let c = chunk("هوا سرد است. کتاب روی میز است؟ من به مدرسه می\u{200C}روم!");
        assert_eq!(answer(&[c], "کتاب روی میز است").unwrap(), "کتاب روی میز است");
    }

    #[test]
    fn hand_computed_f1_choice() {
        // query: a b c d
        // "a e f g h" -> overlap 1, p 1/5, r 1/4: F1 = 2/9 ≈ 0.222
        // "a b x"     -> overlap 2, p 2/3, r 1/2: F1 = 4/7 ≈ 0.571
        // "a b c"     -> overlap 3, p 1,   r 3/4: F1 = 6/7 ≈ 0.857
        // Second chunk alone: "a q" (F1 = 2·(1/2)(1/4)/(3/4) = 1/3) vs "a b c e x" (F1 = 2·(3/5)(3/4)/(27/20) = 2/3)
        let first = chunk("a e f g h. a b x");
        let second = chunk("a q؛ a b c e x");
        assert_eq!(answer(&[first.clone(), second.clone()], "a b c d").unwrap(), "a b c e x");
        let third = chunk("a b c");
        assert_eq!(answer(&[first, second, third], "a b c d").unwrap(), "a b c");
    }

    #[test]
    fn two_chunks_point_four_vs_two_thirds() {
        // F1 = 2·overlap / (|sentence| + |query|), query "a b c d":
        // "a"   -> 2·1/(1+4) = 0.4
        // "a b" -> 2·2/(2+4) = 2/3
        let c1 = chunk("a");
        let c2 = chunk("a b");
        let refs = [&c1, &c2];
        let (s, f) = ExtractiveReference::default().best_sentence(&refs, "a b c d").unwrap();
        assert_eq!(s, "a b");
        assert!((f - 2.0 / 3.0).abs() < 1e-12);
        let (_, f1) = ExtractiveReference::default().best_sentence(&[&c1], "a b c d").unwrap();
        assert!((f1 - 0.4).abs() < 1e-12);
    }

    #[test]
    fn ties_go_to_earlier_chunk() {
        let a = chunk("x y");
        let b = chunk("x z");
        assert_eq!(answer(&[a.clone(), b.clone()], "x").unwrap(), "x y");
        assert_eq!(answer(&[b, a], "x").unwrap(), "x z");
    }

    #[test]
    fn nothing_retrieved() {
        assert_eq!(answer(&[], "q"), Err(GenerateError::NoRetrievedContent));
        assert_eq!(answer(&[chunk(" . ؟ ")], "q"), Err(GenerateError::NoRetrievedContent));
    }

    #[test]
    fn truncation_counts_chars() {
        assert_eq!(trim_and_truncate("  سلام دنیا ", 4), "سلام");
        assert_eq!(trim_and_truncate("abc", 10), "abc");
        let g = ExtractiveReference { max_answer_chars: 3 };
        let c = chunk("abcdef");
        assert_eq!(g.generate("p", &[&c], "abcdef").unwrap(), "abc");
    }

    #[test]
    fn sentence_splitting() {
        assert_eq!(split_sentences("یک. دو؟ سه؛ four!five\nsix?"), ["یک", "دو", "سه", "four", "five", "six"]);
    }
}
