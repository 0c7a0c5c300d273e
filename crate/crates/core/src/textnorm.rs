//! Persian text normalization and tokenization.
//!
//! Normalization runs in a single pass per character, in this order:
//! letter mapping, digit conversion, diacritic stripping, ZWNJ policy, and
//! finally whitespace collapsing. Because the mapping table may not contain
//! chains (a target that is itself a source), the whole transform is
//! idempotent.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use once_cell::race::OnceBox;
use serde::{Deserialize, Serialize};

/// ZERO WIDTH NON-JOINER, the Persian half-space.
pub const ZWNJ: char = '\u{200C}';

const BUILTIN_TABLE: &str = include_str!("../data/char_map.tsv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZwnjPolicy {
    #[default]
    Preserve,
    Strip,
    ToSpace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DigitPolicy {
    Preserve,
    #[default]
    ToAscii,
    ToPersian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NormalizationConfig {
    /// Unify Arabic kaf/yeh (and the other letter rows of the table) to Persian forms.
    pub map_arabic_compat: bool,
    pub zwnj_policy: ZwnjPolicy,
    pub digit_policy: DigitPolicy,
    /// Remove Arabic harakat, U+064B..=U+065F.
    pub strip_diacritics: bool,
    /// Replace every whitespace run with one ASCII space and trim both ends.
    pub collapse_whitespace: bool,
}

impl Default for NormalizationConfig {
    fn default() -> Self {
        Self {
            map_arabic_compat: true,
            zwnj_policy: ZwnjPolicy::Preserve,
            digit_policy: DigitPolicy::ToAscii,
            strip_diacritics: true,
            collapse_whitespace: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CharMapError {
    #[error("line {line}: expected two code point columns")]
    Syntax { line: usize },
    #[error("line {line}: `{token}` is not a valid code point")]
    InvalidCodePoint { line: usize, token: String },
    #[error("line {line}: source {source_char:?} is mapped twice")]
    DuplicateSource { line: usize, source_char: char },
    #[error("line {line}: target {target:?} is also a source, mappings must not chain")]
    Chained { line: usize, target: char },
}

/// Character mapping table.
///
/// The text form has two columns per line, source and target code point,
/// written as hex with an optional `U+` prefix. `#` starts a comment. Rows
/// whose target is an ASCII digit are digit rows; all other rows are letter rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CharMap {
    letters: Vec<(char, char)>,
    digits: Vec<(char, u8)>,
}

impl CharMap {
    pub fn parse(src: &str) -> Result<Self, CharMapError> {
        let mut rows: Vec<(usize, char, char)> = Vec::new();
        for (idx, raw) in src.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let mut cols = content.split_whitespace();
            let (Some(a), Some(b), None) = (cols.next(), cols.next(), cols.next()) else {
                return Err(CharMapError::Syntax { line });
            };
            let source = parse_code_point(a, line)?;
            let target = parse_code_point(b, line)?;
            if rows.iter().any(|&(_, s, _)| s == source) {
                return Err(CharMapError::DuplicateSource { line, source_char: source });
            }
            rows.push((line, source, target));
        }
        for &(line, _, target) in &rows {
            if rows.iter().any(|&(_, s, _)| s == target) {
                return Err(CharMapError::Chained { line, target });
            }
        }
        let mut letters = Vec::new();
        let mut digits = Vec::new();
        for (_, source, target) in rows {
            if target.is_ascii_digit() {
                digits.push((source, target as u8 - b'0'));
            } else {
                letters.push((source, target));
            }
        }
        letters.sort_unstable();
        digits.sort_unstable();
        Ok(Self { letters, digits })
    }

    /// The table shipped in `data/char_map.tsv`.
    pub fn builtin() -> &'static CharMap {
        static BUILTIN: OnceBox<CharMap> = OnceBox::new();
        BUILTIN.get_or_init(|| {
            alloc::boxed::Box::new(
                CharMap::parse(BUILTIN_TABLE).expect("builtin character table is well formed"),
            )
        })
    }

    pub fn map_letter(&self, c: char) -> Option<char> {
        self.letters
            .binary_search_by_key(&c, |&(s, _)| s)
            .ok()
            .map(|i| self.letters[i].1)
    }

    /// Numeric value of a non-ASCII digit listed in the table.
    pub fn digit_value(&self, c: char) -> Option<u8> {
        self.digits
            .binary_search_by_key(&c, |&(s, _)| s)
            .ok()
            .map(|i| self.digits[i].1)
    }

    pub fn letter_rows(&self) -> &[(char, char)] {
        &self.letters
    }

    pub fn digit_rows(&self) -> &[(char, u8)] {
        &self.digits
    }
}

impl fmt::Display for CharMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &(s, t) in &self.letters {
            writeln!(f, "U+{:04X}\tU+{:04X}", s as u32, t as u32)?;
        }
        for &(s, d) in &self.digits {
            writeln!(f, "U+{:04X}\tU+{:04X}", s as u32, u32::from(b'0' + d))?;
        }
        Ok(())
    }
}

fn parse_code_point(token: &str, line: usize) -> Result<char, CharMapError> {
    let hex = token
        .strip_prefix("U+")
        .or_else(|| token.strip_prefix("u+"))
        .or_else(|| token.strip_prefix("0x"))
        .unwrap_or(token);
    u32::from_str_radix(hex, 16)
        .ok()
        .and_then(char::from_u32)
        .ok_or_else(|| CharMapError::InvalidCodePoint { line, token: token.into() })
}

pub fn is_harakat(c: char) -> bool {
    ('\u{064B}'..='\u{065F}').contains(&c)
}

const PERSIAN_ZERO: u32 = 0x06F0;

pub fn normalize_text(text: &str, cfg: &NormalizationConfig) -> String {
    normalize_text_with(text, cfg, CharMap::builtin())
}

pub fn normalize_text_with(text: &str, cfg: &NormalizationConfig, map: &CharMap) -> String {
    let mut out = String::with_capacity(text.len());
    let mut pending_space = false;
    for c in text.chars() {
        let c = if cfg.map_arabic_compat { map.map_letter(c).unwrap_or(c) } else { c };
        let c = match cfg.digit_policy {
            DigitPolicy::Preserve => c,
            DigitPolicy::ToAscii => match map.digit_value(c) {
                Some(d) => char::from(b'0' + d),
                None => c,
            },
            DigitPolicy::ToPersian => {
                let value = if c.is_ascii_digit() { Some(c as u8 - b'0') } else { map.digit_value(c) };
                match value {
                    Some(d) => char::from_u32(PERSIAN_ZERO + u32::from(d)).unwrap_or(c),
                    None => c,
                }
            }
        };
        if cfg.strip_diacritics && is_harakat(c) {
            continue;
        }
        let c = if c == ZWNJ {
            match cfg.zwnj_policy {
                ZwnjPolicy::Preserve => c,
                ZwnjPolicy::Strip => continue,
                ZwnjPolicy::ToSpace => ' ',
            }
        } else {
            c
        };
        if cfg.collapse_whitespace && c.is_whitespace() {
            pending_space = !out.is_empty();
            continue;
        }
        if pending_space {
            out.push(' ');
            pending_space = false;
        }
        out.push(c);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Token<'a> {
    pub text: &'a str,
    /// Byte offset of the first character.
    pub start: usize,
    /// Byte offset one past the last character.
    pub end: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenStream<'a> {
    tokens: Vec<Token<'a>>,
}

impl<'a> TokenStream<'a> {
    pub fn tokens(&self) -> &[Token<'a>] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn iter(&self) -> core::slice::Iter<'_, Token<'a>> {
        self.tokens.iter()
    }

    pub fn texts(&self) -> impl Iterator<Item = &'a str> + '_ {
        self.tokens.iter().map(|t| t.text)
    }
}

impl<'a> IntoIterator for TokenStream<'a> {
    type Item = Token<'a>;
    type IntoIter = alloc::vec::IntoIter<Token<'a>>;

    fn into_iter(self) -> Self::IntoIter {
        self.tokens.into_iter()
    }
}

/// Letters, digits, and combining marks belong to words.
pub fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || is_combining_mark(c)
}

fn is_combining_mark(c: char) -> bool {
    matches!(c,
        '\u{0300}'..='\u{036F}'
        | '\u{0610}'..='\u{061A}'
        | '\u{064B}'..='\u{065F}'
        | '\u{0670}'
        | '\u{06D6}'..='\u{06DC}'
        | '\u{06DF}'..='\u{06E4}'
        | '\u{06E7}'..='\u{06E8}'
        | '\u{06EA}'..='\u{06ED}')
}

/// Splits text into maximal runs of word characters.
///
/// A ZWNJ between two word characters joins them into one token; anywhere
/// else it separates like punctuation.
pub fn tokenize(text: &str) -> TokenStream<'_> {
    let mut tokens = Vec::new();
    let mut open: Option<(usize, usize)> = None;
    let mut close = |open: &mut Option<(usize, usize)>| {
        if let Some((start, end)) = open.take() {
            tokens.push(Token { text: &text[start..end], start, end });
        }
    };
    for (i, c) in text.char_indices() {
        if is_word_char(c) {
            match open.as_mut() {
                Some((_, end)) => *end = i + c.len_utf8(),
                None => open = Some((i, i + c.len_utf8())),
            }
        } else if c == ZWNJ && open.is_some() {
            // Tentatively inside the word; `end` only advances if a word character follows.
        } else {
            close(&mut open);
        }
    }
    close(&mut open);
    TokenStream { tokens }
}

/// Lowercased token texts, the term form used by BM25, the reference
/// embedder, and overlap scoring.
pub fn terms(text: &str) -> Vec<String> {
    tokenize(text).texts().map(str::to_lowercase).collect()
}
