//! Okapi BM25 over an inverted index.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{rank_results, IndexError, ScoredChunk, Source};
use crate::corpus::Chunk;
use crate::textnorm::terms;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 1.2, b: 0.75 }
    }
}

impl Bm25Params {
    pub fn validate(&self) -> Result<(), IndexError> {
        if !(self.k1 >= 0.0 && self.k1.is_finite()) {
            return Err(IndexError::InvalidParams(format!("k1 = {} must be >= 0", self.k1)));
        }
        if !(0.0..=1.0).contains(&self.b) {
            return Err(IndexError::InvalidParams(format!("b = {} must lie in [0, 1]", self.b)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Posting {
    /// Position of the chunk in the index's chunk list.
    pub doc: u32,
    pub tf: u32,
}

/// Inverted index with per-chunk lengths, frozen after [`Bm25Index::build`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bm25Index {
    params: Bm25Params,
    chunk_ids: Vec<String>,
    doc_lengths: Vec<u32>,
    avg_doc_length: f64,
    postings: BTreeMap<String, Vec<Posting>>,
}

impl Bm25Index {
    pub fn build(chunks: &[Chunk], params: Bm25Params) -> Result<Self, IndexError> {
        Self::build_from_texts(chunks.iter().map(|c| (c.id.as_str(), c.text.as_str())), params)
    }

    pub fn build_from_texts<'a, I>(docs: I, params: Bm25Params) -> Result<Self, IndexError>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        params.validate()?;
        let mut chunk_ids = Vec::new();
        let mut doc_lengths = Vec::new();
        let mut postings: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
        let mut seen = BTreeSet::new();
        for (doc, (id, text)) in docs.into_iter().enumerate() {
            if !seen.insert(id) {
                return Err(IndexError::DuplicateId(id.into()));
            }
            let doc = u32::try_from(doc).map_err(|_| IndexError::Corrupt("too many chunks".into()))?;
            let toks = terms(text);
            let mut tf: BTreeMap<String, u32> = BTreeMap::new();
            for t in &toks {
                *tf.entry(t.clone()).or_insert(0) += 1;
            }
            for (term, count) in tf {
                postings.entry(term).or_default().push(Posting { doc, tf: count });
            }
            chunk_ids.push(String::from(id));
            doc_lengths.push(toks.len() as u32);
        }
        if chunk_ids.is_empty() {
            return Err(IndexError::EmptyCorpus);
        }
        let total: u64 = doc_lengths.iter().map(|&l| u64::from(l)).sum();
        let avg_doc_length = total as f64 / chunk_ids.len() as f64;
        Ok(Self { params, chunk_ids, doc_lengths, avg_doc_length, postings })
    }

    pub fn params(&self) -> Bm25Params {
        self.params
    }

    /// Number of indexed chunks.
    pub fn len(&self) -> usize {
        self.chunk_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chunk_ids.is_empty()
    }

    pub fn avg_doc_length(&self) -> f64 {
        self.avg_doc_length
    }

    pub fn doc_length(&self, chunk_id: &str) -> Option<usize> {
        let i = self.chunk_ids.iter().position(|c| c == chunk_id)?;
        Some(self.doc_lengths[i] as usize)
    }

    pub fn postings(&self, term: &str) -> &[Posting] {
        self.postings.get(term).map_or(&[], Vec::as_slice)
    }

    pub fn chunk_id(&self, doc: u32) -> &str {
        &self.chunk_ids[doc as usize]
    }

    pub fn idf(&self, df: usize) -> f64 {
        let n = self.len() as f64;
        let df = df as f64;
        libm::log((n - df + 0.5) / (df + 0.5) + 1.0)
    }

    /// Scores every chunk sharing a term with the query.
    ///
    /// Each distinct query term contributes
    /// `idf · tf·(k1+1) / (tf + k1·(1 − b + b·|d|/avgdl))`. Results are sorted by
    /// score descending, then chunk id ascending; chunks scoring zero are left out.
    pub fn search(&self, query: &str, top_k: usize) -> Result<Vec<ScoredChunk>, IndexError> {
        if top_k == 0 {
            return Err(IndexError::InvalidTopK);
        }
        let Bm25Params { k1, b } = self.params;
        let mut query_terms = terms(query);
        query_terms.sort_unstable();
        query_terms.dedup();
        let mut scores = vec![0.0f64; self.len()];
        for term in &query_terms {
            let postings = self.postings(term);
            if postings.is_empty() {
                continue;
            }
            let idf = self.idf(postings.len());
            for p in postings {
                let tf = f64::from(p.tf);
                let dl = f64::from(self.doc_lengths[p.doc as usize]);
                let norm = 1.0 - b + b * dl / self.avg_doc_length;
                scores[p.doc as usize] += idf * tf * (k1 + 1.0) / (tf + k1 * norm);
            }
        }
        let hits = scores
            .into_iter()
            .enumerate()
            .filter(|&(_, s)| s > 0.0)
            .map(|(i, s)| (self.chunk_ids[i].clone(), s))
            .collect();
        Ok(rank_results(hits, top_k, Source::Bm25))
    }

    /// Checks the structural invariants, for use after deserialization.
    pub fn validate(&self) -> Result<(), IndexError> {
        self.params.validate()?;
        if self.chunk_ids.is_empty() {
            return Err(IndexError::EmptyCorpus);
        }
        if self.chunk_ids.len() != self.doc_lengths.len() {
            return Err(IndexError::Corrupt("chunk ids and lengths differ in count".into()));
        }
        let mut seen = BTreeSet::new();
        for id in &self.chunk_ids {
            if !seen.insert(id.as_str()) {
                return Err(IndexError::DuplicateId(id.clone()));
            }
        }
        let total: u64 = self.doc_lengths.iter().map(|&l| u64::from(l)).sum();
        let mean = total as f64 / self.chunk_ids.len() as f64;
        if (mean - self.avg_doc_length).abs() > 1e-9 * mean.max(1.0) {
            return Err(IndexError::Corrupt("avg_doc_length is not the mean length".into()));
        }
        for (term, list) in &self.postings {
            if list.iter().any(|p| p.doc as usize >= self.chunk_ids.len() || p.tf == 0) {
                return Err(IndexError::Corrupt(format!("bad posting for `{term}`")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn index(docs: &[(&str, &str)]) -> Bm25Index {
        Bm25Index::build_from_texts(docs.iter().copied(), Bm25Params::default()).unwrap()
    }

    #[test]
    fn build_statistics() {
        let one = index(&[("c", "a b c d e")]);
        assert_eq!(one.len(), 1);
        assert_eq!(one.avg_doc_length(), 5.0);
        let two = index(&[("x", "a b c d"), ("y", "a b c d e f")]);
        assert_eq!(two.avg_doc_length(), 5.0);
        let rep = index(&[("x", "word other word")]);
        assert_eq!(rep.postings("word"), &[Posting { doc: 0, tf: 2 }]);
    }

    #[test]
    fn empty_and_duplicate_rejected() {
        let none: [(&str, &str); 0] = [];
        assert_eq!(
            Bm25Index::build_from_texts(none, Bm25Params::default()),
            Err(IndexError::EmptyCorpus)
        );
        assert_eq!(
            Bm25Index::build_from_texts([("a", "x"), ("a", "y")], Bm25Params::default()),
            Err(IndexError::DuplicateId("a".into()))
        );
        assert!(Bm25Params { k1: -1.0, b: 0.5 }.validate().is_err());
        assert!(Bm25Params { k1: 1.0, b: 1.5 }.validate().is_err());
    }

    #[test]
    fn absent_term_gives_nothing() {
        let idx = index(&[("d1", "a b"), ("d2", "c")]);
        assert!(idx.search("zzz", 4).unwrap().is_empty());
        assert_eq!(idx.search("a", 0), Err(IndexError::InvalidTopK));
    }

    #[test]
    fn single_match_is_positive() {
        let idx = index(&[("d1", "only here")]);
        let hits = idx.search("here", 4).unwrap();
        assert_eq!(hits.len(), 1);
        assert!(hits[0].score > 0.0);
        assert_eq!(hits[0].rank, 1);
    }

    /// Straight transcription of the Okapi formula, one document at a time.
    fn oracle(docs: &[&str], query: &str, k1: f64, b: f64) -> Vec<f64> {
        let toks: Vec<Vec<&str>> = docs.iter().map(|d| d.split(' ').collect()).collect();
        let n = docs.len() as f64;
        let avgdl = toks.iter().map(|t| t.len() as f64).sum::<f64>() / n;
        let mut q: Vec<&str> = query.split(' ').collect();
        q.sort();
        q.dedup();
        toks.iter()
            .map(|d| {
                q.iter()
                    .map(|t| {
                        let df = toks.iter().filter(|o| o.contains(t)).count() as f64;
                        let tf = d.iter().filter(|w| *w == t).count() as f64;
                        let idf = ((n - df + 0.5) / (df + 0.5) + 1.0).ln();
                        idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * d.len() as f64 / avgdl))
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn three_chunk_example_matches_oracle() {
        let docs = ["a a b", "a c", "c c"];
        let idx = index(&[("d1", docs[0]), ("d2", docs[1]), ("d3", docs[2])]);
        let hits = idx.search("a", 4).unwrap();
        let want = oracle(&docs, "a", 1.2, 0.75);
        assert_eq!(hits.len(), 2);
        assert_eq!(hits[0].chunk_id, "d1");
        assert_eq!(hits[1].chunk_id, "d2");
        assert!((hits[0].score - want[0]).abs() < 1e-9);
        assert!((hits[1].score - want[1]).abs() < 1e-9);
        assert_eq!(want[2], 0.0);
    }

    #[test]
    fn ties_break_by_id() {
        let idx = index(&[("b", "x y"), ("a", "x y"), ("c", "x y")]);
        let ids: Vec<_> = idx.search("x", 2).unwrap().into_iter().map(|h| h.chunk_id).collect();
        assert_eq!(ids, ["a", "b"]);
    }

    #[test]
    fn extra_occurrence_never_lowers_score() {
        // Both variants have length 4, so only tf changes.
        let base = index(&[("d", "q f1 f2 f3"), ("o", "z z z z")]);
        let more = index(&[("d", "q q f2 f3"), ("o", "z z z z")]);
        let s0 = base.search("q", 1).unwrap()[0].score;
        let s1 = more.search("q", 1).unwrap()[0].score;
        assert!(s1 >= s0);
    }

    #[test]
    fn validate_catches_tampering() {
        let mut idx = index(&[("d", "a b")]);
        assert!(idx.validate().is_ok());
        idx.avg_doc_length = 7.0;
        assert!(matches!(idx.validate(), Err(IndexError::Corrupt(_))));
    }
}
