//! Evaluation protocols: rank buckets for embedders and Wrong/Middle/Correct
//! grading for end-to-end answers.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::{ingest, CorpusError, Document, RawDocument};
use crate::embed::{EmbedError, Embedder, HashedTfIdf, IdfTable};
use crate::index::{IndexError, VectorIndex};
use crate::metrics::token_f1;
use crate::pipeline::{Backends, PipelineError, PipelineSettings, QaSystem, RagPipeline};
use crate::textnorm::{normalize_text, terms, NormalizationConfig, ZwnjPolicy};

/// Token F1 at or above which a non-matching answer is graded `middle`.
pub const MIDDLE_F1_THRESHOLD: f64 = 0.5;

/// One-line statement of the grading rule, printed with every grade report.
pub const GRADING_RULE: &str = "correct = normalized exact match or gold is a substring of the prediction; \
middle = token F1 >= 0.5 (stand-in threshold); wrong = otherwise";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QAExample {
    pub paragraph: String,
    pub question: String,
    pub gold_answer: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub question_type: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_file: Option<String>,
}

impl QAExample {
    pub fn new(paragraph: impl Into<String>, question: impl Into<String>, gold_answer: impl Into<String>) -> Self {
        Self {
            paragraph: paragraph.into(),
            question: question.into(),
            gold_answer: gold_answer.into(),
            question_type: None,
            source_file: None,
        }
    }

    /// Name of the first required field that is blank.
    pub fn validate(&self) -> Result<(), EvalError> {
        for (field, value) in [
            ("paragraph", &self.paragraph),
            ("question", &self.question),
            ("gold_answer", &self.gold_answer),
        ] {
            if value.trim().is_empty() {
                return Err(EvalError::EmptyField(field));
            }
        }
        Ok(())
    }

    /// Copy with paragraph, question and gold answer normalized.
    pub fn normalized(&self, cfg: &NormalizationConfig) -> Self {
        Self {
            paragraph: normalize_text(&self.paragraph, cfg),
            question: normalize_text(&self.question, cfg),
            gold_answer: normalize_text(&self.gold_answer, cfg),
            question_type: self.question_type.clone(),
            source_file: self.source_file.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("required field `{0}` is empty")]
    EmptyField(&'static str),
    #[error("k must be at least 1")]
    InvalidK,
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

impl EvalError {
    pub fn is_remote(&self) -> bool {
        match self {
            EvalError::Embed(EmbedError::RemoteService(_)) | EvalError::Index(IndexError::Embed(EmbedError::RemoteService(_))) => true,
            EvalError::Pipeline(p) => p.is_remote(),
            _ => false,
        }
    }
}

fn pct(count: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        100.0 * count as f64 / total as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bucket {
    Top1,
    Top2,
    Top3,
    Top4_10,
    Missed,
}

impl Bucket {
    pub const ALL: [Bucket; 5] = [Bucket::Top1, Bucket::Top2, Bucket::Top3, Bucket::Top4_10, Bucket::Missed];

    /// Bucket of a 1-based rank found within the top `k`.
    pub fn of_rank(rank: Option<usize>, k: usize) -> Bucket {
        match rank {
            Some(1) => Bucket::Top1,
            Some(2) => Bucket::Top2,
            Some(3) => Bucket::Top3,
            Some(r) if r >= 4 && r <= k => Bucket::Top4_10,
            _ => Bucket::Missed,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Bucket::Top1 => "Top1",
            Bucket::Top2 => "Top2",
            Bucket::Top3 => "Top3",
            Bucket::Top4_10 => "Top4-10",
            Bucket::Missed => "Missed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RankBucketReport {
    pub total: usize,
    pub top1: usize,
    pub top2: usize,
    pub top3: usize,
    pub top4_10: usize,
    pub missed: usize,
}

impl RankBucketReport {
    pub fn from_ranks<I: IntoIterator<Item = Option<usize>>>(ranks: I, k: usize) -> Self {
        let mut r = Self::default();
        for rank in ranks {
            r.add(Bucket::of_rank(rank, k));
        }
        r
    }

    pub fn add(&mut self, bucket: Bucket) {
        self.total += 1;
        *self.count_mut(bucket) += 1;
    }

    fn count_mut(&mut self, bucket: Bucket) -> &mut usize {
        match bucket {
            Bucket::Top1 => &mut self.top1,
            Bucket::Top2 => &mut self.top2,
            Bucket::Top3 => &mut self.top3,
            Bucket::Top4_10 => &mut self.top4_10,
            Bucket::Missed => &mut self.missed,
        }
    }

    pub fn count(&self, bucket: Bucket) -> usize {
        match bucket {
            Bucket::Top1 => self.top1,
            Bucket::Top2 => self.top2,
            Bucket::Top3 => self.top3,
            Bucket::Top4_10 => self.top4_10,
            Bucket::Missed => self.missed,
        }
    }

    /// Full-precision percentage of `total`.
    pub fn percentage(&self, bucket: Bucket) -> f64 {
        pct(self.count(bucket), self.total)
    }

    pub fn is_partition(&self) -> bool {
        self.top1 + self.top2 + self.top3 + self.top4_10 + self.missed == self.total
    }
}

impl fmt::Display for RankBucketReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:<8}", "Total")?;
        for b in Bucket::ALL {
            write!(f, "{:>16}", b.label())?;
        }
        writeln!(f)?;
        write!(f, "{:<8}", self.total)?;
        for b in Bucket::ALL {
            let cell = format!("{} ({:.1}%)", self.count(b), self.percentage(b));
            write!(f, "{cell:>16}")?;
        }
        writeln!(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradeLabel {
    Wrong,
    Middle,
    Correct,
}

impl GradeLabel {
    pub const ALL: [GradeLabel; 3] = [GradeLabel::Wrong, GradeLabel::Middle, GradeLabel::Correct];

    pub fn label(self) -> &'static str {
        match self {
            GradeLabel::Wrong => "Wrong",
            GradeLabel::Middle => "Middle",
            GradeLabel::Correct => "Correct",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GradeReport {
    pub total: usize,
    pub wrong: usize,
    pub middle: usize,
    pub correct: usize,
}

impl GradeReport {
    pub fn from_labels<I: IntoIterator<Item = GradeLabel>>(labels: I) -> Self {
        let mut r = Self::default();
        for l in labels {
            r.add(l);
        }
        r
    }

    pub fn add(&mut self, label: GradeLabel) {
        self.total += 1;
        match label {
            GradeLabel::Wrong => self.wrong += 1,
            GradeLabel::Middle => self.middle += 1,
            GradeLabel::Correct => self.correct += 1,
        }
    }

    pub fn count(&self, label: GradeLabel) -> usize {
        match label {
            GradeLabel::Wrong => self.wrong,
            GradeLabel::Middle => self.middle,
            GradeLabel::Correct => self.correct,
        }
    }

    pub fn percentage(&self, label: GradeLabel) -> f64 {
        pct(self.count(label), self.total)
    }

    pub fn is_partition(&self) -> bool {
        self.wrong + self.middle + self.correct == self.total
    }
}

impl fmt::Display for GradeReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:<8}", "Total")?;
        for l in GradeLabel::ALL {
            write!(f, "{:>16}", l.label())?;
        }
        writeln!(f)?;
        write!(f, "{:<8}", self.total)?;
        for l in GradeLabel::ALL {
            let cell = format!("{} ({:.1}%)", self.count(l), self.percentage(l));
            write!(f, "{cell:>16}")?;
        }
        writeln!(f)?;
        writeln!(f, "grading: {GRADING_RULE}")
    }
}

/// Grading form of a string: default normalization with half-spaces turned
/// into spaces, lowercased, punctuation dropped, tokens joined by one space.
pub fn normalize_for_grading(text: &str) -> String {
    let cfg = NormalizationConfig { zwnj_policy: ZwnjPolicy::ToSpace, ..NormalizationConfig::default() };
    terms(&normalize_text(text, &cfg)).join(" ")
}

pub fn grade_answer(predicted: &str, gold: &str) -> GradeLabel {
    let p = normalize_for_grading(predicted);
    let g = normalize_for_grading(gold);
    if p == g || (!g.is_empty() && p.contains(g.as_str())) {
        return GradeLabel::Correct;
    }
    let pt: Vec<&str> = p.split(' ').filter(|t| !t.is_empty()).collect();
    let gt: Vec<&str> = g.split(' ').filter(|t| !t.is_empty()).collect();
    if token_f1(&pt, &gt) >= MIDDLE_F1_THRESHOLD {
        GradeLabel::Middle
    } else {
        GradeLabel::Wrong
    }
}

/// One document per unique normalized paragraph, with ids `p0`, `p1`, ...
/// in first-seen order, and the gold document id of every example.
pub fn paragraph_documents(
    dataset: &[QAExample],
    cfg: &NormalizationConfig,
) -> Result<(Vec<Document>, Vec<String>), EvalError> {
    let mut ids: BTreeMap<String, String> = BTreeMap::new();
    let mut raws = Vec::new();
    let mut gold = Vec::with_capacity(dataset.len());
    for ex in dataset {
        ex.validate()?;
        let key = normalize_text(&ex.paragraph, cfg);
        let id = ids
            .entry(key)
            .or_insert_with_key(|key| {
                let id = format!("p{}", raws.len());
                let mut raw = RawDocument::new(id.clone(), key.clone());
                raw.source_file = ex.source_file.clone();
                raws.push(raw);
                id
            })
            .clone();
        gold.push(id);
    }
    Ok((ingest(&raws, cfg)?, gold))
}

/// Hashed TF-IDF embedder whose IDF table is fitted on the unique paragraphs.
pub fn fit_reference_embedder(
    dataset: &[QAExample],
    cfg: &NormalizationConfig,
    dim: usize,
    seed: u64,
) -> Result<HashedTfIdf, EvalError> {
    let (docs, _) = paragraph_documents(dataset, cfg)?;
    let idf = IdfTable::fit(docs.iter().map(|d| d.text.as_str()))?;
    Ok(HashedTfIdf::new(dim, seed)?.with_idf(idf))
}

/// Per-example outcome, one line of a results file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleRecord {
    pub question: String,
    pub gold_answer: String,
    pub predicted: Option<String>,
    pub label: Option<GradeLabel>,
    pub retrieved_ids: Vec<String>,
    /// 1-based rank of the gold paragraph among the retrieved documents.
    pub rank_of_gold: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingEvaluation {
    pub report: RankBucketReport,
    pub records: Vec<ExampleRecord>,
}

/// Embedding-ranking protocol under default normalization.
pub fn eval_embedding_ranking(
    dataset: &[QAExample],
    embedder: &dyn Embedder,
    k: usize,
) -> Result<RankBucketReport, EvalError> {
    Ok(eval_embedding_ranking_with(dataset, &NormalizationConfig::default(), embedder, k)?.report)
}

/// Indexes the unique paragraphs, retrieves the top `k` for each question and
/// buckets the rank of the example's own paragraph. Questions that embed to
/// the zero vector count as missed; paragraphs that do are left out of the index.
pub fn eval_embedding_ranking_with(
    dataset: &[QAExample],
    cfg: &NormalizationConfig,
    embedder: &dyn Embedder,
    k: usize,
) -> Result<EmbeddingEvaluation, EvalError> {
    if k == 0 {
        return Err(EvalError::InvalidK);
    }
    let (docs, gold) = paragraph_documents(dataset, cfg)?;
    let mut index = VectorIndex::new(embedder.dim());
    let texts: Vec<&str> = docs.iter().map(|d| d.text.as_str()).collect();
    let vectors = if texts.is_empty() { Vec::new() } else { embedder.embed_texts(&texts)? };
    for (doc, v) in docs.iter().zip(vectors) {
        if !v.is_zero() {
            index.add(doc.id.clone(), v)?;
        }
    }
    let questions: Vec<String> = dataset.iter().map(|ex| normalize_text(&ex.question, cfg)).collect();
    let qrefs: Vec<&str> = questions.iter().map(String::as_str).collect();
    let qvecs = if qrefs.is_empty() { Vec::new() } else { embedder.embed_texts(&qrefs)? };
    let mut records = Vec::with_capacity(dataset.len());
    let mut report = RankBucketReport::default();
    for ((ex, q), gold_id) in dataset.iter().zip(qvecs).zip(&gold) {
        let hits = if q.is_zero() || index.is_empty() { Vec::new() } else { index.search(&q, k)? };
        let retrieved_ids: Vec<String> = hits.into_iter().map(|h| h.chunk_id).collect();
        let rank = retrieved_ids.iter().position(|id| id == gold_id).map(|p| p + 1);
        report.add(Bucket::of_rank(rank, k));
        records.push(ExampleRecord {
            question: ex.question.clone(),
            gold_answer: ex.gold_answer.clone(),
            predicted: None,
            label: None,
            retrieved_ids,
            rank_of_gold: rank,
            error: None,
        });
    }
    Ok(EmbeddingEvaluation { report, records })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EndToEndEvaluation {
    pub report: GradeReport,
    pub records: Vec<ExampleRecord>,
}

impl EndToEndEvaluation {
    /// Percentage of examples whose first retrieved document is the gold paragraph.
    pub fn retrieval_top1_pct(&self) -> f64 {
        pct(self.records.iter().filter(|r| r.rank_of_gold == Some(1)).count(), self.records.len())
    }

    pub fn correct_pct(&self) -> f64 {
        self.report.percentage(GradeLabel::Correct)
    }
}

/// Builds a pipeline over the dataset's unique paragraphs (one document each)
/// and grades every example.
pub fn eval_end_to_end(
    dataset: &[QAExample],
    settings: &PipelineSettings,
    backends: &dyn Backends,
    embedding_dim: Option<usize>,
) -> Result<EndToEndEvaluation, EvalError> {
    if dataset.is_empty() {
        return Ok(EndToEndEvaluation { report: GradeReport::default(), records: Vec::new() });
    }
    let (docs, gold) = paragraph_documents(dataset, &settings.normalization)?;
    let pipeline = RagPipeline::build(&docs, settings, backends, embedding_dim)?;
    run_end_to_end(dataset, &pipeline, &gold)
}

/// Grades `dataset` against an already built system. `gold_doc_ids[i]` is
/// the document holding example `i`'s paragraph.
pub fn run_end_to_end(
    dataset: &[QAExample],
    system: &dyn QaSystem,
    gold_doc_ids: &[String],
) -> Result<EndToEndEvaluation, EvalError> {
    let mut records = Vec::with_capacity(dataset.len());
    for (ex, gold) in dataset.iter().zip(gold_doc_ids) {
        records.push(run_example(ex, system, gold)?);
    }
    Ok(EndToEndEvaluation { report: report_of(&records), records })
}

/// Aggregates the labels of `records`; unlabeled records count as wrong.
pub fn report_of(records: &[ExampleRecord]) -> GradeReport {
    GradeReport::from_labels(records.iter().map(|r| r.label.unwrap_or(GradeLabel::Wrong)))
}

/// Answers and grades one example. Per-question failures (remote errors,
/// nothing retrieved) become a `wrong` record carrying the error text.
pub fn run_example(ex: &QAExample, system: &dyn QaSystem, gold_doc_id: &str) -> Result<ExampleRecord, EvalError> {
    match system.answer(&ex.question) {
        Ok(answer) => {
            let rank = answer.retrieved_docs.iter().position(|d| d == gold_doc_id).map(|p| p + 1);
            Ok(ExampleRecord {
                question: ex.question.clone(),
                gold_answer: ex.gold_answer.clone(),
                label: Some(grade_answer(&answer.text, &ex.gold_answer)),
                predicted: Some(answer.text),
                retrieved_ids: answer.retrieved.into_iter().map(|s| s.chunk_id).collect(),
                rank_of_gold: rank,
                error: None,
            })
        }
        Err(e) if e.is_per_question() => Ok(ExampleRecord {
            question: ex.question.clone(),
            gold_answer: ex.gold_answer.clone(),
            predicted: None,
            label: Some(GradeLabel::Wrong),
            retrieved_ids: Vec::new(),
            rank_of_gold: None,
            error: Some(e.to_string()),
        }),
        Err(e) => Err(e.into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::GenerateError;
    use crate::pipeline::{Answer, ReferenceBackends};
    use crate::retrieve::{HybridConfig, RerankBackend};
    use alloc::vec;

    #[test]
    fn grading_examples() {
        assert_eq!(grade_answer("تهران", "تهران"), GradeLabel::Correct);
        assert_eq!(grade_answer("پاریس", "تهران"), GradeLabel::Wrong);
        assert_eq!(grade_answer("پایتخت تهران است", "تهران"), GradeLabel::Correct);
        // gold a b c d, predicted a b x: 2·(2/3)(2/4)/((2/3)+(2/4)) = 4/7
        assert_eq!(grade_answer("a b x", "a b c d"), GradeLabel::Middle);
        assert_eq!(grade_answer("a x y", "a b c d"), GradeLabel::Wrong);
    }

    #[test]
    fn grading_ignores_case_punctuation_zwnj_and_space() {
        assert_eq!(grade_answer("  Tehran. ", "tehran"), GradeLabel::Correct);
        assert_eq!(grade_answer("می\u{200C}رود", "می رود"), GradeLabel::Correct);
        assert_eq!(grade_answer("كتاب", "کتاب"), GradeLabel::Correct);
        assert_eq!(normalize_for_grading("  «سلام»، دنیا! "), "سلام دنیا");
    }

    #[test]
    fn bucket_edges() {
        assert_eq!(Bucket::of_rank(Some(1), 10), Bucket::Top1);
        assert_eq!(Bucket::of_rank(Some(4), 10), Bucket::Top4_10);
        assert_eq!(Bucket::of_rank(Some(10), 10), Bucket::Top4_10);
        assert_eq!(Bucket::of_rank(Some(11), 10), Bucket::Missed);
        assert_eq!(Bucket::of_rank(None, 10), Bucket::Missed);
    }

    #[test]
    fn report_748_of_1000() {
        let ranks = (0..1000).map(|i| if i < 748 { Some(1) } else if i < 900 { Some(5) } else { None });
        let r = RankBucketReport::from_ranks(ranks, 10);
        assert_eq!(r.top1, 748);
        assert_eq!(format!("{:.1}", r.percentage(Bucket::Top1)), "74.8");
        assert!(r.is_partition());
        let shown = r.to_string();
        let header = shown.lines().next().unwrap();
        let pos: Vec<usize> = ["Top1", "Top2", "Top3", "Top4-10", "Missed"].iter().map(|h| header.find(h).unwrap()).collect();
        assert!(pos.windows(2).all(|w| w[0] < w[1]));
        assert!(shown.contains("748 (74.8%)"));
    }

    #[test]
    fn empty_reports() {
        let r = RankBucketReport::default();
        assert_eq!(r.percentage(Bucket::Top1), 0.0);
        let g = GradeReport::default();
        assert!(g.is_partition());
        assert!(g.to_string().contains("grading:"));
    }

    #[test]
    fn dedup_paragraphs() {
        let ds = vec![
            QAExample::new("متن يك", "q1", "a"),
            QAExample::new("متن یک", "q2", "b"),
            QAExample::new("دیگر", "q3", "c"),
        ];
        let (docs, gold) = paragraph_documents(&ds, &NormalizationConfig::default()).unwrap();
        assert_eq!(docs.len(), 2);
        assert_eq!(gold, ["p0", "p0", "p1"]);
        assert_eq!(docs[0].text, "متن یک");
    }

    #[test]
    fn blank_fields_rejected() {
        let ds = vec![QAExample::new("p", " ", "a")];
        assert_eq!(paragraph_documents(&ds, &NormalizationConfig::default()), Err(EvalError::EmptyField("question")));
    }

    fn self_similar() -> Vec<QAExample> {
        ["سیب سرخ است", "آسمان آبی است", "برگ سبز است", "شب تاریک است"]
            .iter()
            .map(|p| QAExample::new(*p, *p, *p))
            .collect()
    }

    #[test]
    fn self_similar_is_all_top1() {
        let ds = self_similar();
        let e = fit_reference_embedder(&ds, &NormalizationConfig::default(), 256, 0).unwrap();
        let r = eval_embedding_ranking(&ds, &e, 10).unwrap();
        assert_eq!((r.total, r.top1), (4, 4));
    }

    #[test]
    fn unknown_questions_are_missed() {
        let ds: Vec<_> = self_similar().into_iter().map(|mut ex| {
            ex.question = "xyz".into();
            ex
        }).collect();
        let e = fit_reference_embedder(&ds, &NormalizationConfig::default(), 256, 0).unwrap();
        let r = eval_embedding_ranking(&ds, &e, 10).unwrap();
        assert_eq!(r.missed, 4);
        assert_eq!(eval_embedding_ranking(&ds, &e, 0), Err(EvalError::InvalidK));
    }

    #[test]
    fn end_to_end_on_sentences() {
        let ds = vec![
            QAExample::new("پاریس پایتخت فرانسه است. برج ایفل در پاریس است.", "پایتخت فرانسه کجاست", "پاریس پایتخت فرانسه است"),
            QAExample::new("توکیو پایتخت ژاپن است. کوه فوجی در ژاپن است.", "کوه فوجی کجاست", "کوه فوجی در ژاپن است"),
        ];
        let e = eval_end_to_end(&ds, &PipelineSettings::default(), &ReferenceBackends::default(), None).unwrap();
        assert_eq!(e.report.correct, 2);
        assert_eq!(e.records[0].rank_of_gold, Some(1));
        assert_eq!(e.retrieval_top1_pct(), 100.0);
        let empty = eval_end_to_end(&[], &PipelineSettings::default(), &ReferenceBackends::default(), None).unwrap();
        assert_eq!(empty.report, GradeReport::default());
    }

    struct Nothing;

    impl QaSystem for Nothing {
        fn answer(&self, _: &str) -> Result<Answer, PipelineError> {
            Err(GenerateError::NoRetrievedContent.into())
        }
    }

    struct Down;

    impl QaSystem for Down {
        fn answer(&self, _: &str) -> Result<Answer, PipelineError> {
            Err(EmbedError::RemoteService("503".into()).into())
        }
    }

    #[test]
    fn per_question_failures_are_wrong() {
        let ds = self_similar();
        let gold: Vec<String> = (0..ds.len()).map(|i| format!("p{i}")).collect();
        let r = run_end_to_end(&ds, &Nothing, &gold).unwrap();
        assert_eq!(r.report.wrong, 4);
        let r = run_end_to_end(&ds, &Down, &gold).unwrap();
        assert_eq!(r.report.wrong, 4);
        assert!(r.records[0].error.as_deref().unwrap().contains("503"));
    }

    #[test]
    fn rerank_settings_flow_through() {
        let ds = self_similar();
        let mut s = PipelineSettings::default();
        s.reranker.backend = RerankBackend::LexicalOverlap;
        s.hybrid = HybridConfig { join_cap: 2, ..HybridConfig::default() };
        let e = eval_end_to_end(&ds, &s, &ReferenceBackends::default(), None).unwrap();
        assert_eq!(e.report.correct, 4);
        assert!(e.records.iter().all(|r| r.retrieved_ids.len() <= 2));
    }
}
