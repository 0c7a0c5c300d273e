//! Command-line front end.
//!
//! Exit codes: 0 on success, 2 on usage or input errors, 3 when a remote
//! service fails.

use std::ffi::OsString;
use std::fmt::Display;
use std::fs;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use persianrag_core::corpus::{ingest, ChunkStore};
use persianrag_core::embed::{Embedder, EmbedError};
use persianrag_core::eval::{eval_embedding_ranking_with, fit_reference_embedder, EvalError, QAExample};
use persianrag_core::generate::{GenerateError, GeneratorBackend};
use persianrag_core::pipeline::{build_indices, Backends, PipelineError, QaSystem, RagPipeline};
use persianrag_core::retrieve::{Fusion, RerankBackend};
use persianrag_core::textnorm::ZwnjPolicy;
use persianrag_core::tune::{best, ranked, Objective, SearchSpace, TrialStatus, TuneError};
use serde::de::DeserializeOwned;

use crate::config::{ConfiguredBackends, EmbedderConfig, PipelineConfigFile};
use crate::formats::{self, FormatError};
use crate::persist::{IndexBundle, PersistError};
use crate::{par, runner};

pub const CHUNKS_FILE: &str = "chunks.jsonl";
pub const EMBED_RESULTS_FILE: &str = "embed_results.jsonl";
pub const RAG_RESULTS_FILE: &str = "rag_results.jsonl";
pub const TRIALS_FILE: &str = "trials.jsonl";

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_REMOTE: i32 = 3;

fn parse_enum<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "persianrag", version, about = "Retrieval-augmented question answering over Persian text")]
pub struct Cli {
    /// JSON configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for chunk stores, indices and result files.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    #[command(flatten)]
    pub overrides: Overrides,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags that override values of the configuration file.
#[derive(Debug, Default, Args)]
pub struct Overrides {
    #[arg(long, global = true)]
    pub chunk_size: Option<usize>,
    #[arg(long, global = true)]
    pub overlap: Option<usize>,
    #[arg(long, global = true)]
    pub bm25_top_k: Option<usize>,
    #[arg(long, global = true)]
    pub dense_top_k: Option<usize>,
    #[arg(long, global = true)]
    pub join_cap: Option<usize>,
    /// concat_maxnorm or rrf
    #[arg(long, global = true, value_parser = parse_enum::<Fusion>)]
    pub fusion: Option<Fusion>,
    /// identity, lexical_overlap or remote
    #[arg(long, global = true, value_parser = parse_enum::<RerankBackend>)]
    pub reranker: Option<RerankBackend>,
    /// extractive_reference or remote
    #[arg(long, global = true, value_parser = parse_enum::<GeneratorBackend>)]
    pub generator: Option<GeneratorBackend>,
    /// preserve, strip or to_space
    #[arg(long, global = true, value_parser = parse_enum::<ZwnjPolicy>)]
    pub zwnj: Option<ZwnjPolicy>,
    /// Dimension of the reference embedder.
    #[arg(long, global = true)]
    pub embedding_dim: Option<usize>,
    #[arg(long, global = true)]
    pub workers: Option<usize>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut PipelineConfigFile) {
        if let Some(v) = self.chunk_size {
            cfg.chunking.chunk_size_tokens = v;
        }
        if let Some(v) = self.overlap {
            cfg.chunking.overlap_tokens = v;
        }
        if let Some(v) = self.bm25_top_k {
            cfg.hybrid.bm25_top_k = v;
        }
        if let Some(v) = self.dense_top_k {
            cfg.hybrid.dense_top_k = v;
        }
        if let Some(v) = self.join_cap {
            cfg.hybrid.join_cap = v;
        }
        if let Some(v) = self.fusion {
            cfg.hybrid.fusion = v;
        }
        if let Some(v) = self.reranker {
            cfg.reranker.backend = v;
        }
        if let Some(v) = self.generator {
            cfg.generator.backend = v;
        }
        if let Some(v) = self.zwnj {
            cfg.normalization.zwnj_policy = v;
        }
        if let Some(v) = self.embedding_dim {
            if let EmbedderConfig::Reference { dim, .. } = &mut cfg.embedder {
                *dim = v;
            }
        }
        if let Some(v) = self.workers {
            cfg.workers = Some(v);
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Normalize and chunk a JSON Lines corpus into a chunk store.
    Ingest {
        /// Corpus file; defaults to `paths.corpus` of the config.
        corpus: Option<PathBuf>,
    },
    /// Build the BM25 and vector indices for a chunk store.
    Index {
        /// Chunk store; defaults to `<out>/chunks.jsonl`.
        #[arg(long)]
        chunks: Option<PathBuf>,
    },
    /// Answer a question from the built indices.
    Query {
        question: Option<String>,
        /// Read one question per line from standard input.
        #[arg(long)]
        repl: bool,
        /// Print the exact prompt handed to the generator.
        #[arg(long)]
        show_prompt: bool,
    },
    /// Rank-bucket evaluation of the embedder on a QA dataset.
    EvalEmbed {
        dataset: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        k: usize,
    },
    /// End-to-end Wrong/Middle/Correct evaluation on a QA dataset.
    EvalRag { dataset: Option<PathBuf> },
    /// Grid sweep over the hyperparameters of a search space file.
    Sweep {
        space: Option<PathBuf>,
        dataset: Option<PathBuf>,
        /// retrieval_top1_pct or e2e_correct_pct
        #[arg(long, default_value = "e2e_correct_pct", value_parser = parse_enum::<Objective>)]
        objective: Objective,
    },
}

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Remote(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Remote(_) => EXIT_REMOTE,
        }
    }
}

impl Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "error: {m}"),
            CliError::Remote(m) => write!(f, "remote service error: {m}"),
        }
    }
}

fn input(e: impl Display) -> CliError {
    CliError::Input(e.to_string())
}

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        input(e)
    }
}

impl From<PersistError> for CliError {
    fn from(e: PersistError) -> Self {
        input(e)
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        if e.is_remote() {
            CliError::Remote(e.to_string())
        } else {
            input(e)
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        if e.is_remote() {
            CliError::Remote(e.to_string())
        } else {
            input(e)
        }
    }
}

impl From<EmbedError> for CliError {
    fn from(e: EmbedError) -> Self {
        PipelineError::from(e).into()
    }
}

impl From<TuneError> for CliError {
    fn from(e: TuneError) -> Self {
        input(e)
    }
}

fn io_out(e: std::io::Error) -> CliError {
    input(format!("writing output: {e}"))
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, stdin: &mut dyn BufRead, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 { write!(stdout, "{text}") } else { write!(stderr, "{text}") };
            return if code == 0 { EXIT_OK } else { EXIT_INPUT };
        }
    };
    match execute(&cli, stdin, stdout, stderr) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "{e}");
            e.exit_code()
        }
    }
}

struct Context {
    cfg: PipelineConfigFile,
    out: PathBuf,
    workers: usize,
}

impl Context {
    fn backends(&self) -> ConfiguredBackends {
        self.cfg.backends()
    }

    fn dataset(&self, arg: &Option<PathBuf>) -> Result<Vec<QAExample>, CliError> {
        let path = arg
            .as_ref()
            .or(self.cfg.paths.dataset.as_ref())
            .ok_or_else(|| input("no dataset given and `paths.dataset` is not set"))?;
        Ok(formats::load_dataset(path)?)
    }

    fn out_file(&self, name: &str) -> Result<PathBuf, CliError> {
        fs::create_dir_all(&self.out).map_err(|e| input(format!("{}: {e}", self.out.display())))?;
        Ok(self.out.join(name))
    }
}

fn resolve(cli: &Cli) -> Result<Context, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfigFile::load(p).map_err(input)?,
        None => PipelineConfigFile::default(),
    };
    cli.overrides.apply(&mut cfg);
    cfg.validate().map_err(input)?;
    let workers = cfg.workers.unwrap_or_else(par::default_workers);
    Ok(Context { cfg, out: cli.out.clone(), workers })
}

fn execute(cli: &Cli, stdin: &mut dyn BufRead, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let ctx = resolve(cli)?;
    writeln!(stderr, "resolved config:\n{}", ctx.cfg.to_pretty_json()).map_err(io_out)?;
    match &cli.command {
        Command::Ingest { corpus } => cmd_ingest(&ctx, corpus, stdout),
        Command::Index { chunks } => cmd_index(&ctx, chunks, stdout),
        Command::Query { question, repl, show_prompt } => cmd_query(&ctx, question.as_deref(), *repl, *show_prompt, stdin, stdout, stderr),
        Command::EvalEmbed { dataset, k } => cmd_eval_embed(&ctx, dataset, *k, stdout),
        Command::EvalRag { dataset } => cmd_eval_rag(&ctx, dataset, stdout),
        Command::Sweep { space, dataset, objective } => cmd_sweep(&ctx, space, dataset, *objective, stdout),
    }
}

fn cmd_ingest(ctx: &Context, corpus: &Option<PathBuf>, stdout: &mut dyn Write) -> Result<(), CliError> {
    let path = corpus
        .as_ref()
        .or(ctx.cfg.paths.corpus.as_ref())
        .ok_or_else(|| input("no corpus given and `paths.corpus` is not set"))?;
    let raw = formats::read_corpus(path)?;
    let docs = ingest(&raw, &ctx.cfg.normalization).map_err(input)?;
    let store = ChunkStore::build(&docs, &ctx.cfg.chunking).map_err(input)?;
    let dest = ctx.out_file(CHUNKS_FILE)?;
    formats::write_chunk_store(&dest, &store)?;
    writeln!(stdout, "ingested {} documents into {} chunks: {}", docs.len(), store.len(), dest.display()).map_err(io_out)
}

fn cmd_index(ctx: &Context, chunks: &Option<PathBuf>, stdout: &mut dyn Write) -> Result<(), CliError> {
    let path = chunks.clone().unwrap_or_else(|| ctx.out.join(CHUNKS_FILE));
    let store = formats::read_chunk_store(&path)?;
    if store.is_empty() {
        return Err(input(format!("{}: chunk store is empty", path.display())));
    }
    let (embedder, state) = ctx.backends().index_embedder(&store)?;
    let (bm25, vectors) = build_indices(&store, ctx.cfg.bm25, embedder.as_ref())?;
    let bundle = IndexBundle { bm25, vectors, embedder: state };
    fs::create_dir_all(&ctx.out).map_err(io_out)?;
    bundle.save(&ctx.out)?;
    if path != ctx.out.join(CHUNKS_FILE) {
        formats::write_chunk_store(&ctx.out.join(CHUNKS_FILE), &store)?;
    }
    writeln!(
        stdout,
        "indexed {} chunks ({} with vectors, dim {}) into {}",
        store.len(),
        bundle.vectors.len(),
        bundle.vectors.dim(),
        ctx.out.display()
    )
    .map_err(io_out)
}

/// Pipeline over the chunk store and indices saved in `dir`.
pub fn load_pipeline(dir: &Path, cfg: &PipelineConfigFile) -> Result<RagPipeline, CliError> {
    let chunks = dir.join(CHUNKS_FILE);
    if !chunks.is_file() || !IndexBundle::exists(dir) {
        return Err(input(format!("no index in {}; run `ingest` and `index` first", dir.display())));
    }
    let store = formats::read_chunk_store(&chunks)?;
    let bundle = IndexBundle::load(dir)?;
    let backends = cfg.backends();
    let mut settings = cfg.settings();
    settings.bm25 = bundle.bm25.params();
    Ok(RagPipeline {
        settings,
        store,
        bm25: bundle.bm25,
        vectors: bundle.vectors,
        embedder: backends.embedder_for(&bundle.embedder)?,
        scorer: backends.relevance_scorer(),
        generator: backends.generator(),
    })
}

fn answer_one(
    p: &RagPipeline,
    question: &str,
    show_prompt: bool,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    match p.answer(question) {
        Ok(a) => {
            writeln!(stdout, "answer: {}", a.text).map_err(io_out)?;
            writeln!(stdout, "retrieved:").map_err(io_out)?;
            for s in &a.retrieved {
                writeln!(stdout, "  {}. {}  {:.6}", s.rank, s.chunk_id, s.score).map_err(io_out)?;
            }
            if show_prompt {
                write!(stdout, "prompt:\n{}", a.prompt).map_err(io_out)?;
            }
            Ok(())
        }
        Err(PipelineError::Generate(GenerateError::NoRetrievedContent)) => {
            writeln!(stdout, "answer: (no retrieved content)\nretrieved:").map_err(io_out)
        }
        Err(e) => Err(e.into()),
    }
}

fn cmd_query(
    ctx: &Context,
    question: Option<&str>,
    repl: bool,
    show_prompt: bool,
    stdin: &mut dyn BufRead,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    if !repl && question.is_none() {
        return Err(input("give a question or use --repl"));
    }
    let p = load_pipeline(&ctx.out, &ctx.cfg)?;
    if !repl {
        return answer_one(&p, question.unwrap_or_default(), show_prompt, stdout);
    }
    let mut last_err = None;
    for line in stdin.lines() {
        let line = line.map_err(|e| input(format!("reading standard input: {e}")))?;
        if line.trim().is_empty() {
            continue;
        }
        if let Err(e) = answer_one(&p, &line, show_prompt, stdout) {
            writeln!(stderr, "{e}").map_err(io_out)?;
            last_err = Some(e);
        }
        stdout.flush().map_err(io_out)?;
    }
    last_err.map_or(Ok(()), Err)
}

fn cmd_eval_embed(ctx: &Context, dataset: &Option<PathBuf>, k: usize, stdout: &mut dyn Write) -> Result<(), CliError> {
    let ds = ctx.dataset(dataset)?;
    let embedder: Box<dyn Embedder> = match ctx.cfg.embedder {
        EmbedderConfig::Reference { dim, seed } => {
            if ds.is_empty() {
                return Err(input("dataset is empty"));
            }
            Box::new(fit_reference_embedder(&ds, &ctx.cfg.normalization, dim, seed)?)
        }
        EmbedderConfig::Remote { .. } => ctx.backends().embedder(&ChunkStore::default(), None)?,
    };
    let e = eval_embedding_ranking_with(&ds, &ctx.cfg.normalization, embedder.as_ref(), k)?;
    let dest = ctx.out_file(EMBED_RESULTS_FILE)?;
    formats::write_jsonl(&dest, &e.records)?;
    write!(stdout, "{}", e.report).map_err(io_out)?;
    writeln!(stdout, "results: {}", dest.display()).map_err(io_out)
}

fn cmd_eval_rag(ctx: &Context, dataset: &Option<PathBuf>, stdout: &mut dyn Write) -> Result<(), CliError> {
    let ds = ctx.dataset(dataset)?;
    let e = runner::eval_end_to_end_parallel(&ds, &ctx.cfg.settings(), &ctx.backends(), None, ctx.workers)?;
    let dest = ctx.out_file(RAG_RESULTS_FILE)?;
    formats::write_jsonl(&dest, &e.records)?;
    write!(stdout, "{}", e.report).map_err(io_out)?;
    writeln!(stdout, "retrieval top-1: {:.1}%", e.retrieval_top1_pct()).map_err(io_out)?;
    writeln!(stdout, "results: {}", dest.display()).map_err(io_out)
}

fn cmd_sweep(
    ctx: &Context,
    space: &Option<PathBuf>,
    dataset: &Option<PathBuf>,
    objective: Objective,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let path = space
        .as_ref()
        .or(ctx.cfg.paths.search_space.as_ref())
        .ok_or_else(|| input("no search space given and `paths.search_space` is not set"))?;
    let src = fs::read_to_string(path).map_err(|e| input(format!("{}: {e}", path.display())))?;
    let space: SearchSpace = serde_json::from_str(&src).map_err(|e| input(format!("{}: {e}", path.display())))?;
    if !space.embedding_dim.is_empty() && matches!(ctx.cfg.embedder, EmbedderConfig::Remote { .. }) {
        return Err(input("embedding_dim can only be swept with the reference embedder"));
    }
    let ds = ctx.dataset(dataset)?;
    let trials = runner::sweep_parallel(&space, &ds, &ctx.cfg.settings(), &ctx.backends(), objective, ctx.workers)?;
    let dest = ctx.out_file(TRIALS_FILE)?;
    formats::write_jsonl(&dest, &trials)?;
    writeln!(
        stdout,
        "{:>4} {:>5} {:>9} {:>8} {:>9}  config",
        "rank", "trial", objective.name(), "status", "ms"
    )
    .map_err(io_out)?;
    for (r, t) in ranked(&trials).into_iter().enumerate() {
        let value = t.value.map_or_else(|| "-".to_string(), |v| format!("{v:.2}"));
        let status = match t.status {
            TrialStatus::Ok => "ok",
            TrialStatus::Failed => "failed",
            TrialStatus::Skipped => "skipped",
        };
        writeln!(
            stdout,
            "{:>4} {:>5} {:>9} {:>8} {:>9}  {}",
            r + 1,
            t.index,
            value,
            status,
            t.duration.as_millis(),
            serde_json::to_string(&t.config).unwrap_or_default()
        )
        .map_err(io_out)?;
    }
    match best(&trials) {
        Some(b) => writeln!(stdout, "best: trial {} {} = {:.4}", b.index, objective.name(), b.value.unwrap_or_default()),
        None => writeln!(stdout, "best: none, every trial failed or was skipped"),
    }
    .map_err(io_out)?;
    writeln!(stdout, "trial log: {}", dest.display()).map_err(io_out)
}
