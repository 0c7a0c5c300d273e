//! Parallel evaluation and sweeps over frozen indices.

use std::time::{Duration, Instant};

use persianrag_core::eval::{paragraph_documents, report_of, run_example, EndToEndEvaluation, EvalError, QAExample};
use persianrag_core::pipeline::{Backends, PipelineSettings, QaSystem, RagPipeline};
use persianrag_core::tune::{enumerate, evaluate_trial, skipped, trial_result, Objective, SearchSpace, TrialResult, TuneError};

use crate::par;

/// Grades every example against `system` with up to `workers` threads.
/// Per-question failures are logged and graded wrong.
pub fn run_end_to_end_parallel(
    dataset: &[QAExample],
    system: &dyn QaSystem,
    gold_doc_ids: &[String],
    workers: usize,
) -> Result<EndToEndEvaluation, EvalError> {
    let pairs: Vec<(&QAExample, &String)> = dataset.iter().zip(gold_doc_ids).collect();
    let records = par::map(&pairs, workers, |_, (ex, gold)| run_example(ex, system, gold))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    for (i, r) in records.iter().enumerate() {
        if let Some(e) = &r.error {
            log::warn!("example {}: {e}; graded wrong", i + 1);
        }
    }
    Ok(EndToEndEvaluation { report: report_of(&records), records })
}

/// Builds a pipeline over the dataset's paragraphs and grades it in parallel.
pub fn eval_end_to_end_parallel(
    dataset: &[QAExample],
    settings: &PipelineSettings,
    backends: &dyn Backends,
    embedding_dim: Option<usize>,
    workers: usize,
) -> Result<EndToEndEvaluation, EvalError> {
    if dataset.is_empty() {
        return Ok(EndToEndEvaluation { report: Default::default(), records: Vec::new() });
    }
    let (docs, gold) = paragraph_documents(dataset, &settings.normalization)?;
    let pipeline = RagPipeline::build(&docs, settings, backends, embedding_dim)?;
    run_end_to_end_parallel(dataset, &pipeline, &gold, workers)
}

/// Grid sweep with up to `workers` trials in flight. Results are returned in
/// enumeration order regardless of completion order.
pub fn sweep_parallel(
    space: &SearchSpace,
    dataset: &[QAExample],
    base: &PipelineSettings,
    backends: &dyn Backends,
    objective: Objective,
    workers: usize,
) -> Result<Vec<TrialResult>, TuneError> {
    space.validate()?;
    if dataset.is_empty() {
        return Err(TuneError::EmptyDataset);
    }
    let configs = enumerate(space);
    Ok(par::map(&configs, workers, |i, cfg| match cfg.invalid_reason(base) {
        Some(reason) => {
            log::info!("trial {i}: skipped, {reason}");
            skipped(i, *cfg, objective, reason)
        }
        None => {
            let start = Instant::now();
            let outcome = evaluate_trial(dataset, base, backends, cfg, objective).map_err(|e| e.to_string());
            let elapsed: Duration = start.elapsed();
            if let Err(e) = &outcome {
                log::warn!("trial {i}: failed, {e}");
            }
            trial_result(i, *cfg, objective, outcome, elapsed)
        }
    }))
}
