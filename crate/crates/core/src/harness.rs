//! Experiment orchestration: for every case collect the gold (base prompt)
//! and injected outputs, score the pair at the token level (between
//! extracted labels) and the sequence level (between full output texts),
//! stream everything into the run log, and host the interactive TRUE/FALSE
//! annotation flow.

use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::client::{classify, ModelEndpointConfig, ModelOutput, Phase};
use crate::dataset::{CaseCollection, InjectionCase};
use crate::distance::{distance_vector, DistanceResult, EditCostScheme};
use crate::matching::embedding::{EmbeddingProvider, EmbeddingSpec};
use crate::matching::{bert_score, overlap_f1, sentence_bleu, BertScoreResult, BleuConfig, MatchError};
use crate::runlog::{ErrorRecord, Record, ResultRecord, RunHeader, RunLog, RunLogWriter, LogError, RUNLOG_SCHEMA};
use crate::tokenizer::{tokenize, TokenSeq};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Log(#[from] LogError),
    #[error("run produced no records")]
    NoRecords,
}

/// All metric values for one pair at one level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricVector {
    pub distances: DistanceResult,
    pub bleu1: f64,
    pub bleu4: f64,
    /// Absent when either side tokenizes to nothing.
    pub bertscore: Option<BertScoreResult>,
    pub overlap_f1: f64,
}

/// One human TRUE/FALSE judgment: `changed` means the classification
/// differs post-injection with changed semantic meaning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub case_id: String,
    pub changed: bool,
    pub annotator: String,
    pub note: Option<String>,
    pub timestamp_unix: u64,
}

/// A case with its outputs, metrics at both levels, and any annotation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseResult {
    pub case: InjectionCase,
    pub gold: ModelOutput,
    pub injected: ModelOutput,
    pub token_metrics: MetricVector,
    pub sequence_metrics: MetricVector,
    pub annotation: Option<Annotation>,
}

/// BLEU folded for degenerate sides: equal empties are a perfect match,
/// a single empty side a complete mismatch.
fn folded_bleu(candidate: &TokenSeq, reference: &TokenSeq, config: &BleuConfig) -> f64 {
    if reference.is_empty() {
        return if candidate.is_empty() { 1.0 } else { 0.0 };
    }
    sentence_bleu(candidate, reference, config).expect("reference checked non-empty")
}

fn metric_vector(
    candidate_text: &str,
    reference_text: &str,
    embedder: &dyn EmbeddingProvider,
) -> Result<MetricVector, MatchError> {
    let candidate = tokenize(candidate_text);
    let reference = tokenize(reference_text);
    let distances = distance_vector(&reference, &candidate, &EditCostScheme::unit());
    let bleu1 = folded_bleu(&candidate, &reference, &BleuConfig::bleu1());
    let bleu4 = folded_bleu(&candidate, &reference, &BleuConfig::bleu4());
    let bertscore = if !candidate.is_empty() && !reference.is_empty() {
        Some(bert_score(&candidate, &reference, embedder)?)
    } else {
        None
    };
    let overlap = if candidate.is_empty() && reference.is_empty() {
        1.0
    } else {
        overlap_f1(&candidate, &reference).expect("not both empty")
    };
    Ok(MetricVector {
        distances,
        bleu1,
        bleu4,
        bertscore,
        overlap_f1: overlap,
    })
}

/// Scores one gold/injected pair: token level between extracted labels,
/// sequence level between full raw texts. The injected output is the
/// candidate, the gold output the reference. Pure: recomputing from a
/// persisted log reproduces the stored values bit for bit.
pub fn score_pair(
    gold: &ModelOutput,
    injected: &ModelOutput,
    embedder: &dyn EmbeddingProvider,
) -> Result<(MetricVector, MetricVector), MatchError> {
    let token = metric_vector(&injected.label, &gold.label, embedder)?;
    let sequence = metric_vector(&injected.raw_text, &gold.raw_text, embedder)?;
    Ok((token, sequence))
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub repetitions: u32,
    pub max_in_flight: usize,
    pub seed: u64,
    pub threshold: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            repetitions: 1,
            max_in_flight: 4,
            seed: 0,
            threshold: 0.5,
        }
    }
}

/// Results and embedded per-case errors from one run.
#[derive(Debug)]
pub struct RunOutcome {
    pub results: Vec<CaseResult>,
    pub errors: Vec<ErrorRecord>,
}

fn now_unix() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

enum JobOutput {
    Result(Box<ResultRecord>),
    Error(ErrorRecord),
}

fn run_job(
    case: &InjectionCase,
    rep: u32,
    endpoint: &ModelEndpointConfig,
    embedder: &dyn EmbeddingProvider,
) -> JobOutput {
    let error = |phase: Option<Phase>, message: String| {
        JobOutput::Error(ErrorRecord {
            rep,
            case_id: case.id.clone(),
            phase,
            message,
        })
    };
    let gold = match classify(&case.base_prompt, endpoint) {
        Ok(output) => output.in_context(&case.id, Phase::Gold),
        Err(e) => return error(Some(Phase::Gold), e.to_string()),
    };
    let injected = match classify(&case.injected_prompt, endpoint) {
        Ok(output) => output.in_context(&case.id, Phase::Injected),
        Err(e) => return error(Some(Phase::Injected), e.to_string()),
    };
    match score_pair(&gold, &injected, embedder) {
        Ok((token_metrics, sequence_metrics)) => JobOutput::Result(Box::new(ResultRecord {
            rep,
            case: case.clone(),
            gold,
            injected,
            token_metrics,
            sequence_metrics,
        })),
        Err(e) => error(None, format!("scoring failed: {e}")),
    }
}

/// Runs every case `repetitions` times against the endpoint, in case order.
/// The gold prompt is always sent before the injected prompt of the same
/// case; per-case failures become error records and never abort the run.
/// Records are appended to `out` in (case, repetition) order regardless of
/// worker interleaving.
pub fn run_experiment(
    cases: &CaseCollection,
    endpoint: &ModelEndpointConfig,
    embedding: &EmbeddingSpec,
    options: &RunOptions,
    out: &Path,
) -> Result<RunOutcome, HarnessError> {
    let header = RunHeader {
        schema: RUNLOG_SCHEMA.to_string(),
        model: endpoint.name.clone(),
        endpoint_kind: endpoint.kind.to_string(),
        cases: cases.name.clone(),
        repetitions: options.repetitions,
        seed: options.seed,
        threshold: options.threshold,
        embedding: embedding.clone(),
        created_unix: now_unix(),
    };
    let mut writer = RunLogWriter::create(out, &header)?;
    let embedder = embedding.build();

    let jobs: Vec<(usize, u32)> = (0..cases.len())
        .flat_map(|case_idx| (0..options.repetitions).map(move |rep| (case_idx, rep)))
        .collect();
    let workers = options.max_in_flight.max(1).min(jobs.len().max(1));

    let mut outputs: Vec<Option<JobOutput>> = Vec::with_capacity(jobs.len());
    outputs.resize_with(jobs.len(), || None);
    if workers <= 1 {
        for (slot, &(case_idx, rep)) in jobs.iter().enumerate() {
            outputs[slot] = Some(run_job(&cases.cases()[case_idx], rep, endpoint, embedder.as_ref()));
        }
    } else {
        let next_job = AtomicUsize::new(0);
        let (tx, rx) = mpsc::channel::<(usize, JobOutput)>();
        std::thread::scope(|scope| {
            for _ in 0..workers {
                let tx = tx.clone();
                let next_job = &next_job;
                let jobs = &jobs;
                let embedder = embedder.as_ref();
                scope.spawn(move || loop {
                    let slot = next_job.fetch_add(1, Ordering::Relaxed);
                    if slot >= jobs.len() {
                        break;
                    }
                    let (case_idx, rep) = jobs[slot];
                    let output = run_job(&cases.cases()[case_idx], rep, endpoint, embedder);
                    if tx.send((slot, output)).is_err() {
                        break;
                    }
                });
            }
            drop(tx);
            for (slot, output) in rx {
                outputs[slot] = Some(output);
            }
        });
    }

    let mut outcome = RunOutcome {
        results: Vec::new(),
        errors: Vec::new(),
    };
    for output in outputs.into_iter().flatten() {
        match output {
            JobOutput::Result(record) => {
                writer.append_record(&Record::Result((*record).clone()))?;
                outcome.results.push(CaseResult {
                    case: record.case,
                    gold: record.gold,
                    injected: record.injected,
                    token_metrics: record.token_metrics,
                    sequence_metrics: record.sequence_metrics,
                    annotation: None,
                });
            }
            JobOutput::Error(record) => {
                writer.append_record(&Record::Error(record.clone()))?;
                outcome.errors.push(record);
            }
        }
    }
    Ok(outcome)
}

/// What the annotation session did.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotateSummary {
    pub presented: usize,
    pub annotated: usize,
    pub skipped: usize,
    pub quit_early: bool,
}

/// Interactive TRUE/FALSE annotation over a run log. Presents every case
/// not yet annotated by `annotator` (resume-friendly), accepts
/// `t/true`, `f/false`, `s/skip`, `q/quit`, re-prompts on anything else,
/// and appends each judgment immediately so an aborted session loses
/// nothing.
pub fn annotate_run(
    log_path: &Path,
    annotator: &str,
    mut input: impl BufRead,
    mut output: impl Write,
) -> std::io::Result<AnnotateSummary> {
    let log = RunLog::load(log_path).map_err(std::io::Error::other)?;
    let already: std::collections::BTreeSet<String> = log
        .annotations
        .iter()
        .filter(|a| a.annotator == annotator)
        .map(|a| a.case_id.clone())
        .collect();

    // One entry per case id, first occurrence wins (repetitions share it).
    let mut pending: Vec<&crate::runlog::ResultRecord> = Vec::new();
    for record in &log.results {
        if already.contains(&record.case.id) {
            continue;
        }
        if pending.iter().any(|r| r.case.id == record.case.id) {
            continue;
        }
        pending.push(record);
    }

    let mut summary = AnnotateSummary {
        presented: 0,
        annotated: 0,
        skipped: 0,
        quit_early: false,
    };
    if pending.is_empty() {
        writeln!(output, "nothing to annotate for '{annotator}'")?;
        return Ok(summary);
    }
    let mut appender = RunLogWriter::append(log_path).map_err(std::io::Error::other)?;
    let total = pending.len();
    for (idx, record) in pending.iter().enumerate() {
        summary.presented += 1;
        writeln!(output)?;
        writeln!(output, "[{}/{}] case {}", idx + 1, total, record.case.id)?;
        writeln!(output, "  base prompt : {}", record.case.base_prompt)?;
        writeln!(output, "  distraction : {}", record.case.distraction)?;
        writeln!(output, "  gold label  : {}", record.gold.label)?;
        writeln!(output, "  injected    : {}", record.injected.label)?;
        let changed = loop {
            write!(output, "changed semantics? [t]rue / [f]alse / [s]kip / [q]uit: ")?;
            output.flush()?;
            let mut line = String::new();
            if input.read_line(&mut line)? == 0 {
                summary.quit_early = true;
                return Ok(summary);
            }
            match line.trim().to_lowercase().as_str() {
                "t" | "true" => break Some(true),
                "f" | "false" => break Some(false),
                "s" | "skip" => break None,
                "q" | "quit" => {
                    summary.quit_early = true;
                    return Ok(summary);
                }
                other => writeln!(output, "unrecognized answer '{other}'")?,
            }
        };
        let Some(changed) = changed else {
            summary.skipped += 1;
            continue;
        };
        write!(output, "note (enter to skip): ")?;
        output.flush()?;
        let mut note = String::new();
        input.read_line(&mut note)?;
        let note = note.trim();
        let annotation = Annotation {
            case_id: record.case.id.clone(),
            changed,
            annotator: annotator.to_string(),
            note: (!note.is_empty()).then(|| note.to_string()),
            timestamp_unix: now_unix(),
        };
        appender
            .append_record(&Record::Annotation(annotation))
            .map_err(std::io::Error::other)?;
        summary.annotated += 1;
    }
    writeln!(
        output,
        "\nannotated {} case(s), skipped {}",
        summary.annotated, summary.skipped
    )?;
    Ok(summary)
}
