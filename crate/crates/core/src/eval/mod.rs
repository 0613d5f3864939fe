//! Multiple-choice benchmark runs: one master-loop session per item, scored
//! on the option letter in the final answer.

mod answer;
mod dataset;
mod report;

use std::path::PathBuf;
use std::time::Instant;

use tracing::{info, warn};

use crate::orchestrator::Orchestrator;
use crate::par::{map_ordered, Schedule};
use crate::pool::ModelPool;
use crate::prompting::{PromptError, PromptSet};
use crate::trace::{write_trace, TraceError};
use crate::types::{LoopConfig, SessionTrace};

pub use answer::extract_answer_letter;
pub use dataset::{load_dataset, parse_dataset, BenchmarkItem, DatasetError};
pub use report::{emit_report, exit_bucket, ItemResult, Report, ReportFormat, LAST_EXIT_BUCKET};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("benchmark needs at least one item")]
    Empty,
    #[error("parallelism must be at least 1")]
    Parallelism,
    #[error("pool has no master agent")]
    NoMaster,
    #[error("invalid loop config: {0}")]
    Config(String),
    #[error(transparent)]
    Trace(#[from] TraceError),
}

#[derive(Debug, Clone, Default)]
pub struct BenchOptions {
    pub parallelism: usize,
    /// When set, every session trace is written here.
    pub trace_dir: Option<PathBuf>,
    pub prompts: Option<PromptSet>,
}

impl BenchOptions {
    pub fn with_parallelism(parallelism: usize) -> Self {
        Self {
            parallelism,
            ..Self::default()
        }
    }
}

fn count_agent_errors(trace: &SessionTrace) -> usize {
    trace
        .rounds
        .iter()
        .flat_map(|r| &r.results)
        .filter(|qa| qa.is_error())
        .count()
}

/// Runs every item and aggregates the report. Dataset and setup problems
/// abort before the first session; a failing session only marks its item
/// incorrect.
pub fn run_benchmark(
    items: &[BenchmarkItem],
    pool: &ModelPool,
    config: &LoopConfig,
    options: &BenchOptions,
) -> Result<Report, BenchError> {
    if items.is_empty() {
        return Err(BenchError::Empty);
    }
    if options.parallelism < 1 {
        return Err(BenchError::Parallelism);
    }
    config
        .validate()
        .map_err(|e| BenchError::Config(e.to_string()))?;
    if pool.master().is_none() {
        return Err(BenchError::NoMaster);
    }
    for item in items {
        item.validate().map_err(|reason| {
            BenchError::Dataset(DatasetError::InvalidItem {
                item_id: item.item_id.clone(),
                reason,
            })
        })?;
    }

    let prompts = options.prompts.clone().unwrap_or_default();
    let orchestrator = Orchestrator::new(pool, config.clone()).with_prompts(prompts.clone());
    let schedule = Schedule::with_workers(options.parallelism);
    info!(items = items.len(), workers = schedule.workers(), "benchmark started");

    let outcomes = map_ordered(items.iter().collect(), schedule, |item| {
        run_item(item, &orchestrator, &prompts, options.trace_dir.as_deref())
    });
    let per_item = outcomes.into_iter().collect::<Result<Vec<_>, _>>()?;
    if let Some(dir) = &options.trace_dir {
        write_results(dir, &per_item)?;
    }
    Ok(Report::from_items(per_item))
}

/// Per-item rows as `results.jsonl` next to the traces they point at.
fn write_results(dir: &std::path::Path, rows: &[ItemResult]) -> Result<(), TraceError> {
    let path = dir.join("results.jsonl");
    let mut text = String::new();
    for row in rows {
        text.push_str(&serde_json::to_string(row).expect("row serializes"));
        text.push('\n');
    }
    std::fs::create_dir_all(dir)
        .and_then(|_| std::fs::write(&path, text))
        .map_err(|source| TraceError::Io { path, source })
}

fn run_item(
    item: &BenchmarkItem,
    orchestrator: &Orchestrator<'_>,
    prompts: &PromptSet,
    trace_dir: Option<&std::path::Path>,
) -> Result<ItemResult, TraceError> {
    let started = Instant::now();
    let query = prompts
        .render_benchmark(&item.question, &item.choices)
        .map_err(|e: PromptError| e.to_string());
    let (trace, error, exit_round) = match query {
        Err(e) => (None, Some(e), 1),
        Ok(query) => match orchestrator.run_session(&query, &item.attachments) {
            Ok(trace) => {
                let exit = trace.exit_round;
                (Some(trace), None, exit)
            }
            Err(failure) => {
                warn!(item = %item.item_id, error = %failure.error, "session failed");
                let round = failure.error.round.max(1);
                (Some(*failure.trace), Some(failure.error.to_string()), round)
            }
        },
    };
    let latency_s = started.elapsed().as_secs_f64();

    let predicted = match (&trace, &error) {
        (Some(t), None) => extract_answer_letter(&t.final_answer, item.choices.len()),
        _ => None,
    };
    let trace_file = match (&trace, trace_dir) {
        (Some(t), Some(dir)) => Some(
            write_trace(dir, t)?
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default(),
        ),
        _ => None,
    };
    Ok(ItemResult {
        item_id: item.item_id.clone(),
        predicted,
        correct: predicted == Some(item.answer_key),
        exit_round,
        latency_s,
        agent_errors: trace.as_ref().map(count_agent_errors).unwrap_or(0),
        error,
        trace_file,
    })
}
