//! Trace files: one JSON document per session.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::types::SessionTrace;

#[derive(Debug, thiserror::Error)]
pub enum TraceError {
    #[error("trace I/O on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("trace {} is not valid: {source}", path.display())]
    Parse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

/// `<UTC timestamp>-<8 hex chars>.json`
pub fn trace_file_name() -> String {
    let ts = chrono::Utc::now().format("%Y%m%dT%H%M%S%.3fZ");
    let id = uuid::Uuid::new_v4().simple().to_string();
    format!("{ts}-{}.json", &id[..8])
}

pub fn write_trace(dir: &Path, trace: &SessionTrace) -> Result<PathBuf, TraceError> {
    write_trace_as(dir, &trace_file_name(), trace)
}

pub fn write_trace_as(dir: &Path, file_name: &str, trace: &SessionTrace) -> Result<PathBuf, TraceError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| TraceError::Io { path, source }
    };
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    let path = dir.join(file_name);
    let json = serde_json::to_string_pretty(trace).expect("trace serializes");
    std::fs::write(&path, json).map_err(io(&path))?;
    Ok(path)
}

pub fn read_trace(path: &Path) -> Result<SessionTrace, TraceError> {
    let text = std::fs::read_to_string(path).map_err(|source| TraceError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| TraceError::Parse {
        path: path.to_path_buf(),
        source,
    })
}

pub const QUESTION_DISPLAY_CHARS: usize = 120;

fn truncate(text: &str, limit: usize) -> String {
    if text.chars().count() <= limit {
        return text.to_string();
    }
    let mut out: String = text.chars().take(limit).collect();
    out.push_str("...");
    out
}

/// Round-by-round view for terminals.
pub fn render_trace(trace: &SessionTrace) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "Query: {}", trace.query);
    for s in &trace.summaries {
        let _ = writeln!(out, "Input {} ({}): {}", s.input_id, s.modality, s.summary);
    }
    for r in &trace.rounds {
        let _ = writeln!(out, "\nRound {}", r.round_index);
        let _ = writeln!(out, "  User intent: {}", r.reasoning.user_intent);
        for qa in &r.results {
            let _ = writeln!(out, "  [{}] Q: {}", qa.agent_name, truncate(&qa.question, QUESTION_DISPLAY_CHARS));
            let _ = writeln!(out, "      A: {}", qa.answer);
        }
        let _ = writeln!(out, "  Decision: {}", r.decision.final_answer);
        let _ = writeln!(out, "  Is final: {}", r.decision.is_final);
        let _ = writeln!(out, "  Suggestions:");
        for s in &r.decision.suggestions_for_next_round {
            let _ = writeln!(out, "    - {s}");
        }
    }
    let _ = writeln!(
        out,
        "\nFinal answer (round {}{}): {}",
        trace.exit_round,
        if trace.forced_exit { ", loop cap reached" } else { "" },
        trace.final_answer
    );
    if let Some(err) = &trace.error {
        let _ = writeln!(out, "Stopped on error: {err}");
    }
    let _ = writeln!(out, "Total latency: {:.3}s", trace.total_latency_s);
    out
}
