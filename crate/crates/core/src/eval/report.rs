//! Aggregate benchmark metrics and their renderings.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

/// Rounds at or beyond this share one exit-rate bucket ("4+").
pub const LAST_EXIT_BUCKET: u32 = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemResult {
    pub item_id: String,
    pub predicted: Option<char>,
    pub correct: bool,
    pub exit_round: u32,
    pub latency_s: f64,
    /// Number of `[AGENT_ERROR]` answers recorded across the session.
    #[serde(default)]
    pub agent_errors: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_file: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub n_items: usize,
    pub accuracy: f64,
    /// Fraction of items per exit round; key 4 collects every round >= 4.
    pub exit_rate: BTreeMap<u32, f64>,
    pub mean_latency_s: f64,
    pub p50_latency_s: f64,
    pub p95_latency_s: f64,
    pub per_item: Vec<ItemResult>,
}

pub fn exit_bucket(round: u32) -> u32 {
    round.clamp(1, LAST_EXIT_BUCKET)
}

/// Nearest-rank percentile of an ascending slice.
fn percentile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let rank = (p * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

impl Report {
    pub fn from_items(per_item: Vec<ItemResult>) -> Self {
        let n = per_item.len();
        let correct = per_item.iter().filter(|r| r.correct).count();
        let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
        for r in &per_item {
            *counts.entry(exit_bucket(r.exit_round)).or_default() += 1;
        }
        let exit_rate = counts
            .into_iter()
            .map(|(k, c)| (k, c as f64 / n as f64))
            .collect();
        let mut latencies: Vec<f64> = per_item.iter().map(|r| r.latency_s).collect();
        latencies.sort_by(f64::total_cmp);
        let mean = if n == 0 {
            0.0
        } else {
            latencies.iter().sum::<f64>() / n as f64
        };
        Self {
            n_items: n,
            accuracy: if n == 0 { 0.0 } else { correct as f64 / n as f64 },
            exit_rate,
            mean_latency_s: mean,
            p50_latency_s: percentile(&latencies, 0.50),
            p95_latency_s: percentile(&latencies, 0.95),
            per_item,
        }
    }

    pub fn correct(&self) -> usize {
        self.per_item.iter().filter(|r| r.correct).count()
    }

    pub fn summary_line(&self) -> String {
        format!(
            "accuracy={:.2}% n={} mean_latency={:.3}s",
            self.accuracy * 100.0,
            self.n_items,
            self.mean_latency_s
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Markdown,
    Csv,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(format!("unknown report format {other:?} (markdown, csv, json)")),
        }
    }
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Markdown => "md",
            ReportFormat::Csv => "csv",
            ReportFormat::Json => "json",
        }
    }
}

fn pct(x: f64) -> String {
    format!("{:.2}%", x * 100.0)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn emit_report(report: &Report, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => serde_json::to_string_pretty(report).expect("report serializes"),
        ReportFormat::Csv => {
            let mut out = String::from("item_id,predicted,correct,exit_round,latency_s\n");
            for r in &report.per_item {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{:.6}",
                    csv_field(&r.item_id),
                    r.predicted.map(String::from).unwrap_or_default(),
                    r.correct,
                    r.exit_round,
                    r.latency_s
                );
            }
            out
        }
        ReportFormat::Markdown => {
            let mut out = String::new();
            let _ = writeln!(out, "| Metric | # Iteration | Value |");
            let _ = writeln!(out, "|---|---|---|");
            let _ = writeln!(out, "| Accuracy | all | {} |", pct(report.accuracy));
            for bucket in 1..=LAST_EXIT_BUCKET {
                let label = if bucket == LAST_EXIT_BUCKET {
                    format!("{bucket}+")
                } else {
                    bucket.to_string()
                };
                let rate = report.exit_rate.get(&bucket).copied().unwrap_or(0.0);
                let _ = writeln!(out, "| Exit Rate | {label} | {} |", pct(rate));
            }
            let _ = writeln!(out, "| Latency mean (s) | - | {:.3} |", report.mean_latency_s);
            let _ = writeln!(out, "| Latency p50 (s) | - | {:.3} |", report.p50_latency_s);
            let _ = writeln!(out, "| Latency p95 (s) | - | {:.3} |", report.p95_latency_s);
            let _ = writeln!(out, "\n{} items, {} correct.", report.n_items, report.correct());
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn item(id: &str, correct: bool, exit_round: u32, latency_s: f64) -> ItemResult {
        ItemResult {
            item_id: id.into(),
            predicted: Some(if correct { 'A' } else { 'B' }),
            correct,
            exit_round,
            latency_s,
            agent_errors: 0,
            error: None,
            trace_file: None,
        }
    }

    fn sample() -> Report {
        Report::from_items(vec![
            item("1", true, 1, 1.0),
            item("2", true, 1, 2.0),
            item("3", true, 2, 3.0),
            item("4", false, 5, 4.0),
        ])
    }

    #[test]
    fn aggregates() {
        let r = sample();
        assert_eq!(r.accuracy, 0.75);
        assert_eq!(r.exit_rate, BTreeMap::from([(1, 0.5), (2, 0.25), (4, 0.25)]));
        assert_eq!(r.mean_latency_s, 2.5);
        assert_eq!(r.p50_latency_s, 2.0);
        assert_eq!(r.p95_latency_s, 4.0);
    }

    #[test]
    fn markdown_mirrors_iteration_table() {
        let md = emit_report(&sample(), ReportFormat::Markdown);
        assert!(md.contains("| Accuracy | all | 75.00% |"));
        assert!(md.contains("| Exit Rate | 3 | 0.00% |"));
        assert!(md.contains("| Exit Rate | 4+ | 25.00% |"));
    }

    #[test]
    fn csv_header() {
        let csv = emit_report(&sample(), ReportFormat::Csv);
        assert_eq!(csv.lines().next().unwrap(), "item_id,predicted,correct,exit_round,latency_s");
        assert_eq!(csv.lines().nth(1).unwrap(), "1,A,true,1,1.000000");
    }

    #[test]
    fn json_round_trip() {
        let mut r = sample();
        r.per_item[0].latency_s = 0.1 + 0.2;
        r = Report::from_items(r.per_item);
        let back: Report = serde_json::from_str(&emit_report(&r, ReportFormat::Json)).unwrap();
        assert_eq!(back, r);
    }
}
