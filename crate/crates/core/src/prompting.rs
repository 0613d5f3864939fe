//! Stage prompt templates and the text that fills their slots.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::types::{
    AgentKind, AgentSpec, HistoryFormat, InputSummary, LoopConfig, ReasoningOutput, RoundLabel,
    RoundRecord, QA,
};

const REASONING_TEMPLATE: &str = include_str!("../templates/reasoning.txt");
const DECISION_TEMPLATE: &str = include_str!("../templates/decision.txt");
const BENCHMARK_TEMPLATE: &str = include_str!("../templates/benchmark.txt");

/// Every placeholder a template may reference.
pub const PLACEHOLDERS: [&str; 6] = [
    "cur_round_num",
    "historical_message",
    "input_summaries",
    "available_agent_info",
    "question",
    "choices",
];

pub const EMPTY_HISTORY: &str = "(no previous rounds)";

#[derive(Debug, thiserror::Error)]
pub enum PromptError {
    #[error("template {template}: placeholder {{{name}}} is unbound")]
    Unbound { template: &'static str, name: String },
    #[error("template {template}: required placeholder {{{name}}} is missing from the template body")]
    MissingPlaceholder { template: &'static str, name: &'static str },
    #[error("round number must be at least 1")]
    InvalidRound,
    #[error("agent pool is empty")]
    EmptyPool,
    #[error("decision prompt needs the current round's execution results")]
    MissingResults,
    #[error("expected between 2 and 26 choices, got {0}")]
    ChoiceCount(usize),
    #[error("reading template {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TemplateName {
    Reasoning,
    Decision,
    Benchmark,
}

impl TemplateName {
    pub fn as_str(self) -> &'static str {
        match self {
            TemplateName::Reasoning => "reasoning",
            TemplateName::Decision => "decision",
            TemplateName::Benchmark => "benchmark",
        }
    }

    fn required(self) -> &'static [&'static str] {
        match self {
            TemplateName::Reasoning | TemplateName::Decision => &PLACEHOLDERS[..4],
            TemplateName::Benchmark => &PLACEHOLDERS[4..],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub name: TemplateName,
    pub body: String,
}

impl PromptTemplate {
    /// Builds a template, checking that every placeholder the stage binds
    /// appears in the body.
    pub fn new(name: TemplateName, body: impl Into<String>) -> Result<Self, PromptError> {
        let body = body.into().trim_end().to_string();
        for p in name.required() {
            if !body.contains(&format!("{{{p}}}")) {
                return Err(PromptError::MissingPlaceholder {
                    template: name.as_str(),
                    name: p,
                });
            }
        }
        Ok(Self { name, body })
    }

    /// Single-pass substitution: bound values are never rescanned, so text
    /// containing braces (JSON history, user content) is inserted as-is.
    /// Braced names that are not known placeholders are copied literally.
    pub fn render(&self, bindings: &[(&str, &str)]) -> Result<String, PromptError> {
        let body = self.body.as_str();
        let mut out = String::with_capacity(body.len() + 256);
        let mut rest = body;
        while let Some(open) = rest.find('{') {
            out.push_str(&rest[..open]);
            let after = &rest[open + 1..];
            match after.find('}') {
                Some(close) if PLACEHOLDERS.contains(&&after[..close]) => {
                    let name = &after[..close];
                    let value = bindings
                        .iter()
                        .find(|(k, _)| *k == name)
                        .map(|(_, v)| *v)
                        .ok_or_else(|| PromptError::Unbound {
                            template: self.name.as_str(),
                            name: name.to_string(),
                        })?;
                    out.push_str(value);
                    rest = &after[close + 1..];
                }
                _ => {
                    out.push('{');
                    rest = after;
                }
            }
        }
        out.push_str(rest);
        Ok(out)
    }
}

/// The three stage templates. Defaults are compiled in; a directory may
/// override any of `reasoning.txt`, `decision.txt`, `benchmark.txt`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptSet {
    pub reasoning: PromptTemplate,
    pub decision: PromptTemplate,
    pub benchmark: PromptTemplate,
}

impl Default for PromptSet {
    fn default() -> Self {
        Self {
            reasoning: PromptTemplate::new(TemplateName::Reasoning, REASONING_TEMPLATE)
                .expect("embedded reasoning template"),
            decision: PromptTemplate::new(TemplateName::Decision, DECISION_TEMPLATE)
                .expect("embedded decision template"),
            benchmark: PromptTemplate::new(TemplateName::Benchmark, BENCHMARK_TEMPLATE)
                .expect("embedded benchmark template"),
        }
    }
}

impl PromptSet {
    pub fn with_overrides(dir: &Path) -> Result<Self, PromptError> {
        let mut set = Self::default();
        for name in [TemplateName::Reasoning, TemplateName::Decision, TemplateName::Benchmark] {
            let path = dir.join(format!("{}.txt", name.as_str()));
            if !path.exists() {
                continue;
            }
            let body = std::fs::read_to_string(&path).map_err(|source| PromptError::Io {
                path: path.display().to_string(),
                source,
            })?;
            let template = PromptTemplate::new(name, body)?;
            match name {
                TemplateName::Reasoning => set.reasoning = template,
                TemplateName::Decision => set.decision = template,
                TemplateName::Benchmark => set.benchmark = template,
            }
        }
        Ok(set)
    }
}

/// Rendering switches, normally taken from [`LoopConfig`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RenderOptions {
    pub history_format: HistoryFormat,
    pub round_label: RoundLabel,
}

impl From<&LoopConfig> for RenderOptions {
    fn from(cfg: &LoopConfig) -> Self {
        Self {
            history_format: cfg.history_format,
            round_label: cfg.round_label,
        }
    }
}

/// Everything both master-stage prompts are built from, besides the round.
#[derive(Debug, Clone, Copy)]
pub struct StageContext<'a> {
    pub query: &'a str,
    pub summaries: &'a [InputSummary],
    pub pool: &'a [AgentSpec],
}

/// The round currently being decided: planned and executed, not yet judged.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PendingRound<'a> {
    pub round_index: u32,
    pub reasoning: &'a ReasoningOutput,
    pub results: &'a [QA],
}

pub fn format_round_ordinal(n: u32) -> String {
    const WORDS: [&str; 10] = [
        "first", "second", "third", "fourth", "fifth", "sixth", "seventh", "eighth", "ninth",
        "tenth",
    ];
    if n == 0 {
        return "0th".to_string();
    }
    if n <= 3 {
        return WORDS[n as usize - 1].to_string();
    }
    let suffix = match (n % 10, n % 100) {
        (_, 11..=13) => "th",
        (1, _) => "st",
        (2, _) => "nd",
        (3, _) => "rd",
        _ => "th",
    };
    format!("{n}{suffix}")
}

fn round_label(n: u32, style: RoundLabel) -> String {
    match style {
        RoundLabel::Ordinal => format_round_ordinal(n),
        RoundLabel::Numeric => n.to_string(),
    }
}

/// One line per delegate agent: `<agent_name> (<modality>): <role>`.
/// The master is left out.
pub fn describe_agents(pool: &[AgentSpec]) -> String {
    pool.iter()
        .filter(|a| a.modality != AgentKind::Master)
        .map(|a| format!("{} ({}): {}", a.agent_name, a.modality, a.role))
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn format_input_summaries(query: &str, summaries: &[InputSummary]) -> String {
    let mut out = format!("User query: {query}");
    if summaries.is_empty() {
        out.push_str("\n(no input materials)");
    }
    for s in summaries {
        let _ = write!(out, "\n- {} ({}): {}", s.input_id, s.modality, indent_tail(&s.summary, "  "));
    }
    out
}

fn indent_tail(text: &str, pad: &str) -> String {
    text.trim_end().replace('\n', &format!("\n{pad}"))
}

fn write_round_body(
    out: &mut String,
    round_index: u32,
    reasoning: &ReasoningOutput,
    results: &[QA],
) {
    let _ = writeln!(out, "Round {round_index}");
    let _ = writeln!(out, "User intent: {}", indent_tail(&reasoning.user_intent, "  "));
    let _ = writeln!(out, "Agent results:");
    if results.is_empty() {
        let _ = writeln!(out, "(none)");
    }
    for qa in results {
        let _ = writeln!(out, "- [{}] Q: {}", qa.agent_name, indent_tail(&qa.question, "    "));
        let _ = writeln!(out, "  A: {}", indent_tail(&qa.answer, "    "));
    }
}

fn write_round(out: &mut String, r: &RoundRecord) {
    write_round_body(out, r.round_index, &r.reasoning, &r.results);
    let d = &r.decision;
    let _ = writeln!(out, "Decision:");
    let _ = writeln!(out, "  Final answer: {}", indent_tail(&d.final_answer, "    "));
    let _ = writeln!(out, "  Is final: {}", d.is_final);
    let _ = writeln!(out, "  Suggestions for next round:");
    for s in &d.suggestions_for_next_round {
        let _ = writeln!(out, "  - {}", indent_tail(s, "    "));
    }
}

/// Human-readable rendering of completed rounds, oldest first.
pub fn serialize_history(rounds: &[RoundRecord]) -> String {
    history_text(rounds, None)
}

fn history_text(rounds: &[RoundRecord], pending: Option<&PendingRound<'_>>) -> String {
    if rounds.is_empty() && pending.is_none() {
        return EMPTY_HISTORY.to_string();
    }
    let mut blocks = Vec::with_capacity(rounds.len() + 1);
    for r in rounds {
        let mut out = String::new();
        write_round(&mut out, r);
        blocks.push(out.trim_end().to_string());
    }
    if let Some(p) = pending {
        let mut out = String::new();
        write_round_body(&mut out, p.round_index, p.reasoning, p.results);
        let _ = write!(out, "Decision: (pending, this round)");
        blocks.push(out);
    }
    blocks.join("\n\n")
}

fn history_json(rounds: &[RoundRecord], pending: Option<&PendingRound<'_>>) -> String {
    if rounds.is_empty() && pending.is_none() {
        return EMPTY_HISTORY.to_string();
    }
    #[derive(Serialize)]
    struct View<'a> {
        rounds: &'a [RoundRecord],
        #[serde(skip_serializing_if = "Option::is_none")]
        current_round: Option<&'a PendingRound<'a>>,
    }
    serde_json::to_string_pretty(&View {
        rounds,
        current_round: pending,
    })
    .expect("history serializes")
}

fn render_history(
    rounds: &[RoundRecord],
    pending: Option<&PendingRound<'_>>,
    format: HistoryFormat,
) -> String {
    match format {
        HistoryFormat::Text => history_text(rounds, pending),
        HistoryFormat::Json => history_json(rounds, pending),
    }
}

fn pool_info(pool: &[AgentSpec]) -> Result<String, PromptError> {
    let info = describe_agents(pool);
    if info.is_empty() {
        return Err(PromptError::EmptyPool);
    }
    Ok(info)
}

impl PromptSet {
    pub fn render_reasoning(
        &self,
        round: u32,
        history: &[RoundRecord],
        ctx: StageContext<'_>,
        opts: RenderOptions,
    ) -> Result<String, PromptError> {
        if round < 1 {
            return Err(PromptError::InvalidRound);
        }
        let agents = pool_info(ctx.pool)?;
        let label = round_label(round, opts.round_label);
        let hist = render_history(history, None, opts.history_format);
        let summaries = format_input_summaries(ctx.query, ctx.summaries);
        self.reasoning.render(&[
            ("cur_round_num", &label),
            ("historical_message", &hist),
            ("input_summaries", &summaries),
            ("available_agent_info", &agents),
        ])
    }

    pub fn render_decision(
        &self,
        current: &PendingRound<'_>,
        history: &[RoundRecord],
        ctx: StageContext<'_>,
        opts: RenderOptions,
    ) -> Result<String, PromptError> {
        if current.round_index < 1 {
            return Err(PromptError::InvalidRound);
        }
        if current.results.is_empty() {
            return Err(PromptError::MissingResults);
        }
        let agents = pool_info(ctx.pool)?;
        let label = round_label(current.round_index, opts.round_label);
        let hist = render_history(history, Some(current), opts.history_format);
        let summaries = format_input_summaries(ctx.query, ctx.summaries);
        self.decision.render(&[
            ("cur_round_num", &label),
            ("historical_message", &hist),
            ("input_summaries", &summaries),
            ("available_agent_info", &agents),
        ])
    }

    pub fn render_benchmark(&self, question: &str, choices: &[String]) -> Result<String, PromptError> {
        let formatted = format_choices(choices)?;
        self.benchmark
            .render(&[("question", question), ("choices", &formatted)])
    }
}

/// `A. <c0>\nB. <c1>...` in the given order.
pub fn format_choices(choices: &[String]) -> Result<String, PromptError> {
    if !(2..=26).contains(&choices.len()) {
        return Err(PromptError::ChoiceCount(choices.len()));
    }
    Ok(choices
        .iter()
        .zip(b'A'..=b'Z')
        .map(|(c, label)| format!("{}. {}", label as char, c))
        .collect::<Vec<_>>()
        .join("\n"))
}

pub fn render_reasoning_prompt(
    round: u32,
    history: &[RoundRecord],
    ctx: StageContext<'_>,
) -> Result<String, PromptError> {
    PromptSet::default().render_reasoning(round, history, ctx, RenderOptions::default())
}

pub fn render_decision_prompt(
    current: &PendingRound<'_>,
    history: &[RoundRecord],
    ctx: StageContext<'_>,
) -> Result<String, PromptError> {
    PromptSet::default().render_decision(current, history, ctx, RenderOptions::default())
}

pub fn render_benchmark_prompt(question: &str, choices: &[String]) -> Result<String, PromptError> {
    PromptSet::default().render_benchmark(question, choices)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{AgentInstruction, DecisionOutput, ModalityKind};
    use std::collections::BTreeMap;

    fn pool() -> Vec<AgentSpec> {
        vec![
            AgentSpec::new("master", AgentKind::Master, "Central controller", "m"),
            AgentSpec::new("image_agent", AgentKind::Image, "Handles images", "m"),
        ]
    }

    fn round(idx: u32, suggestion: &str) -> RoundRecord {
        RoundRecord {
            round_index: idx,
            reasoning: ReasoningOutput {
                user_intent: format!("intent {idx}"),
                agent_instructions: vec![AgentInstruction {
                    agent_name: "image_agent".into(),
                    questions: vec![format!("question {idx}")],
                }],
            },
            results: vec![QA {
                question: format!("question {idx}"),
                answer: format!("answer {idx}"),
                agent_name: "image_agent".into(),
                latency_s: 0.0,
            }],
            decision: DecisionOutput {
                final_answer: format!("final {idx}"),
                is_final: false,
                suggestions_for_next_round: vec![suggestion.into(), "second tip".into()],
            },
            stage_latencies_s: BTreeMap::new(),
        }
    }

    #[test]
    fn ordinals() {
        assert_eq!(format_round_ordinal(1), "first");
        assert_eq!(format_round_ordinal(2), "second");
        assert_eq!(format_round_ordinal(3), "third");
        assert_eq!(format_round_ordinal(4), "4th");
        assert_eq!(format_round_ordinal(11), "11th");
        assert_eq!(format_round_ordinal(21), "21st");
        assert_eq!(format_round_ordinal(112), "112th");
    }

    #[test]
    fn empty_history_marker() {
        assert_eq!(serialize_history(&[]), "(no previous rounds)");
    }

    #[test]
    fn history_block_contents() {
        let text = serialize_history(&[round(1, "zoom on the bumper")]);
        assert!(text.starts_with("Round 1\n"));
        assert!(text.contains("User intent: intent 1"));
        assert!(text.contains("- [image_agent] Q: question 1\n  A: answer 1"));
        assert!(text.contains("  Final answer: final 1"));
        assert!(text.contains("  Is final: false"));
        assert!(text.contains("\n  - zoom on the bumper\n  - second tip"));
    }

    #[test]
    fn history_rounds_in_order() {
        let text = serialize_history(&[round(1, "a"), round(2, "b")]);
        let one = text.find("Round 1").unwrap();
        let two = text.find("Round 2").unwrap();
        assert!(one < two);
    }

    #[test]
    fn reasoning_round_one() {
        let p = pool();
        let ctx = StageContext { query: "what happened?", summaries: &[], pool: &p };
        let text = render_reasoning_prompt(1, &[], ctx).unwrap();
        assert!(text.contains("This is the first round of reasoning"));
        assert!(text.contains("(no previous rounds)"));
        assert!(text.contains("image_agent (image): Handles images"));
        assert!(!text.contains("master (master)"));
        assert!(text.ends_with("Your goal is reasoning and delegation only."));
    }

    #[test]
    fn reasoning_round_two_carries_history() {
        let p = pool();
        let ctx = StageContext { query: "q", summaries: &[], pool: &p };
        let text = render_reasoning_prompt(2, &[round(1, "check the skid marks")], ctx).unwrap();
        assert!(text.contains("This is the second round of reasoning"));
        assert!(text.contains("Round 1"));
        assert!(text.contains("check the skid marks"));
    }

    #[test]
    fn reasoning_needs_pool() {
        let ctx = StageContext { query: "q", summaries: &[], pool: &[] };
        assert!(matches!(render_reasoning_prompt(1, &[], ctx), Err(PromptError::EmptyPool)));
        let only_master = vec![AgentSpec::new("m", AgentKind::Master, "ctl", "b")];
        let ctx = StageContext { query: "q", summaries: &[], pool: &only_master };
        assert!(matches!(render_reasoning_prompt(1, &[], ctx), Err(PromptError::EmptyPool)));
    }

    #[test]
    fn decision_embeds_current_results() {
        let p = pool();
        let plan = round(1, "x").reasoning;
        let results = vec![
            QA { question: "q-one".into(), answer: "a-one".into(), agent_name: "image_agent".into(), latency_s: 0.1 },
            QA { question: "q-two".into(), answer: "a-two".into(), agent_name: "image_agent".into(), latency_s: 0.1 },
        ];
        let current = PendingRound { round_index: 1, reasoning: &plan, results: &results };
        let summaries = vec![InputSummary { input_id: "img1".into(), modality: ModalityKind::Image, summary: "a sedan".into() }];
        let ctx = StageContext { query: "q", summaries: &summaries, pool: &p };
        let text = render_decision_prompt(&current, &[], ctx).unwrap();
        for s in ["q-one", "a-one", "q-two", "a-two", "This is the first round of decision", "- img1 (image): a sedan"] {
            assert!(text.contains(s), "missing {s}");
        }

        let current = PendingRound { round_index: 3, reasoning: &plan, results: &results };
        let text = render_decision_prompt(&current, &[round(1, "a"), round(2, "b")], ctx).unwrap();
        assert!(text.contains("This is the third round of decision"));

        let none: Vec<QA> = vec![];
        let current = PendingRound { round_index: 1, reasoning: &plan, results: &none };
        assert!(matches!(render_decision_prompt(&current, &[], ctx), Err(PromptError::MissingResults)));
    }

    #[test]
    fn benchmark_choices() {
        let choices: Vec<String> = ["3", "4", "5", "6"].iter().map(|s| s.to_string()).collect();
        let text = render_benchmark_prompt("2+2=?", &choices).unwrap();
        assert!(text.contains("Question: 2+2=?"));
        assert!(text.contains("Choices: A. 3\nB. 4\nC. 5\nD. 6"));

        assert!(matches!(render_benchmark_prompt("q", &choices[..1]), Err(PromptError::ChoiceCount(1))));
        let many: Vec<String> = (0..26).map(|i| format!("c{i}")).collect();
        let text = render_benchmark_prompt("q", &many).unwrap();
        assert!(text.contains("A. c0") && text.contains("Z. c25"));
        let too_many: Vec<String> = (0..27).map(|i| format!("c{i}")).collect();
        assert!(render_benchmark_prompt("q", &too_many).is_err());
    }

    #[test]
    fn braces_in_values_are_not_rescanned() {
        let p = pool();
        let ctx = StageContext { query: "literal {question} and {\"a\":1}", summaries: &[], pool: &p };
        let text = render_reasoning_prompt(1, &[], ctx).unwrap();
        assert!(text.contains("literal {question} and {\"a\":1}"));
    }

    #[test]
    fn unbound_placeholder_is_an_error() {
        let t = PromptTemplate::new(TemplateName::Benchmark, "Q {question} C {choices}").unwrap();
        assert!(matches!(t.render(&[("question", "x")]), Err(PromptError::Unbound { .. })));
        assert!(PromptTemplate::new(TemplateName::Benchmark, "Q {question}").is_err());
    }

    #[test]
    fn json_history_mode() {
        let p = pool();
        let ctx = StageContext { query: "q", summaries: &[], pool: &p };
        let opts = RenderOptions { history_format: HistoryFormat::Json, round_label: RoundLabel::Numeric };
        let text = PromptSet::default()
            .render_reasoning(2, &[round(1, "tip")], ctx, opts)
            .unwrap();
        assert!(text.contains("\"suggestions_for_next_round\""));
        assert!(text.contains("This is the 2 round of reasoning"));
    }

    #[test]
    fn override_directory() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("benchmark.txt"), "Q: {question}\n{choices}\n").unwrap();
        let set = PromptSet::with_overrides(dir.path()).unwrap();
        let choices = vec!["x".to_string(), "y".to_string()];
        assert_eq!(set.render_benchmark("hi", &choices).unwrap(), "Q: hi\nA. x\nB. y");
        assert_eq!(set.reasoning, PromptSet::default().reasoning);

        std::fs::write(dir.path().join("decision.txt"), "no slots").unwrap();
        assert!(matches!(
            PromptSet::with_overrides(dir.path()),
            Err(PromptError::MissingPlaceholder { .. })
        ));
    }
}
