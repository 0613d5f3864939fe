//! Value types shared by every stage of a session.
//!
//! Everything here is an immutable value once built. The structured stage
//! outputs ([`ReasoningOutput`], [`DecisionOutput`]) serialize with exactly
//! the field names the master model is asked to produce; construct them from
//! untrusted JSON through [`crate::schema`], never through serde directly.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// The four input modalities a session understands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModalityKind {
    Text,
    Image,
    Audio,
    Video,
}

impl ModalityKind {
    pub const ALL: [ModalityKind; 4] = [
        ModalityKind::Text,
        ModalityKind::Image,
        ModalityKind::Audio,
        ModalityKind::Video,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModalityKind::Text => "text",
            ModalityKind::Image => "image",
            ModalityKind::Audio => "audio",
            ModalityKind::Video => "video",
        }
    }
}

impl fmt::Display for ModalityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown modality: {0:?}")]
pub struct UnknownModality(pub String);

impl FromStr for ModalityKind {
    type Err = UnknownModality;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" => Ok(ModalityKind::Text),
            "image" => Ok(ModalityKind::Image),
            "audio" => Ok(ModalityKind::Audio),
            "video" => Ok(ModalityKind::Video),
            other => Err(UnknownModality(other.to_string())),
        }
    }
}

/// Content of an input: inline text for the text modality, a locator for
/// everything else.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Payload {
    Inline(String),
    Locator(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InputError {
    #[error("input {id}: text inputs must carry inline text")]
    TextNeedsInline { id: String },
    #[error("input {id}: {modality} inputs must carry a locator")]
    MediaNeedsLocator { id: String, modality: ModalityKind },
    #[error("duplicate input id: {0}")]
    DuplicateId(String),
}

/// One piece of user-provided material.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputItem {
    pub id: String,
    pub modality: ModalityKind,
    pub payload: Payload,
    pub media_type: String,
}

impl InputItem {
    pub fn text(id: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            modality: ModalityKind::Text,
            payload: Payload::Inline(text.into()),
            media_type: "text/plain".to_string(),
        }
    }

    /// A non-text input backed by a file (or, for video, a frame directory).
    /// The media type is guessed from the extension.
    pub fn media(id: impl Into<String>, modality: ModalityKind, path: impl Into<PathBuf>) -> Self {
        let path = path.into();
        let media_type = guess_media_type(modality, &path);
        Self {
            id: id.into(),
            modality,
            payload: Payload::Locator(path),
            media_type,
        }
    }

    pub fn check(&self) -> Result<(), InputError> {
        match (&self.modality, &self.payload) {
            (ModalityKind::Text, Payload::Inline(_)) => Ok(()),
            (ModalityKind::Text, Payload::Locator(_)) => Err(InputError::TextNeedsInline {
                id: self.id.clone(),
            }),
            (_, Payload::Locator(_)) => Ok(()),
            (m, Payload::Inline(_)) => Err(InputError::MediaNeedsLocator {
                id: self.id.clone(),
                modality: *m,
            }),
        }
    }

    pub fn meta(&self) -> InputMeta {
        let (locator, chars) = match &self.payload {
            Payload::Inline(text) => (None, Some(text.chars().count())),
            Payload::Locator(path) => (Some(path.display().to_string()), None),
        };
        InputMeta {
            id: self.id.clone(),
            modality: self.modality,
            media_type: self.media_type.clone(),
            locator,
            chars,
        }
    }
}

/// Validates a whole input set: per-item payload shape and id uniqueness.
pub fn check_inputs(inputs: &[InputItem]) -> Result<(), InputError> {
    let mut seen = std::collections::HashSet::new();
    for item in inputs {
        item.check()?;
        if !seen.insert(item.id.as_str()) {
            return Err(InputError::DuplicateId(item.id.clone()));
        }
    }
    Ok(())
}

pub(crate) fn guess_media_type(modality: ModalityKind, path: &std::path::Path) -> String {
    if modality == ModalityKind::Video && path.is_dir() {
        return "video/x-frames".to_string();
    }
    match mime_guess::from_path(path).first() {
        Some(mime) => mime.essence_str().to_string(),
        None => match modality {
            ModalityKind::Text => "text/plain",
            ModalityKind::Image => "image/png",
            ModalityKind::Audio => "audio/wav",
            ModalityKind::Video => "video/mp4",
        }
        .to_string(),
    }
}

/// Trace-safe description of an input: no inline content.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputMeta {
    pub id: String,
    pub modality: ModalityKind,
    pub media_type: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub locator: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chars: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputSummary {
    pub input_id: String,
    pub modality: ModalityKind,
    pub summary: String,
}

/// What an agent in the pool is for. The master is the caller of every
/// other agent and never receives delegated questions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentKind {
    Master,
    Text,
    Image,
    Audio,
    Video,
}

impl AgentKind {
    pub fn modality(self) -> Option<ModalityKind> {
        match self {
            AgentKind::Master => None,
            AgentKind::Text => Some(ModalityKind::Text),
            AgentKind::Image => Some(ModalityKind::Image),
            AgentKind::Audio => Some(ModalityKind::Audio),
            AgentKind::Video => Some(ModalityKind::Video),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AgentKind::Master => "master",
            other => other.modality().map(ModalityKind::as_str).unwrap_or("master"),
        }
    }
}

impl From<ModalityKind> for AgentKind {
    fn from(m: ModalityKind) -> Self {
        match m {
            ModalityKind::Text => AgentKind::Text,
            ModalityKind::Image => AgentKind::Image,
            ModalityKind::Audio => AgentKind::Audio,
            ModalityKind::Video => AgentKind::Video,
        }
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentSpec {
    pub agent_name: String,
    pub modality: AgentKind,
    pub role: String,
    pub backend_id: String,
}

impl AgentSpec {
    pub fn new(
        agent_name: impl Into<String>,
        modality: AgentKind,
        role: impl Into<String>,
        backend_id: impl Into<String>,
    ) -> Self {
        Self {
            agent_name: agent_name.into(),
            modality,
            role: role.into(),
            backend_id: backend_id.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentInstruction {
    pub agent_name: String,
    pub questions: Vec<String>,
}

/// The reasoning stage's plan.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReasoningOutput {
    pub user_intent: String,
    pub agent_instructions: Vec<AgentInstruction>,
}

impl ReasoningOutput {
    pub fn question_count(&self) -> usize {
        self.agent_instructions.iter().map(|i| i.questions.len()).sum()
    }
}

/// One delegated question paired with the answer it produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QA {
    pub question: String,
    pub answer: String,
    pub agent_name: String,
    pub latency_s: f64,
}

/// Prefix of the answer recorded when a delegated call fails.
pub const AGENT_ERROR_PREFIX: &str = "[AGENT_ERROR]";

impl QA {
    pub fn is_error(&self) -> bool {
        self.answer.starts_with(AGENT_ERROR_PREFIX)
    }
}

pub fn agent_error_sentinel(reason: impl fmt::Display) -> String {
    format!("{AGENT_ERROR_PREFIX} {reason}")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionOutput {
    pub final_answer: String,
    pub is_final: bool,
    pub suggestions_for_next_round: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Perception,
    Reasoning,
    Execution,
    Decision,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Perception => "perception",
            Stage::Reasoning => "reasoning",
            Stage::Execution => "execution",
            Stage::Decision => "decision",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round_index: u32,
    pub reasoning: ReasoningOutput,
    pub results: Vec<QA>,
    pub decision: DecisionOutput,
    pub stage_latencies_s: BTreeMap<Stage, f64>,
}

/// Full record of one session. This is also the on-disk trace format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionTrace {
    pub query: String,
    pub inputs: Vec<InputMeta>,
    pub summaries: Vec<InputSummary>,
    pub rounds: Vec<RoundRecord>,
    pub final_answer: String,
    pub exit_round: u32,
    pub forced_exit: bool,
    #[serde(default)]
    pub perception_latency_s: f64,
    pub total_latency_s: f64,
    /// Set when the session stopped on a stage error; the rounds are partial.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl SessionTrace {
    pub fn last_decision(&self) -> Option<&DecisionOutput> {
        self.rounds.last().map(|r| &r.decision)
    }
}

/// How `{historical_message}` is rendered.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HistoryFormat {
    #[default]
    Text,
    Json,
}

/// How `{cur_round_num}` is rendered.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RoundLabel {
    #[default]
    Ordinal,
    Numeric,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid loop config: {0}")]
pub struct ConfigError(pub String);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LoopConfig {
    pub max_loops: u32,
    pub json_repair_retries: u32,
    pub per_call_timeout_s: f64,
    pub temperature: f64,
    pub video_frame_count: usize,
    /// Text inputs longer than this many characters are summarized by the
    /// text agent during perception; shorter ones pass through.
    pub summary_threshold_chars: usize,
    pub history_format: HistoryFormat,
    pub round_label: RoundLabel,
}

impl Default for LoopConfig {
    fn default() -> Self {
        Self {
            max_loops: 3,
            json_repair_retries: 2,
            per_call_timeout_s: 120.0,
            temperature: 0.0,
            video_frame_count: 8,
            summary_threshold_chars: 2000,
            history_format: HistoryFormat::Text,
            round_label: RoundLabel::Ordinal,
        }
    }
}

impl LoopConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.max_loops < 1 {
            return Err(ConfigError("max_loops must be at least 1".into()));
        }
        if self.video_frame_count < 1 {
            return Err(ConfigError("video_frame_count must be at least 1".into()));
        }
        if self.per_call_timeout_s.is_nan() || self.per_call_timeout_s <= 0.0 {
            return Err(ConfigError("per_call_timeout_s must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modality_parse_rejects_other_strings() {
        for m in ModalityKind::ALL {
            assert_eq!(m.as_str().parse::<ModalityKind>().unwrap(), m);
        }
        assert!("Text".parse::<ModalityKind>().is_err());
        assert!("document".parse::<ModalityKind>().is_err());
        assert!(serde_json::from_str::<ModalityKind>("\"pdf\"").is_err());
    }

    #[test]
    fn payload_shape_follows_modality() {
        assert!(InputItem::text("t", "hello").check().is_ok());
        let bad = InputItem {
            id: "img".into(),
            modality: ModalityKind::Image,
            payload: Payload::Inline("pixels".into()),
            media_type: "image/png".into(),
        };
        assert!(matches!(bad.check(), Err(InputError::MediaNeedsLocator { .. })));
        let bad_text = InputItem {
            id: "t".into(),
            modality: ModalityKind::Text,
            payload: Payload::Locator("note.txt".into()),
            media_type: "text/plain".into(),
        };
        assert!(matches!(bad_text.check(), Err(InputError::TextNeedsInline { .. })));
    }

    #[test]
    fn duplicate_input_ids_rejected() {
        let inputs = vec![InputItem::text("a", "x"), InputItem::text("a", "y")];
        assert_eq!(check_inputs(&inputs), Err(InputError::DuplicateId("a".into())));
    }

    #[test]
    fn loop_config_defaults() {
        let cfg = LoopConfig::default();
        assert_eq!(cfg.max_loops, 3);
        assert_eq!(cfg.json_repair_retries, 2);
        assert_eq!(cfg.per_call_timeout_s, 120.0);
        assert_eq!(cfg.temperature, 0.0);
        assert_eq!(cfg.video_frame_count, 8);
        assert!(cfg.validate().is_ok());
        let zero = LoopConfig { max_loops: 0, ..cfg };
        assert!(zero.validate().is_err());
    }

    #[test]
    fn media_type_guessed_from_extension() {
        let item = InputItem::media("p", ModalityKind::Image, "photo.jpg");
        assert_eq!(item.media_type, "image/jpeg");
        let meta = item.meta();
        assert_eq!(meta.locator.as_deref(), Some("photo.jpg"));
        assert_eq!(InputItem::text("n", "abc").meta().chars, Some(3));
    }
}
