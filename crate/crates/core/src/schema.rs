//! Strict validation of the master model's structured replies.
//!
//! Required fields, JSON types and the min-length-1 list constraints are
//! enforced; unknown extra fields are ignored.

use serde_json::{Map, Value};

use crate::types::{AgentInstruction, DecisionOutput, ReasoningOutput};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("schema violation at {path}: {reason}")]
pub struct SchemaError {
    pub path: String,
    pub reason: String,
}

impl SchemaError {
    fn new(path: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            reason: reason.into(),
        }
    }
}

fn root_object(raw: &Value) -> Result<&Map<String, Value>, SchemaError> {
    raw.as_object()
        .ok_or_else(|| SchemaError::new("$", format!("expected object, got {}", kind(raw))))
}

fn kind(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "boolean",
        Value::Number(_) => "number",
        Value::String(_) => "string",
        Value::Array(_) => "array",
        Value::Object(_) => "object",
    }
}

fn field<'a>(obj: &'a Map<String, Value>, name: &str, path: &str) -> Result<&'a Value, SchemaError> {
    obj.get(name)
        .ok_or_else(|| SchemaError::new(path, "missing required field"))
}

fn string_at(v: &Value, path: &str, non_empty: bool) -> Result<String, SchemaError> {
    match v {
        Value::String(s) if non_empty && s.trim().is_empty() => {
            Err(SchemaError::new(path, "must be a non-empty string"))
        }
        Value::String(s) => Ok(s.clone()),
        other => Err(SchemaError::new(path, format!("expected string, got {}", kind(other)))),
    }
}

fn non_empty_list<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>, SchemaError> {
    match v {
        Value::Array(items) if items.is_empty() => Err(SchemaError::new(path, "min_length 1")),
        Value::Array(items) => Ok(items),
        other => Err(SchemaError::new(path, format!("expected array, got {}", kind(other)))),
    }
}

fn string_list(v: &Value, path: &str) -> Result<Vec<String>, SchemaError> {
    non_empty_list(v, path)?
        .iter()
        .enumerate()
        .map(|(i, item)| string_at(item, &format!("{path}[{i}]"), true))
        .collect()
}

pub fn validate_reasoning(raw: &Value) -> Result<ReasoningOutput, SchemaError> {
    let obj = root_object(raw)?;
    let user_intent = string_at(field(obj, "user_intent", "user_intent")?, "user_intent", true)?;
    let list = non_empty_list(
        field(obj, "agent_instructions", "agent_instructions")?,
        "agent_instructions",
    )?;
    let mut agent_instructions = Vec::with_capacity(list.len());
    for (i, entry) in list.iter().enumerate() {
        let base = format!("agent_instructions[{i}]");
        let inner = entry.as_object().ok_or_else(|| {
            SchemaError::new(&base, format!("expected object, got {}", kind(entry)))
        })?;
        let name_path = format!("{base}.agent_name");
        let agent_name = string_at(field(inner, "agent_name", &name_path)?, &name_path, true)?;
        let q_path = format!("{base}.questions");
        let questions = string_list(field(inner, "questions", &q_path)?, &q_path)?;
        agent_instructions.push(AgentInstruction {
            agent_name,
            questions,
        });
    }
    Ok(ReasoningOutput {
        user_intent,
        agent_instructions,
    })
}

pub fn validate_decision(raw: &Value) -> Result<DecisionOutput, SchemaError> {
    let obj = root_object(raw)?;
    let final_answer = string_at(field(obj, "final_answer", "final_answer")?, "final_answer", false)?;
    let is_final = match field(obj, "is_final", "is_final")? {
        Value::Bool(b) => *b,
        other => {
            return Err(SchemaError::new(
                "is_final",
                format!("expected boolean, got {}", kind(other)),
            ))
        }
    };
    let suggestions_for_next_round = string_list(
        field(obj, "suggestions_for_next_round", "suggestions_for_next_round")?,
        "suggestions_for_next_round",
    )?;
    Ok(DecisionOutput {
        final_answer,
        is_final,
        suggestions_for_next_round,
    })
}

/// Output-format instruction sent as the system message with every
/// reasoning-stage call.
pub const REASONING_FORMAT_INSTRUCTION: &str = r#"Reply with ONLY a JSON object of this shape, no other text:
{
  "user_intent": string,  // The user's goal or intention, typically inferred from a multimodal input or query.
  "agent_instructions": [  // A list of instructions for each agent, containing the agent name and related questions. At least one entry.
    {
      "agent_name": string,  // The identifier for the agent (selected from the agent pool) that is most suitable for handling this intent.
      "questions": [string]  // A list of specific questions or instructions for this agent. At least one entry.
    }
  ]
}"#;

/// Output-format instruction sent as the system message with every
/// decision-stage call.
pub const DECISION_FORMAT_INSTRUCTION: &str = r#"Reply with ONLY a JSON object of this shape, no other text:
{
  "final_answer": string,  // The synthesized answer intended for showing to the end user. If the user's query includes output format requirements, please follow them strictly.
  "is_final": boolean,  // Indicates whether this is a complete and final answer (True), or if more work/follow-up is needed (False).
  "suggestions_for_next_round": [string]  // You must always include non-empty 'suggestions_for_next_round'. Even if the answer is final, you must still provide suggestions for improvement, validation, or alternative framing.
}"#;
