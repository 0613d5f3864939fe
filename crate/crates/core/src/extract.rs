//! Pulling a JSON object out of free-form model output.

use serde_json::Value;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("no JSON object found in reply")]
pub struct ExtractionError;

/// Returns the first balanced `{...}` in `reply` that parses as a JSON
/// object. Fenced code blocks are searched before the surrounding text.
pub fn extract_json(reply: &str) -> Result<Value, ExtractionError> {
    for block in fenced_blocks(reply) {
        if let Some(v) = first_object(block) {
            return Ok(v);
        }
    }
    first_object(reply).ok_or(ExtractionError)
}

fn fenced_blocks(text: &str) -> Vec<&str> {
    let mut blocks = Vec::new();
    let mut rest = text;
    while let Some(open) = rest.find("```") {
        let after = &rest[open + 3..];
        // Skip an info string such as `json`.
        let body_start = after.find('\n').map(|i| i + 1).unwrap_or(0);
        let body = &after[body_start..];
        match body.find("```") {
            Some(close) => {
                blocks.push(&body[..close]);
                rest = &body[close + 3..];
            }
            None => {
                blocks.push(body);
                break;
            }
        }
    }
    blocks
}

fn first_object(text: &str) -> Option<Value> {
    let bytes = text.as_bytes();
    let mut start = 0;
    while let Some(offset) = text[start..].find('{') {
        let open = start + offset;
        if let Some(close) = balanced_end(&bytes[open..]) {
            let candidate = &text[open..open + close + 1];
            if let Ok(v @ Value::Object(_)) = serde_json::from_str::<Value>(candidate) {
                return Some(v);
            }
        }
        start = open + 1;
    }
    None
}

/// Index of the brace closing the one at `bytes[0]`, skipping braces inside
/// JSON strings.
fn balanced_end(bytes: &[u8]) -> Option<usize> {
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, &b) in bytes.iter().enumerate() {
        if in_string {
            match b {
                _ if escaped => escaped = false,
                b'\\' => escaped = true,
                b'"' => in_string = false,
                _ => {}
            }
            continue;
        }
        match b {
            b'"' => in_string = true,
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}
