//! Chat-completions HTTP backend.

use std::fmt;
use std::time::{Duration, Instant};

use serde_json::{json, Value};
use tracing::warn;

use super::{Backend, Completion, CompletionRequest, ContentPart, PoolError};

const BODY_EXCERPT: usize = 200;

/// POSTs `{model, messages, temperature, max_tokens}` to `endpoint`.
/// Transport failures (connection errors, HTTP 5xx) are retried up to
/// `retry_count` times; timeouts and 4xx are not.
pub struct RemoteBackend {
    endpoint: String,
    model_id: String,
    auth_ref: Option<String>,
    retry_count: u32,
    agent: ureq::Agent,
}

// Deliberately omits anything credential-related.
impl fmt::Debug for RemoteBackend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RemoteBackend")
            .field("endpoint", &self.endpoint)
            .field("model_id", &self.model_id)
            .field("retry_count", &self.retry_count)
            .finish()
    }
}

impl RemoteBackend {
    pub fn new(
        endpoint: impl Into<String>,
        model_id: impl Into<String>,
        auth_ref: Option<String>,
        retry_count: u32,
    ) -> Self {
        Self {
            endpoint: endpoint.into(),
            model_id: model_id.into(),
            auth_ref,
            retry_count,
            agent: ureq::AgentBuilder::new().build(),
        }
    }

    pub fn request_body(&self, request: &CompletionRequest) -> Value {
        let mut messages = Vec::new();
        if let Some(system) = &request.system {
            messages.push(json!({"role": "system", "content": system}));
        }
        let mut content = vec![ContentPart::text(request.prompt.clone())];
        content.extend(request.parts.iter().cloned());
        messages.push(json!({"role": "user", "content": content}));
        json!({
            "model": self.model_id,
            "messages": messages,
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        })
    }

    fn bearer(&self) -> Result<Option<String>, PoolError> {
        match &self.auth_ref {
            None => Ok(None),
            Some(name) => std::env::var(name)
                .map(|v| Some(format!("Bearer {v}")))
                .map_err(|_| PoolError::MissingCredential(name.clone())),
        }
    }

    fn attempt(&self, body: &Value, timeout: Duration) -> Result<String, PoolError> {
        let mut req = self
            .agent
            .post(&self.endpoint)
            .timeout(timeout)
            .set("Content-Type", "application/json");
        if let Some(token) = self.bearer()? {
            req = req.set("Authorization", &token);
        }
        let started = Instant::now();
        match req.send_json(body) {
            Ok(resp) => {
                let value: Value = resp
                    .into_json()
                    .map_err(|e| PoolError::BadResponse(e.to_string()))?;
                completion_text(&value)
            }
            Err(ureq::Error::Status(status, resp)) => {
                let body = resp.into_string().unwrap_or_default();
                Err(PoolError::Transport {
                    status: Some(status),
                    body: excerpt(&body),
                })
            }
            Err(ureq::Error::Transport(t)) => {
                let msg = t.to_string();
                if msg.contains("timed out") || started.elapsed() >= timeout {
                    Err(PoolError::Timeout)
                } else {
                    Err(PoolError::Transport {
                        status: None,
                        body: excerpt(&msg),
                    })
                }
            }
        }
    }
}

fn excerpt(s: &str) -> String {
    s.chars().take(BODY_EXCERPT).collect()
}

/// Pulls the assistant text out of a chat-completions response. Content may
/// be a plain string or an array of text parts.
pub(crate) fn completion_text(value: &Value) -> Result<String, PoolError> {
    let content = value
        .pointer("/choices/0/message/content")
        .ok_or_else(|| PoolError::BadResponse("no choices[0].message.content".into()))?;
    match content {
        Value::String(s) => Ok(s.clone()),
        Value::Array(parts) => Ok(parts
            .iter()
            .filter_map(|p| p.get("text").and_then(Value::as_str))
            .collect::<Vec<_>>()
            .join("")),
        Value::Null => Ok(String::new()),
        other => Err(PoolError::BadResponse(format!("unexpected content: {other}"))),
    }
}

fn retryable(err: &PoolError) -> bool {
    match err {
        PoolError::Transport { status: None, .. } => true,
        PoolError::Transport { status: Some(s), .. } => *s >= 500,
        _ => false,
    }
}

impl Backend for RemoteBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<Completion, PoolError> {
        let body = self.request_body(request);
        let mut attempt = 0;
        loop {
            match self.attempt(&body, request.timeout) {
                Ok(text) => {
                    return Ok(Completion {
                        text,
                        reported_latency: None,
                    })
                }
                Err(err) if retryable(&err) && attempt < self.retry_count => {
                    attempt += 1;
                    warn!(endpoint = %self.endpoint, %err, attempt, "retrying completion");
                }
                Err(err) => return Err(err),
            }
        }
    }
}
