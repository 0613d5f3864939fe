//! Scripted backend for tests and offline runs.

use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{Backend, Completion, CompletionRequest, PoolError};

/// One scripted reply. A rule matches when the agent name is equal (or the
/// rule's agent is `*`), every `contains` substring occurs in the prompt,
/// and `round`, if set, equals the call's round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MockRule {
    pub agent: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub contains: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub round: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response: Option<String>,
    /// Replies handed out in order on successive matches; the last one
    /// repeats once the list is exhausted. Takes precedence over `response`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sequence: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delay_s: Option<f64>,
    /// Fail with a transport error carrying this HTTP status.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fail_status: Option<u16>,
}

impl MockRule {
    pub fn new(agent: impl Into<String>) -> Self {
        Self {
            agent: agent.into(),
            contains: Vec::new(),
            round: None,
            response: None,
            sequence: Vec::new(),
            delay_s: None,
            fail_status: None,
        }
    }

    pub fn contains(mut self, needle: impl Into<String>) -> Self {
        self.contains.push(needle.into());
        self
    }

    pub fn round(mut self, round: u32) -> Self {
        self.round = Some(round);
        self
    }

    pub fn reply(mut self, text: impl Into<String>) -> Self {
        self.response = Some(text.into());
        self
    }

    pub fn replies<I, S>(mut self, texts: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.sequence = texts.into_iter().map(Into::into).collect();
        self
    }

    pub fn delay(mut self, seconds: f64) -> Self {
        self.delay_s = Some(seconds);
        self
    }

    pub fn fail(mut self, status: u16) -> Self {
        self.fail_status = Some(status);
        self
    }

    fn matches(&self, request: &CompletionRequest) -> bool {
        (self.agent == "*" || self.agent == request.agent_name)
            && self.contains.iter().all(|n| request.prompt.contains(n.as_str()))
            && self.round.is_none_or(|r| request.round == Some(r))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MockScript {
    pub rules: Vec<MockRule>,
    pub default_response: String,
    pub injected_delay_s: f64,
}

impl Default for MockScript {
    fn default() -> Self {
        Self {
            rules: Vec::new(),
            default_response: "(no scripted response)".to_string(),
            injected_delay_s: 0.0,
        }
    }
}

impl MockScript {
    pub fn new(rules: Vec<MockRule>) -> Self {
        Self {
            rules,
            ..Self::default()
        }
    }
}

/// A call as the mock saw it.
#[derive(Debug, Clone, PartialEq)]
pub struct MockCall {
    pub agent_name: String,
    pub system: Option<String>,
    pub prompt: String,
    pub round: Option<u32>,
    pub image_parts: usize,
    pub part_count: usize,
}

/// Backend that answers from a [`MockScript`]. It sleeps for the scripted
/// delay and reports exactly that delay as latency. A delay longer than the
/// request timeout sleeps for the timeout and fails with
/// [`PoolError::Timeout`].
#[derive(Debug)]
pub struct MockBackend {
    script: MockScript,
    cursors: Mutex<Vec<usize>>,
    calls: Mutex<Vec<MockCall>>,
}

impl MockBackend {
    pub fn new(script: MockScript) -> Self {
        let n = script.rules.len();
        Self {
            script,
            cursors: Mutex::new(vec![0; n]),
            calls: Mutex::new(Vec::new()),
        }
    }

    pub fn script(&self) -> &MockScript {
        &self.script
    }

    pub fn calls(&self) -> Vec<MockCall> {
        self.calls.lock().unwrap().clone()
    }

    pub fn calls_to(&self, agent_name: &str) -> Vec<MockCall> {
        self.calls()
            .into_iter()
            .filter(|c| c.agent_name == agent_name)
            .collect()
    }
}

impl Backend for MockBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<Completion, PoolError> {
        self.calls.lock().unwrap().push(MockCall {
            agent_name: request.agent_name.clone(),
            system: request.system.clone(),
            prompt: request.prompt.clone(),
            round: request.round,
            image_parts: request.parts.iter().filter(|p| p.is_image()).count(),
            part_count: request.parts.len(),
        });

        let hit = self
            .script
            .rules
            .iter()
            .enumerate()
            .find(|(_, r)| r.matches(request));
        let (text, delay_s, fail) = match hit {
            Some((idx, rule)) => {
                let text = if rule.sequence.is_empty() {
                    rule.response
                        .clone()
                        .unwrap_or_else(|| self.script.default_response.clone())
                } else {
                    let mut cursors = self.cursors.lock().unwrap();
                    let at = cursors[idx].min(rule.sequence.len() - 1);
                    cursors[idx] += 1;
                    rule.sequence[at].clone()
                };
                (
                    text,
                    rule.delay_s.unwrap_or(self.script.injected_delay_s),
                    rule.fail_status,
                )
            }
            None => (
                self.script.default_response.clone(),
                self.script.injected_delay_s,
                None,
            ),
        };

        let delay = Duration::from_secs_f64(delay_s.max(0.0));
        if delay > request.timeout {
            std::thread::sleep(request.timeout);
            return Err(PoolError::Timeout);
        }
        if !delay.is_zero() {
            std::thread::sleep(delay);
        }
        if let Some(status) = fail {
            return Err(PoolError::Transport {
                status: Some(status),
                body: "scripted failure".into(),
            });
        }
        Ok(Completion {
            text,
            reported_latency: Some(delay),
        })
    }
}
