//! Registry of named backends and the uniform invoke contract.
//!
//! Every backend speaks the same chat-completions shaped request; agents are
//! thin names over a backend plus a declared modality and role. Several
//! agents may share one backend (the same hosted model serving the master and
//! the image agent, say).

mod config;
mod encode;
mod mock;
mod remote;

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::prompting::describe_agents;
use crate::types::{AgentKind, AgentSpec, InputItem, ModalityKind};

pub use config::{BackendConfig, BackendKind, MockScriptSource, PoolConfigError, PoolFile};
pub use encode::{encode_attachments, sample_frame_indices, ContentPart, ImageUrl, InputAudio};
pub use mock::{MockBackend, MockCall, MockRule, MockScript};
pub use remote::RemoteBackend;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PoolError {
    #[error("unknown agent: {0}")]
    UnknownAgent(String),
    #[error("agent already registered: {0}")]
    DuplicateAgent(String),
    #[error("unknown backend: {0}")]
    UnknownBackend(String),
    #[error("agent pool is empty")]
    EmptyPool,
    #[error("timeout")]
    Timeout,
    #[error("transport error{}: {body}", .status.map(|s| format!(" (HTTP {s})")).unwrap_or_default())]
    Transport { status: Option<u16>, body: String },
    #[error("agent {agent} ({agent_kind}) cannot accept {modality} input")]
    ModalityMismatch {
        agent: String,
        agent_kind: AgentKind,
        modality: ModalityKind,
    },
    #[error("cannot decode {path}: {reason}")]
    Decode { path: String, reason: String },
    #[error("credential {0} is not set in the environment")]
    MissingCredential(String),
    #[error("malformed completion: {0}")]
    BadResponse(String),
}

/// What a backend is asked to complete.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub agent_name: String,
    pub system: Option<String>,
    pub prompt: String,
    pub parts: Vec<ContentPart>,
    /// Master-loop round the call belongs to, when there is one. Mocks match
    /// on it; remote backends ignore it.
    pub round: Option<u32>,
    pub timeout: Duration,
    pub temperature: f64,
    pub max_tokens: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub text: String,
    /// Latency the backend wants reported instead of measured wall clock.
    pub reported_latency: Option<Duration>,
}

pub trait Backend: Send + Sync + fmt::Debug {
    fn complete(&self, request: &CompletionRequest) -> Result<Completion, PoolError>;

    /// Cheap liveness probe used by `pool check --live`.
    fn ping(&self, timeout: Duration) -> Result<(), PoolError> {
        let request = CompletionRequest {
            agent_name: "ping".into(),
            system: None,
            prompt: "ping".into(),
            parts: Vec::new(),
            round: None,
            timeout,
            temperature: 0.0,
            max_tokens: 1,
        };
        self.complete(&request).map(|_| ())
    }
}

/// Per-call knobs supplied by the caller; backend config values win where
/// both are set.
#[derive(Debug, Clone, PartialEq)]
pub struct CallOptions {
    pub system: Option<String>,
    pub round: Option<u32>,
    pub timeout: Duration,
    pub temperature: f64,
    pub frame_count: usize,
}

impl Default for CallOptions {
    fn default() -> Self {
        Self {
            system: None,
            round: None,
            timeout: Duration::from_secs(120),
            temperature: 0.0,
            frame_count: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Invocation {
    pub answer: String,
    pub latency: Duration,
}

#[derive(Debug, Clone)]
struct Registered {
    spec: AgentSpec,
    backend: Arc<dyn Backend>,
    config: BackendConfig,
}

#[derive(Debug, Clone, Default)]
pub struct ModelPool {
    agents: Vec<Registered>,
    by_name: HashMap<String, usize>,
    backends: HashMap<String, (BackendConfig, Arc<dyn Backend>)>,
}

impl ModelPool {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a backend built from its config. Re-adding an existing id keeps
    /// the first instance.
    pub fn add_backend(&mut self, config: BackendConfig) -> Result<(), PoolError> {
        if self.backends.contains_key(&config.backend_id) {
            return Ok(());
        }
        let backend = config.build()?;
        self.backends
            .insert(config.backend_id.clone(), (config, backend));
        Ok(())
    }

    /// Adds a backend instance directly, e.g. a shared [`MockBackend`].
    pub fn add_backend_instance(&mut self, config: BackendConfig, backend: Arc<dyn Backend>) {
        self.backends
            .insert(config.backend_id.clone(), (config, backend));
    }

    pub fn register(&mut self, spec: AgentSpec, config: BackendConfig) -> Result<(), PoolError> {
        if self.by_name.contains_key(&spec.agent_name) {
            return Err(PoolError::DuplicateAgent(spec.agent_name));
        }
        if spec.backend_id != config.backend_id {
            return Err(PoolError::UnknownBackend(spec.backend_id));
        }
        self.add_backend(config)?;
        self.register_agent(spec)
    }

    /// Registers an agent against a backend that was already added.
    pub fn register_agent(&mut self, spec: AgentSpec) -> Result<(), PoolError> {
        if self.by_name.contains_key(&spec.agent_name) {
            return Err(PoolError::DuplicateAgent(spec.agent_name));
        }
        let (config, backend) = self
            .backends
            .get(&spec.backend_id)
            .cloned()
            .ok_or_else(|| PoolError::UnknownBackend(spec.backend_id.clone()))?;
        self.by_name.insert(spec.agent_name.clone(), self.agents.len());
        self.agents.push(Registered {
            spec,
            backend,
            config,
        });
        Ok(())
    }

    /// Convenience for tests and the CLI: one shared backend serving every
    /// agent.
    pub fn with_shared_backend(
        config: BackendConfig,
        backend: Arc<dyn Backend>,
        agents: impl IntoIterator<Item = AgentSpec>,
    ) -> Result<Self, PoolError> {
        let mut pool = Self::new();
        pool.add_backend_instance(config.clone(), backend);
        for mut spec in agents {
            spec.backend_id = config.backend_id.clone();
            pool.register_agent(spec)?;
        }
        Ok(pool)
    }

    pub fn resolve(&self, agent_name: &str) -> Result<(&AgentSpec, &BackendConfig), PoolError> {
        self.by_name
            .get(agent_name)
            .map(|&i| (&self.agents[i].spec, &self.agents[i].config))
            .ok_or_else(|| PoolError::UnknownAgent(agent_name.to_string()))
    }

    pub fn specs(&self) -> Vec<AgentSpec> {
        self.agents.iter().map(|r| r.spec.clone()).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn master(&self) -> Option<&AgentSpec> {
        self.agents
            .iter()
            .map(|r| &r.spec)
            .find(|s| s.modality == AgentKind::Master)
    }

    /// First registered agent declared for `modality`.
    pub fn agent_for(&self, modality: ModalityKind) -> Option<&AgentSpec> {
        self.agents
            .iter()
            .map(|r| &r.spec)
            .find(|s| s.modality.modality() == Some(modality))
    }

    pub fn backends(&self) -> impl Iterator<Item = (&BackendConfig, &Arc<dyn Backend>)> {
        self.backends.values().map(|(c, b)| (c, b))
    }

    /// One line per delegate agent in registration order; the master is
    /// omitted.
    pub fn describe_pool(&self) -> Result<String, PoolError> {
        let text = describe_agents(&self.specs());
        if text.is_empty() {
            return Err(PoolError::EmptyPool);
        }
        Ok(text)
    }

    pub fn invoke(
        &self,
        agent_name: &str,
        prompt: &str,
        attachments: &[InputItem],
    ) -> Result<Invocation, PoolError> {
        self.invoke_with(agent_name, prompt, attachments, &CallOptions::default())
    }

    pub fn invoke_with(
        &self,
        agent_name: &str,
        prompt: &str,
        attachments: &[InputItem],
        options: &CallOptions,
    ) -> Result<Invocation, PoolError> {
        let &idx = self
            .by_name
            .get(agent_name)
            .ok_or_else(|| PoolError::UnknownAgent(agent_name.to_string()))?;
        let entry = &self.agents[idx];
        let parts = match entry.spec.modality.modality() {
            Some(modality) => encode_attachments(modality, attachments, options.frame_count)
                .map_err(|e| match e {
                    PoolError::ModalityMismatch { modality, .. } => PoolError::ModalityMismatch {
                        agent: agent_name.to_string(),
                        agent_kind: entry.spec.modality,
                        modality,
                    },
                    other => other,
                })?,
            None => {
                if let Some(bad) = attachments.iter().find(|a| a.modality != ModalityKind::Text) {
                    return Err(PoolError::ModalityMismatch {
                        agent: agent_name.to_string(),
                        agent_kind: AgentKind::Master,
                        modality: bad.modality,
                    });
                }
                encode_attachments(ModalityKind::Text, attachments, options.frame_count)?
            }
        };
        let request = CompletionRequest {
            agent_name: agent_name.to_string(),
            system: options.system.clone(),
            prompt: prompt.to_string(),
            parts,
            round: options.round,
            timeout: entry
                .config
                .timeout_s
                .map(Duration::from_secs_f64)
                .unwrap_or(options.timeout),
            temperature: entry.config.temperature.unwrap_or(options.temperature),
            max_tokens: entry.config.max_tokens,
        };
        let started = Instant::now();
        let completion = entry.backend.complete(&request)?;
        let latency = completion
            .reported_latency
            .unwrap_or_else(|| started.elapsed());
        Ok(Invocation {
            answer: completion.text,
            latency,
        })
    }
}
