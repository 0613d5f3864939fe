//! Pool configuration file (TOML).
//!
//! ```toml
//! [loop]
//! max_loops = 3
//!
//! [[backends]]
//! backend_id = "claude"
//! kind = "remote"
//! endpoint = "https://gateway.example/v1/chat/completions"
//! model_id = "claude-3-7-sonnet"
//! auth_ref = "CLAUDE_API_KEY"
//!
//! [[agents]]
//! agent_name = "master"
//! modality = "master"
//! role = "Central controller for reasoning and decision-making"
//! backend_id = "claude"
//! ```

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Backend, MockBackend, MockScript, ModelPool, PoolError, RemoteBackend};
use crate::types::{AgentKind, AgentSpec, LoopConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Remote,
    Mock,
}

/// Mock scripts live inline in the pool file or in a separate JSON/TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MockScriptSource {
    File(PathBuf),
    Inline(MockScript),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendConfig {
    pub backend_id: String,
    pub kind: BackendKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_id: Option<String>,
    /// Name of the environment variable holding the bearer token.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auth_ref: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timeout_s: Option<f64>,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    #[serde(default = "default_retry_count")]
    pub retry_count: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub script: Option<MockScriptSource>,
}

fn default_max_tokens() -> u32 {
    2048
}

fn default_retry_count() -> u32 {
    1
}

impl BackendConfig {
    pub fn remote(backend_id: &str, endpoint: &str, model_id: &str) -> Self {
        Self {
            backend_id: backend_id.into(),
            kind: BackendKind::Remote,
            endpoint: Some(endpoint.into()),
            model_id: Some(model_id.into()),
            auth_ref: None,
            timeout_s: None,
            max_tokens: default_max_tokens(),
            temperature: None,
            retry_count: default_retry_count(),
            script: None,
        }
    }

    pub fn mock(backend_id: &str) -> Self {
        Self {
            backend_id: backend_id.into(),
            kind: BackendKind::Mock,
            endpoint: None,
            model_id: None,
            auth_ref: None,
            timeout_s: None,
            max_tokens: default_max_tokens(),
            temperature: None,
            retry_count: 0,
            script: None,
        }
    }

    pub fn check(&self) -> Result<(), String> {
        if self.kind == BackendKind::Remote {
            if self.endpoint.as_deref().is_none_or(str::is_empty) {
                return Err(format!("backend {}: remote backend needs an endpoint", self.backend_id));
            }
            if self.model_id.as_deref().is_none_or(str::is_empty) {
                return Err(format!("backend {}: remote backend needs a model_id", self.backend_id));
            }
        }
        if let Some(t) = self.timeout_s {
            if t.is_nan() || t <= 0.0 {
                return Err(format!("backend {}: timeout_s must be positive", self.backend_id));
            }
        }
        Ok(())
    }

    pub(crate) fn build(&self) -> Result<Arc<dyn Backend>, PoolError> {
        match self.kind {
            BackendKind::Remote => {
                let (Some(endpoint), Some(model)) = (&self.endpoint, &self.model_id) else {
                    return Err(PoolError::UnknownBackend(format!(
                        "{} (remote backend missing endpoint or model_id)",
                        self.backend_id
                    )));
                };
                Ok(Arc::new(RemoteBackend::new(
                    endpoint.clone(),
                    model.clone(),
                    self.auth_ref.clone(),
                    self.retry_count,
                )))
            }
            BackendKind::Mock => {
                let script = match &self.script {
                    Some(MockScriptSource::Inline(s)) => s.clone(),
                    Some(MockScriptSource::File(path)) => load_script(path).map_err(|e| {
                        PoolError::UnknownBackend(format!("{}: {e}", self.backend_id))
                    })?,
                    None => MockScript::default(),
                };
                Ok(Arc::new(MockBackend::new(script)))
            }
        }
    }
}

fn load_script(path: &Path) -> Result<MockScript, PoolConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| PoolConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let is_json = path.extension().is_some_and(|e| e == "json");
    if is_json {
        serde_json::from_str(&text).map_err(|e| PoolConfigError::Parse {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
    } else {
        toml::from_str(&text).map_err(|e| PoolConfigError::Parse {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PoolConfigError {
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse {}: {reason}", path.display())]
    Parse { path: PathBuf, reason: String },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Pool(#[from] PoolError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolFile {
    #[serde(default, rename = "loop", skip_serializing_if = "Option::is_none")]
    pub loop_config: Option<LoopConfig>,
    #[serde(default)]
    pub backends: Vec<BackendConfig>,
    #[serde(default)]
    pub agents: Vec<AgentSpec>,
}

impl PoolFile {
    /// Reads and validates a pool file. Relative mock script paths resolve
    /// against the file's directory.
    pub fn load(path: &Path) -> Result<Self, PoolConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| PoolConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut file: PoolFile = toml::from_str(&text).map_err(|e| PoolConfigError::Parse {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        for b in &mut file.backends {
            if let Some(MockScriptSource::File(p)) = &mut b.script {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        file.validate()?;
        Ok(file)
    }

    pub fn validate(&self) -> Result<(), PoolConfigError> {
        let invalid = |m: String| Err(PoolConfigError::Invalid(m));
        if self.agents.is_empty() {
            return invalid("pool has no agents".into());
        }
        let masters = self
            .agents
            .iter()
            .filter(|a| a.modality == AgentKind::Master)
            .count();
        match masters {
            0 => return invalid("no master agent".into()),
            1 => {}
            n => return invalid(format!("expected exactly one master agent, found {n}")),
        }
        let mut backend_ids = HashSet::new();
        for b in &self.backends {
            b.check().map_err(PoolConfigError::Invalid)?;
            if !backend_ids.insert(b.backend_id.as_str()) {
                return invalid(format!("duplicate backend: {}", b.backend_id));
            }
        }
        let mut names = HashSet::new();
        for a in &self.agents {
            if !names.insert(a.agent_name.as_str()) {
                return invalid(format!("duplicate agent: {}", a.agent_name));
            }
            if !backend_ids.contains(a.backend_id.as_str()) {
                return invalid(format!(
                    "agent {} references unknown backend {}",
                    a.agent_name, a.backend_id
                ));
            }
        }
        if let Some(cfg) = &self.loop_config {
            cfg.validate()
                .map_err(|e| PoolConfigError::Invalid(e.to_string()))?;
        }
        Ok(())
    }

    pub fn build(&self) -> Result<ModelPool, PoolConfigError> {
        self.validate()?;
        let mut pool = ModelPool::new();
        for b in &self.backends {
            pool.add_backend(b.clone())?;
        }
        for a in &self.agents {
            pool.register_agent(a.clone())?;
        }
        Ok(pool)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE_POOL: &str = r#"
[loop]
max_loops = 2

[[backends]]
backend_id = "claude"
kind = "remote"
endpoint = "http://127.0.0.1:9/v1/chat/completions"
model_id = "claude-3-7-sonnet"
auth_ref = "CLAUDE_KEY"

[[backends]]
backend_id = "local"
kind = "mock"
[backends.script]
default_response = "ok"

[[agents]]
agent_name = "master"
modality = "master"
role = "Central controller for reasoning and decision-making"
backend_id = "claude"

[[agents]]
agent_name = "audio_agent"
modality = "audio"
role = "Provides audio comprehension and speech reasoning"
backend_id = "local"
"#;

    #[test]
    fn parses_and_builds() {
        let file: PoolFile = toml::from_str(SAMPLE_POOL).unwrap();
        file.validate().unwrap();
        assert_eq!(file.loop_config.as_ref().unwrap().max_loops, 2);
        assert_eq!(file.loop_config.as_ref().unwrap().json_repair_retries, 2);
        let pool = file.build().unwrap();
        assert_eq!(pool.len(), 2);
        assert_eq!(pool.invoke("audio_agent", "hi", &[]).unwrap().answer, "ok");
    }

    #[test]
    fn rejects_missing_master_and_bad_remote() {
        let mut file: PoolFile = toml::from_str(SAMPLE_POOL).unwrap();
        file.agents.retain(|a| a.modality != AgentKind::Master);
        assert_eq!(file.validate().unwrap_err().to_string(), "no master agent");

        let mut file: PoolFile = toml::from_str(SAMPLE_POOL).unwrap();
        file.backends[0].endpoint = None;
        assert!(file.validate().unwrap_err().to_string().contains("endpoint"));

        let mut file: PoolFile = toml::from_str(SAMPLE_POOL).unwrap();
        file.agents[1].backend_id = "nope".into();
        assert!(file.validate().is_err());
    }

    #[test]
    fn script_file_resolves_relative() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("script.json"),
            r#"{"rules":[{"agent":"master","response":"scripted"}]}"#,
        )
        .unwrap();
        std::fs::write(
            dir.path().join("pool.toml"),
            r#"
[[backends]]
backend_id = "m"
kind = "mock"
script = "script.json"

[[agents]]
agent_name = "master"
modality = "master"
role = "ctl"
backend_id = "m"
"#,
        )
        .unwrap();
        let file = PoolFile::load(&dir.path().join("pool.toml")).unwrap();
        let pool = file.build().unwrap();
        assert_eq!(pool.invoke("master", "x", &[]).unwrap().answer, "scripted");
    }
}
