//! Chat-completion backends.
//!
//! [`LlmBackend`] is the only thing agent loops know about. Live traffic goes
//! through [`OpenAiBackend`]; tests and demos use [`ReplayBackend`] over a
//! JSON-lines transcript, optionally captured with [`RecordingBackend`].

mod fixture;
mod openai;
mod record;
mod replay;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use fixture::{load_fixture, parse_fixture, prompt_digest, write_entry, FixtureEntry};
pub use openai::{OpenAiBackend, RetryPolicy};
pub use record::RecordingBackend;
pub use replay::ReplayBackend;

/// Always passed to the model so it cannot invent tool output.
pub const OBSERVATION_STOP: &str = "Observation:";

#[derive(Debug, Clone, PartialEq)]
pub struct CompletionRequest {
    pub session_id: String,
    pub agent: String,
    pub system: String,
    pub user: String,
    pub stop: Vec<String>,
}

impl CompletionRequest {
    pub fn digest(&self) -> String {
        prompt_digest(&self.system, &self.user)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GatewayError {
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("fixture exhausted for session `{session}`, agent `{agent}`")]
    FixtureExhausted { session: String, agent: String },
    #[error("transport error after {attempts} attempt(s){}: {message}", status.map(|s| format!(" (HTTP {s})")).unwrap_or_default())]
    Transport { message: String, attempts: u32, status: Option<u16> },
    #[error("bad response: {0}")]
    BadResponse(String),
    #[error("fixture: {0}")]
    Fixture(String),
    #[error("config: {0}")]
    Config(String),
    #[error("write failed: {0}")]
    Write(String),
}

pub trait LlmBackend: Send + Sync {
    fn complete(&self, request: &CompletionRequest) -> Result<String, GatewayError>;
}

impl<T: LlmBackend + ?Sized> LlmBackend for std::sync::Arc<T> {
    fn complete(&self, request: &CompletionRequest) -> Result<String, GatewayError> {
        (**self).complete(request)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Live,
    Replay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendConfig {
    pub kind: BackendKind,
    #[serde(default)]
    pub base_url: Option<String>,
    #[serde(default)]
    pub model: Option<String>,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_key_env")]
    pub api_key_env: String,
    #[serde(default)]
    pub fixture_path: Option<PathBuf>,
}

fn default_key_env() -> String {
    "LLM_API_KEY".into()
}

impl BackendConfig {
    pub fn replay(path: impl Into<PathBuf>) -> Self {
        Self {
            kind: BackendKind::Replay,
            base_url: None,
            model: None,
            temperature: 0.0,
            api_key_env: default_key_env(),
            fixture_path: Some(path.into()),
        }
    }

    pub fn live(base_url: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            kind: BackendKind::Live,
            base_url: Some(base_url.into()),
            model: Some(model.into()),
            temperature: 0.0,
            api_key_env: default_key_env(),
            fixture_path: None,
        }
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(GatewayError::Config(format!("temperature must be >= 0, got {}", self.temperature)));
        }
        match self.kind {
            BackendKind::Live => {
                if self.base_url.as_deref().is_none_or(str::is_empty) {
                    return Err(GatewayError::Config("live backend requires base_url".into()));
                }
                if self.model.as_deref().is_none_or(str::is_empty) {
                    return Err(GatewayError::Config("live backend requires model".into()));
                }
            }
            BackendKind::Replay => {
                if self.fixture_path.is_none() {
                    return Err(GatewayError::Config("replay backend requires fixture_path".into()));
                }
            }
        }
        Ok(())
    }
}

/// Cuts `text` at the earliest occurrence of any stop sequence.
pub fn truncate_at_stop<'a>(text: &'a str, stops: &[String]) -> &'a str {
    let cut = stops
        .iter()
        .filter(|s| !s.is_empty())
        .filter_map(|s| text.find(s.as_str()))
        .min()
        .unwrap_or(text.len());
    &text[..cut]
}

/// Backend that hands out a fixed list of completions in order, regardless
/// of session or agent. Handy for unit tests of the loop.
#[derive(Debug, Default)]
pub struct ScriptedBackend {
    script: std::sync::Mutex<std::collections::VecDeque<Result<String, GatewayError>>>,
}

impl ScriptedBackend {
    pub fn new<I, S>(completions: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            script: std::sync::Mutex::new(completions.into_iter().map(|s| Ok(s.into())).collect()),
        }
    }

    pub fn push_error(&self, err: GatewayError) {
        self.script.lock().unwrap().push_back(Err(err));
    }
}

impl LlmBackend for ScriptedBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<String, GatewayError> {
        self.script
            .lock()
            .unwrap()
            .pop_front()
            .unwrap_or_else(|| {
                Err(GatewayError::FixtureExhausted {
                    session: request.session_id.clone(),
                    agent: request.agent.clone(),
                })
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stop_truncation() {
        let stops = vec!["Observation:".to_string()];
        assert_eq!(truncate_at_stop("a\nObservation: x", &stops), "a\n");
        assert_eq!(truncate_at_stop("no stop", &stops), "no stop");
        assert_eq!(truncate_at_stop("x", &[String::new()]), "x");
    }

    #[test]
    fn config_validation() {
        assert!(BackendConfig::replay("x.jsonl").validate().is_ok());
        assert!(BackendConfig::live("http://localhost", "m").validate().is_ok());
        let mut c = BackendConfig::live("", "m");
        assert!(c.validate().is_err());
        c.base_url = Some("http://x".into());
        c.temperature = -1.0;
        assert!(c.validate().is_err());
        let mut r = BackendConfig::replay("x");
        r.fixture_path = None;
        assert!(r.validate().is_err());
    }

    #[test]
    fn config_from_toml_like_json() {
        let c: BackendConfig = serde_json::from_str(r#"{"kind": "replay", "fixture_path": "f.jsonl"}"#).unwrap();
        assert_eq!(c.api_key_env, "LLM_API_KEY");
        assert_eq!(c.kind, BackendKind::Replay);
    }
}
