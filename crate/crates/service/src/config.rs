//! Service configuration, read from TOML.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use mpagent_core::gateway::{BackendConfig, BackendKind};
use mpagent_core::toolkit::{ProcessToolSpec, DEFAULT_MP_BASE_URL, DEFAULT_OBSERVATION_BUDGET, MP_API_KEY_ENV};
use serde::Deserialize;
use thiserror::Error;

pub const LLM_BASE_URL_ENV: &str = "LLM_BASE_URL";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("parsing {path}: {source}")]
    Parse { path: PathBuf, source: Box<toml::de::Error> },
    #[error("unknown backend `{0}`; configured backends: {1}")]
    UnknownBackend(String, String),
    #[error("backend `{name}`: {reason}")]
    Backend { name: String, reason: String },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub server: ServerConfig,
    #[serde(default)]
    pub mp: MpConfig,
    #[serde(default)]
    pub agents: AgentsConfig,
    #[serde(default)]
    pub backends: BTreeMap<String, BackendConfig>,
    #[serde(default)]
    pub tools: ToolsConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServerConfig {
    #[serde(default = "default_bind")]
    pub bind: String,
    /// Sessions live in `<session_root>/<id>/`.
    #[serde(default = "default_session_root")]
    pub session_root: PathBuf,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self { bind: default_bind(), session_root: default_session_root() }
    }
}

fn default_bind() -> String {
    "127.0.0.1:8080".into()
}

fn default_session_root() -> PathBuf {
    PathBuf::from("sessions")
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MpConfig {
    #[serde(default = "default_mp_base")]
    pub base_url: String,
    #[serde(default = "default_mp_key_env")]
    pub api_key_env: String,
    /// 0 disables client-side rate limiting.
    #[serde(default = "default_rps")]
    pub requests_per_second: u32,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    /// Serve MP queries from a local dataset instead of the network.
    #[serde(default)]
    pub mock_dataset: Option<PathBuf>,
}

impl Default for MpConfig {
    fn default() -> Self {
        Self {
            base_url: default_mp_base(),
            api_key_env: default_mp_key_env(),
            requests_per_second: default_rps(),
            timeout_secs: default_timeout(),
            mock_dataset: None,
        }
    }
}

fn default_mp_base() -> String {
    DEFAULT_MP_BASE_URL.into()
}

fn default_mp_key_env() -> String {
    MP_API_KEY_ENV.into()
}

fn default_rps() -> u32 {
    5
}

fn default_timeout() -> u64 {
    60
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentsConfig {
    /// Name of the entry in `[backends]` used by default.
    #[serde(default = "default_backend")]
    pub backend: String,
    #[serde(default)]
    pub supervisor_max_steps: Option<u32>,
    #[serde(default)]
    pub assistant_max_steps: Option<u32>,
    #[serde(default = "default_budget")]
    pub observation_budget: usize,
}

impl Default for AgentsConfig {
    fn default() -> Self {
        Self {
            backend: default_backend(),
            supervisor_max_steps: None,
            assistant_max_steps: None,
            observation_budget: default_budget(),
        }
    }
}

fn default_backend() -> String {
    "replay".into()
}

fn default_budget() -> usize {
    DEFAULT_OBSERVATION_BUDGET
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToolsConfig {
    #[serde(default)]
    pub process: Vec<ProcessToolSpec>,
}

impl Config {
    pub fn from_toml(text: &str, origin: &Path) -> Result<Self, ConfigError> {
        let mut cfg: Config = toml::from_str(text)
            .map_err(|e| ConfigError::Parse { path: origin.to_path_buf(), source: Box::new(e) })?;
        // relative paths are relative to the config file
        let base = origin.parent().unwrap_or(Path::new(""));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        rebase(&mut cfg.server.session_root);
        if let Some(p) = cfg.mp.mock_dataset.as_mut() {
            rebase(p);
        }
        for b in cfg.backends.values_mut() {
            if let Some(p) = b.fixture_path.as_mut() {
                rebase(p);
            }
        }
        for t in &mut cfg.tools.process {
            rebase(&mut t.workdir);
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read { path: path.to_path_buf(), source: e })?;
        Self::from_toml(&text, path)
    }

    /// The named backend, with `LLM_BASE_URL` overriding a live backend's
    /// base URL when set.
    pub fn backend(&self, name: &str) -> Result<BackendConfig, ConfigError> {
        let mut b = self.backends.get(name).cloned().ok_or_else(|| {
            ConfigError::UnknownBackend(name.into(), self.backends.keys().cloned().collect::<Vec<_>>().join(", "))
        })?;
        if b.kind == BackendKind::Live {
            if let Ok(url) = std::env::var(LLM_BASE_URL_ENV) {
                if !url.trim().is_empty() {
                    b.base_url = Some(url);
                }
            }
        }
        b.validate().map_err(|e| ConfigError::Backend { name: name.into(), reason: e.to_string() })?;
        Ok(b)
    }
}
