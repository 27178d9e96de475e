//! Wiring from configuration to a runnable agent system.

use std::sync::Arc;
use std::time::Duration;

use mpagent_core::gateway::{load_fixture, BackendKind, GatewayError, LlmBackend, OpenAiBackend, ReplayBackend};
use mpagent_core::http::HttpClient;
use mpagent_core::react::ReactError;
use mpagent_core::toolkit::{standard_agents, MockMaterialsServer, MpEndpoint, ProcessTool, ToolEnv, Toolbox};
use mpagent_core::AgentSystem;
use thiserror::Error;

use crate::config::{Config, ConfigError};
use crate::transport::UreqHttp;

#[derive(Debug, Error)]
pub enum RuntimeError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Agents(#[from] ReactError),
    #[error("loading mock dataset: {0}")]
    Dataset(std::io::Error),
    #[error("{0}")]
    Replay(String),
}

pub enum Backend {
    Replay(ReplayBackend),
    Live(Arc<dyn LlmBackend>),
}

impl Backend {
    pub fn is_replay(&self) -> bool {
        matches!(self, Backend::Replay(_))
    }

    /// A backend for one run. Replay runs get fresh cursors; `pin` selects
    /// the recorded session to follow regardless of the live session id.
    pub fn for_run(&self, pin: Option<&str>) -> Result<Arc<dyn LlmBackend>, RuntimeError> {
        match self {
            Backend::Live(b) => Ok(b.clone()),
            Backend::Replay(r) => match pin {
                Some(s) if r.sessions().iter().any(|x| x == s) => Ok(Arc::new(r.fork_pinned(s))),
                Some(s) => Err(RuntimeError::Replay(format!(
                    "replay fixture has no session `{s}`; available: {}",
                    r.sessions().join(", ")
                ))),
                None => Ok(Arc::new(r.fork())),
            },
        }
    }

    /// The recorded session to pin when a caller names none: the only one,
    /// if the fixture holds exactly one.
    pub fn default_pin(&self) -> Option<String> {
        match self {
            Backend::Replay(r) => {
                let s = r.sessions();
                (s.len() == 1).then(|| s[0].clone())
            }
            Backend::Live(_) => None,
        }
    }

    pub fn replay_sessions(&self) -> Vec<String> {
        match self {
            Backend::Replay(r) => r.sessions(),
            Backend::Live(_) => Vec::new(),
        }
    }
}

pub struct Runtime {
    pub system: AgentSystem,
    pub backend: Backend,
    pub backend_name: String,
    pub temperature: f64,
}

/// Network transports; tests substitute fakes.
pub struct Transports {
    pub llm: Arc<dyn HttpClient>,
    pub mp: Arc<dyn HttpClient>,
}

impl Transports {
    pub fn from_config(cfg: &Config) -> Result<Self, RuntimeError> {
        let timeout = Duration::from_secs(cfg.mp.timeout_secs.max(1));
        let mp: Arc<dyn HttpClient> = match &cfg.mp.mock_dataset {
            Some(path) => Arc::new(MockMaterialsServer::load(&cfg.mp.base_url, path).map_err(RuntimeError::Dataset)?),
            None => Arc::new(UreqHttp::new(timeout).rate_limited(cfg.mp.requests_per_second)),
        };
        Ok(Self { llm: Arc::new(UreqHttp::new(timeout)), mp })
    }
}

pub fn build_toolbox(cfg: &Config, mp_http: Arc<dyn HttpClient>) -> Toolbox {
    let endpoint = MpEndpoint {
        base_url: cfg.mp.base_url.clone(),
        api_key: std::env::var(&cfg.mp.api_key_env).unwrap_or_default(),
    };
    let mut env = ToolEnv::new(mp_http, endpoint);
    env.observation_budget = cfg.agents.observation_budget;
    let mut toolbox = Toolbox::standard(Arc::new(env));
    for spec in cfg.tools.process.iter().filter(|t| t.enabled) {
        toolbox.register(Arc::new(ProcessTool::new(spec.clone())));
    }
    toolbox
}

impl Runtime {
    pub fn from_config(cfg: &Config, backend_name: Option<&str>) -> Result<Self, RuntimeError> {
        let transports = Transports::from_config(cfg)?;
        Self::with_transports(cfg, backend_name, transports)
    }

    pub fn with_transports(cfg: &Config, backend_name: Option<&str>, transports: Transports) -> Result<Self, RuntimeError> {
        let name = backend_name.unwrap_or(&cfg.agents.backend).to_string();
        let bc = cfg.backend(&name)?;
        let backend = match bc.kind {
            BackendKind::Replay => {
                let path = bc.fixture_path.as_deref().expect("validated replay config");
                Backend::Replay(ReplayBackend::new(load_fixture(path)?))
            }
            BackendKind::Live => Backend::Live(Arc::new(OpenAiBackend::from_env(&bc, transports.llm)?)),
        };
        let toolbox = build_toolbox(cfg, transports.mp);
        let (mut supervisor, mut assistants) = standard_agents(&toolbox);
        if let Some(n) = cfg.agents.supervisor_max_steps {
            supervisor = supervisor.with_max_steps(n);
        }
        if let Some(n) = cfg.agents.assistant_max_steps {
            assistants = assistants.into_iter().map(|a| a.with_max_steps(n)).collect();
        }
        let system = AgentSystem::new(supervisor, assistants, toolbox)?;
        Ok(Self { system, backend, backend_name: name, temperature: bc.temperature })
    }
}
