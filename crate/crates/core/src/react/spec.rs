use serde::{Deserialize, Serialize};

use super::prompt::SUPERVISOR_PREAMBLE;
use super::ReactError;

pub const DEFAULT_ASSISTANT_STEPS: u32 = 10;
pub const DEFAULT_SUPERVISOR_STEPS: u32 = 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Supervisor,
    Assistant,
}

/// Declarative description of one agent. Immutable once built; share it
/// freely across sessions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSpec {
    pub name: String,
    pub role: Role,
    /// Shown to the supervisor when this agent is offered as a tool.
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub system_preamble: String,
    pub tool_names: Vec<String>,
    pub max_steps: u32,
    #[serde(default = "default_backend")]
    pub backend_ref: String,
}

fn default_backend() -> String {
    "default".into()
}

impl AgentSpec {
    pub fn supervisor(name: impl Into<String>, tool_names: Vec<String>) -> Self {
        Self {
            name: name.into(),
            role: Role::Supervisor,
            description: String::new(),
            system_preamble: SUPERVISOR_PREAMBLE.to_string(),
            tool_names,
            max_steps: DEFAULT_SUPERVISOR_STEPS,
            backend_ref: default_backend(),
        }
    }

    pub fn assistant(name: impl Into<String>, description: impl Into<String>, tool_names: Vec<String>) -> Self {
        Self {
            name: name.into(),
            role: Role::Assistant,
            description: description.into(),
            system_preamble: String::new(),
            tool_names,
            max_steps: DEFAULT_ASSISTANT_STEPS,
            backend_ref: default_backend(),
        }
    }

    pub fn with_max_steps(mut self, max_steps: u32) -> Self {
        self.max_steps = max_steps;
        self
    }

    pub fn validate(&self) -> Result<(), ReactError> {
        if self.name.trim().is_empty() {
            return Err(ReactError::InvalidSpec("agent name is empty".into()));
        }
        if self.max_steps < 1 {
            return Err(ReactError::InvalidSpec(format!("{}: max_steps must be at least 1", self.name)));
        }
        let mut seen = std::collections::HashSet::new();
        for t in &self.tool_names {
            if !seen.insert(t) {
                return Err(ReactError::InvalidSpec(format!("{}: duplicate tool `{t}`", self.name)));
            }
        }
        Ok(())
    }
}
