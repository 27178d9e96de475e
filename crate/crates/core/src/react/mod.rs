//! ReAct agents: completion parsing, prompt rendering, the
//! reason/act/observe loop, and supervisor/assistant composition.

mod events;
mod hierarchy;
mod parse;
mod prompt;
mod runner;
mod spec;
mod trace;

use std::path::Path;

use serde_json::Value;
use thiserror::Error;

use crate::clock::Clock;
use crate::gateway::LlmBackend;

pub use events::{
    flatten_trace_events, AgentEvent, CollectingSink, EventKind, EventSink, LoopEvent, NullSink,
    SequencingSink,
};
pub use hierarchy::{compose_hierarchy, Hierarchy};
pub use parse::{parse_react_output, render_react_output, ParseError, ParsedAction, ParsedOutput, FINAL_ANSWER_ACTION};
pub use prompt::{
    fill_template, render_prompt, render_scratchpad, Prompt, ToolDescriptor, REACT_SYSTEM_TEMPLATE,
    REACT_USER_TEMPLATE, SUPERVISOR_PREAMBLE,
};
pub use runner::{run_react_loop, unknown_tool_observation};
pub use spec::{AgentSpec, Role, DEFAULT_ASSISTANT_STEPS, DEFAULT_SUPERVISOR_STEPS};
pub use trace::{AgentAction, Outcome, ReActStep, ReActTrace, TRACE_JSON_SCHEMA};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReactError {
    #[error("unknown tool `{0}`")]
    UnknownTool(String),
    #[error("agent cycle: {0}")]
    CycleError(String),
    #[error("duplicate agent `{0}`")]
    DuplicateAgent(String),
    #[error("invalid agent spec: {0}")]
    InvalidSpec(String),
}

/// Everything a loop needs besides its spec and tools.
#[derive(Clone, Copy)]
pub struct LoopContext<'a> {
    pub session_id: &'a str,
    pub backend: &'a dyn LlmBackend,
    pub sink: &'a dyn EventSink,
    pub clock: &'a dyn Clock,
    /// Directory tools may write artifacts into.
    pub workspace: Option<&'a Path>,
    /// 0 for the root loop. Only the root emits terminal events.
    pub depth: u32,
}

impl<'a> LoopContext<'a> {
    pub fn child(&self) -> Self {
        Self { depth: self.depth + 1, ..*self }
    }
}

/// Resolves and runs the tools an agent may call.
pub trait Dispatcher: Send + Sync {
    fn describe(&self, name: &str) -> Option<ToolDescriptor>;

    /// True when `name` is an agent, so invoking it is a delegation.
    fn is_agent(&self, _name: &str) -> bool {
        false
    }

    /// Runs a leaf tool; failures come back as `Error on <tool>: ...` text.
    fn call_tool(&self, name: &str, input: &Value, ctx: &LoopContext<'_>) -> String;

    /// Runs an agent to completion on `input`.
    fn delegate(&self, agent: &str, input: &str, ctx: &LoopContext<'_>) -> ReActTrace {
        let _ = ctx;
        ReActTrace {
            agent: agent.into(),
            input: input.into(),
            steps: Vec::new(),
            child_traces: Vec::new(),
            outcome: Outcome::BackendError { message: format!("`{agent}` is not an agent") },
        }
    }
}
