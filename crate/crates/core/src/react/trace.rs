use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// JSON Schema for serialized [`ReActTrace`]s.
pub const TRACE_JSON_SCHEMA: &str = include_str!("../../assets/trace.schema.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AgentAction {
    ToolCall { tool: String, input: Value },
    LanguageDelegate { agent: String, input: String },
    FinalAnswer { text: String },
    /// The completion could not be parsed; the step carries a corrective
    /// observation instead of a tool result.
    Unparsed { error: String },
}

impl AgentAction {
    pub fn is_final(&self) -> bool {
        matches!(self, AgentAction::FinalAnswer { .. })
    }

    /// (name, input) for invocations.
    pub fn invocation(&self) -> Option<(&str, Value)> {
        match self {
            AgentAction::ToolCall { tool, input } => Some((tool, input.clone())),
            AgentAction::LanguageDelegate { agent, input } => Some((agent, Value::String(input.clone()))),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReActStep {
    pub index: u32,
    pub thought: Option<String>,
    pub action: AgentAction,
    /// The completion as returned by the backend.
    pub raw_text: String,
    pub observation: Option<String>,
    pub started_at: DateTime<Utc>,
    pub ended_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outcome {
    Answered { text: String },
    StepBudgetExhausted,
    BackendError { message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReActTrace {
    pub agent: String,
    pub input: String,
    pub steps: Vec<ReActStep>,
    /// One per `LanguageDelegate` step, in step order.
    pub child_traces: Vec<ReActTrace>,
    pub outcome: Outcome,
}

impl ReActTrace {
    pub fn answer(&self) -> Option<&str> {
        match &self.outcome {
            Outcome::Answered { text } => Some(text),
            _ => None,
        }
    }

    pub fn last_thought(&self) -> Option<&str> {
        self.steps.iter().rev().find_map(|s| s.thought.as_deref())
    }

    pub fn delegate_count(&self) -> usize {
        self.steps
            .iter()
            .filter(|s| matches!(s.action, AgentAction::LanguageDelegate { .. }))
            .count()
    }

    /// Checks the structural invariants; returns the first violation.
    pub fn check_invariants(&self) -> Result<(), String> {
        for (i, s) in self.steps.iter().enumerate() {
            if s.index as usize != i {
                return Err(format!("{}: step {} has index {}", self.agent, i, s.index));
            }
            if s.action.is_final() && s.observation.is_some() {
                return Err(format!("{}: final step {} has an observation", self.agent, i));
            }
        }
        let answered = matches!(self.outcome, Outcome::Answered { .. });
        let last_final = self.steps.last().is_some_and(|s| s.action.is_final());
        if answered != last_final {
            return Err(format!("{}: outcome/final-step mismatch", self.agent));
        }
        if self.delegate_count() != self.child_traces.len() {
            return Err(format!(
                "{}: {} delegations but {} child traces",
                self.agent,
                self.delegate_count(),
                self.child_traces.len()
            ));
        }
        self.child_traces.iter().try_for_each(ReActTrace::check_invariants)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("trace serializes")
    }
}
