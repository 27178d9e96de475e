//! Prompt templates and rendering.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::parse::render_action_blob;
use super::spec::AgentSpec;
use super::trace::{AgentAction, ReActStep};
use super::ReactError;

/// ReAct system template; placeholders `{tools}` and `{tool_names}`, with
/// `{{`/`}}` as literal braces.
pub const REACT_SYSTEM_TEMPLATE: &str = include_str!("../../assets/react_system.txt");
/// Prepended to the supervisor's system prompt.
pub const SUPERVISOR_PREAMBLE: &str = include_str!("../../assets/supervisor_preamble.txt");
/// User turn; placeholders `{input}` and `{agent_scratchpad}`.
pub const REACT_USER_TEMPLATE: &str = include_str!("../../assets/react_user.txt");

/// What the model is told about one tool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolDescriptor {
    pub name: String,
    pub description: String,
    /// `{param: {"type": ..., "description": ...}}`
    pub args: Value,
}

impl ToolDescriptor {
    pub fn render(&self) -> String {
        format!("{}: {}, args: {}", self.name, self.description, self.args)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prompt {
    pub system: String,
    pub user: String,
}

/// Single-pass `{name}` substitution. Unknown placeholders are left as is,
/// substituted values are never re-scanned.
pub fn fill_template(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(i) = rest.find(['{', '}']) {
        out.push_str(&rest[..i]);
        rest = &rest[i..];
        if rest.starts_with("{{") {
            out.push('{');
            rest = &rest[2..];
        } else if rest.starts_with("}}") {
            out.push('}');
            rest = &rest[2..];
        } else if rest.starts_with('{') {
            let hit = rest[1..]
                .find('}')
                .map(|end| (&rest[1..1 + end], end))
                .and_then(|(name, end)| vars.iter().find(|(k, _)| *k == name).map(|(_, v)| (*v, end)));
            match hit {
                Some((value, end)) => {
                    out.push_str(value);
                    rest = &rest[end + 2..];
                }
                None => {
                    out.push('{');
                    rest = &rest[1..];
                }
            }
        } else {
            out.push('}');
            rest = &rest[1..];
        }
    }
    out.push_str(rest);
    out
}

fn render_step(step: &ReActStep, out: &mut String) {
    match &step.action {
        AgentAction::Unparsed { .. } => {
            out.push_str(step.raw_text.trim_end());
            out.push('\n');
        }
        action => {
            if let Some(t) = &step.thought {
                out.push_str("Thought: ");
                out.push_str(t);
                out.push('\n');
            }
            match action {
                AgentAction::ToolCall { tool, input } => out.push_str(&render_action_blob(tool, input)),
                AgentAction::LanguageDelegate { agent, input } => {
                    out.push_str(&render_action_blob(agent, &Value::String(input.clone())))
                }
                AgentAction::FinalAnswer { text } => {
                    out.push_str("Final Answer: ");
                    out.push_str(text);
                }
                AgentAction::Unparsed { .. } => unreachable!(),
            }
            out.push('\n');
        }
    }
    if let Some(obs) = &step.observation {
        out.push_str("Observation: ");
        out.push_str(obs);
        out.push('\n');
    }
}

/// Thought/Action/Observation blocks for the steps taken so far.
pub fn render_scratchpad(history: &[ReActStep]) -> String {
    let mut out = String::new();
    for step in history {
        render_step(step, &mut out);
    }
    out
}

/// Builds the system and user messages for the next completion.
pub fn render_prompt(
    spec: &AgentSpec,
    tools: &[ToolDescriptor],
    history: &[ReActStep],
    input: &str,
) -> Result<Prompt, ReactError> {
    let mut ordered = Vec::with_capacity(spec.tool_names.len());
    for name in &spec.tool_names {
        let d = tools
            .iter()
            .find(|t| &t.name == name)
            .ok_or_else(|| ReactError::UnknownTool(name.clone()))?;
        ordered.push(d);
    }
    let tool_text = ordered.iter().map(|d| d.render()).collect::<Vec<_>>().join("\n");
    let names = spec.tool_names.join(", ");
    let body = fill_template(REACT_SYSTEM_TEMPLATE, &[("tools", &tool_text), ("tool_names", &names)]);
    let system = if spec.system_preamble.is_empty() {
        body
    } else {
        format!("{}\n{}", spec.system_preamble.trim_end_matches('\n'), body)
    };
    let scratchpad = render_scratchpad(history);
    let user = fill_template(REACT_USER_TEMPLATE, &[("input", input), ("agent_scratchpad", &scratchpad)]);
    Ok(Prompt { system, user })
}
