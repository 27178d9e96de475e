use serde_json::Value;

use super::events::{
    action_event, delegate_end_event, delegate_start_event, observation_event, terminal_event, thought_event,
};
use super::parse::{parse_react_output, ParsedAction};
use super::prompt::{render_prompt, ToolDescriptor};
use super::spec::AgentSpec;
use super::trace::{AgentAction, Outcome, ReActStep, ReActTrace};
use super::{Dispatcher, LoopContext, ReactError};
use crate::gateway::{CompletionRequest, OBSERVATION_STOP};

pub fn unknown_tool_observation(name: &str, valid: &[String]) -> String {
    format!("Error on {name}: unknown tool. Valid tools are: {}", valid.join(", "))
}

/// Delegation input is the raw `action_input`: strings pass through, other
/// values as compact JSON.
fn delegate_input(input: &Value) -> String {
    match input {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn delegation_observation(child: &ReActTrace) -> String {
    match &child.outcome {
        Outcome::Answered { text } => text.clone(),
        Outcome::StepBudgetExhausted => format!(
            "Error on {}: step budget exhausted after {} steps without a final answer. Last thought: {}",
            child.agent,
            child.steps.len(),
            child.last_thought().unwrap_or("(none)")
        ),
        Outcome::BackendError { message } => {
            format!("Error on {}: assistant failed: {message}", child.agent)
        }
    }
}

/// Runs one agent until it answers, fails, or runs out of steps.
///
/// Backend failures end the loop with [`Outcome::BackendError`] and keep the
/// partial trace; `Err` is reserved for an unresolvable spec.
pub fn run_react_loop(
    spec: &AgentSpec,
    input: &str,
    dispatcher: &dyn Dispatcher,
    ctx: &LoopContext<'_>,
) -> Result<ReActTrace, ReactError> {
    spec.validate()?;
    let tools: Vec<ToolDescriptor> = spec
        .tool_names
        .iter()
        .map(|n| dispatcher.describe(n).ok_or_else(|| ReactError::UnknownTool(n.clone())))
        .collect::<Result<_, _>>()?;

    let agent = spec.name.as_str();
    let mut trace = ReActTrace {
        agent: spec.name.clone(),
        input: input.to_string(),
        steps: Vec::new(),
        child_traces: Vec::new(),
        outcome: Outcome::StepBudgetExhausted,
    };
    let _span = tracing::debug_span!("react_loop", agent, depth = ctx.depth).entered();

    for index in 0..spec.max_steps {
        let started_at = ctx.clock.now();
        let prompt = render_prompt(spec, &tools, &trace.steps, input)?;
        let request = CompletionRequest {
            session_id: ctx.session_id.to_string(),
            agent: spec.name.clone(),
            system: prompt.system,
            user: prompt.user,
            stop: vec![OBSERVATION_STOP.to_string()],
        };
        let raw_text = match ctx.backend.complete(&request) {
            Ok(text) => text,
            Err(e) => {
                tracing::warn!(agent, step = index, error = %e, "backend failed");
                trace.outcome = Outcome::BackendError { message: e.to_string() };
                break;
            }
        };

        let (thought, action, observation) = match parse_react_output(&raw_text) {
            Ok(parsed) => {
                if let Some(t) = &parsed.thought {
                    ctx.sink.emit(thought_event(agent, index, t));
                }
                match parsed.action {
                    ParsedAction::Final(text) => {
                        let action = AgentAction::FinalAnswer { text: text.clone() };
                        ctx.sink.emit(action_event(agent, index, &action));
                        trace.outcome = Outcome::Answered { text };
                        (parsed.thought, action, None)
                    }
                    ParsedAction::Invoke { name, input: args } => {
                        let allowed = spec.tool_names.contains(&name);
                        if allowed && dispatcher.is_agent(&name) {
                            let task = delegate_input(&args);
                            let action = AgentAction::LanguageDelegate { agent: name.clone(), input: task.clone() };
                            ctx.sink.emit(action_event(agent, index, &action));
                            ctx.sink.emit(delegate_start_event(agent, index, &name, &task));
                            let child = dispatcher.delegate(&name, &task, &ctx.child());
                            ctx.sink.emit(delegate_end_event(agent, index, &child));
                            let obs = delegation_observation(&child);
                            trace.child_traces.push(child);
                            (parsed.thought, action, Some(obs))
                        } else {
                            let action = AgentAction::ToolCall { tool: name.clone(), input: args.clone() };
                            ctx.sink.emit(action_event(agent, index, &action));
                            let obs = if allowed {
                                dispatcher.call_tool(&name, &args, ctx)
                            } else {
                                unknown_tool_observation(&name, &spec.tool_names)
                            };
                            (parsed.thought, action, Some(obs))
                        }
                    }
                }
            }
            Err(e) => {
                let action = AgentAction::Unparsed { error: e.to_string() };
                ctx.sink.emit(action_event(agent, index, &action));
                (None, action, Some(e.corrective_observation()))
            }
        };
        if let Some(obs) = &observation {
            ctx.sink.emit(observation_event(agent, index, obs));
        }
        let done = action.is_final();
        trace.steps.push(ReActStep {
            index,
            thought,
            action,
            raw_text,
            observation,
            started_at,
            ended_at: ctx.clock.now(),
        });
        if done {
            break;
        }
    }

    if ctx.depth == 0 {
        ctx.sink.emit(terminal_event(&trace));
    }
    Ok(trace)
}
