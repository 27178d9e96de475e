//! Step-granularity events streamed while a loop runs.

use std::sync::{Arc, Mutex};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::trace::{AgentAction, Outcome, ReActStep, ReActTrace};
use crate::clock::Clock;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Thought,
    Action,
    Observation,
    DelegateStart,
    DelegateEnd,
    Final,
    Error,
}

impl EventKind {
    pub fn is_terminal(self) -> bool {
        matches!(self, EventKind::Final | EventKind::Error)
    }
}

/// An event as produced by a loop, before sequencing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopEvent {
    pub kind: EventKind,
    pub agent: String,
    pub payload: Value,
}

/// A sequenced event as stored and streamed by the chat service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentEvent {
    pub session_id: String,
    pub seq: u64,
    pub kind: EventKind,
    pub agent: String,
    pub payload: Value,
    pub at: DateTime<Utc>,
}

impl AgentEvent {
    pub fn loop_event(&self) -> LoopEvent {
        LoopEvent { kind: self.kind, agent: self.agent.clone(), payload: self.payload.clone() }
    }
}

pub trait EventSink: Send + Sync {
    fn emit(&self, event: LoopEvent);
}

#[derive(Debug, Default, Clone, Copy)]
pub struct NullSink;

impl EventSink for NullSink {
    fn emit(&self, _event: LoopEvent) {}
}

#[derive(Debug, Default)]
pub struct CollectingSink {
    events: Mutex<Vec<LoopEvent>>,
}

impl CollectingSink {
    pub fn events(&self) -> Vec<LoopEvent> {
        self.events.lock().unwrap().clone()
    }
}

impl EventSink for CollectingSink {
    fn emit(&self, event: LoopEvent) {
        self.events.lock().unwrap().push(event);
    }
}

/// Stamps events with a per-session sequence number and time, then hands
/// them on. Stamping and forwarding happen under one lock, so forwarded
/// order always equals seq order.
pub struct SequencingSink {
    session_id: String,
    clock: Arc<dyn Clock>,
    next_seq: Mutex<u64>,
    forward: Box<dyn Fn(AgentEvent) + Send + Sync>,
}

impl SequencingSink {
    pub fn new(
        session_id: impl Into<String>,
        first_seq: u64,
        clock: Arc<dyn Clock>,
        forward: impl Fn(AgentEvent) + Send + Sync + 'static,
    ) -> Self {
        Self {
            session_id: session_id.into(),
            clock,
            next_seq: Mutex::new(first_seq),
            forward: Box::new(forward),
        }
    }

    pub fn next_seq(&self) -> u64 {
        *self.next_seq.lock().unwrap()
    }
}

impl EventSink for SequencingSink {
    fn emit(&self, event: LoopEvent) {
        let mut seq = self.next_seq.lock().unwrap();
        let stamped = AgentEvent {
            session_id: self.session_id.clone(),
            seq: *seq,
            kind: event.kind,
            agent: event.agent,
            payload: event.payload,
            at: self.clock.now(),
        };
        *seq += 1;
        (self.forward)(stamped);
    }
}

pub(crate) fn thought_event(agent: &str, step: u32, thought: &str) -> LoopEvent {
    LoopEvent { kind: EventKind::Thought, agent: agent.into(), payload: json!({"step": step, "text": thought}) }
}

pub(crate) fn action_event(agent: &str, step: u32, action: &AgentAction) -> LoopEvent {
    LoopEvent {
        kind: EventKind::Action,
        agent: agent.into(),
        payload: json!({"step": step, "action": action}),
    }
}

pub(crate) fn observation_event(agent: &str, step: u32, text: &str) -> LoopEvent {
    LoopEvent {
        kind: EventKind::Observation,
        agent: agent.into(),
        payload: json!({"step": step, "text": text, "is_error": text.starts_with("Error on")}),
    }
}

pub(crate) fn delegate_start_event(parent: &str, step: u32, child: &str, input: &str) -> LoopEvent {
    LoopEvent {
        kind: EventKind::DelegateStart,
        agent: child.into(),
        payload: json!({"parent": parent, "step": step, "input": input}),
    }
}

pub(crate) fn delegate_end_event(parent: &str, step: u32, child: &ReActTrace) -> LoopEvent {
    LoopEvent {
        kind: EventKind::DelegateEnd,
        agent: child.agent.clone(),
        payload: json!({"parent": parent, "step": step, "outcome": child.outcome}),
    }
}

pub(crate) fn terminal_event(trace: &ReActTrace) -> LoopEvent {
    match &trace.outcome {
        Outcome::Answered { text } => LoopEvent {
            kind: EventKind::Final,
            agent: trace.agent.clone(),
            payload: json!({"text": text}),
        },
        Outcome::StepBudgetExhausted => LoopEvent {
            kind: EventKind::Error,
            agent: trace.agent.clone(),
            payload: json!({
                "reason": "step_budget_exhausted",
                "message": format!("no final answer after {} steps", trace.steps.len()),
            }),
        },
        Outcome::BackendError { message } => LoopEvent {
            kind: EventKind::Error,
            agent: trace.agent.clone(),
            payload: json!({"reason": "backend_error", "message": message}),
        },
    }
}

fn push_step_events(trace: &ReActTrace, step: &ReActStep, child: Option<&ReActTrace>, out: &mut Vec<LoopEvent>) {
    if let Some(t) = &step.thought {
        out.push(thought_event(&trace.agent, step.index, t));
    }
    out.push(action_event(&trace.agent, step.index, &step.action));
    if let (AgentAction::LanguageDelegate { agent, input }, Some(child)) = (&step.action, child) {
        out.push(delegate_start_event(&trace.agent, step.index, agent, input));
        flatten_into(child, false, out);
        out.push(delegate_end_event(&trace.agent, step.index, child));
    }
    if let Some(obs) = &step.observation {
        out.push(observation_event(&trace.agent, step.index, obs));
    }
}

fn flatten_into(trace: &ReActTrace, root: bool, out: &mut Vec<LoopEvent>) {
    let mut children = trace.child_traces.iter();
    for step in &trace.steps {
        let child = match step.action {
            AgentAction::LanguageDelegate { .. } => children.next(),
            _ => None,
        };
        push_step_events(trace, step, child, out);
    }
    if root {
        out.push(terminal_event(trace));
    }
}

/// The event sequence a root loop emits while producing `trace`. The
/// runner's live stream is checked against this.
pub fn flatten_trace_events(trace: &ReActTrace) -> Vec<LoopEvent> {
    let mut out = Vec::new();
    flatten_into(trace, true, &mut out);
    out
}
