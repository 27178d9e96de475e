use std::collections::BTreeMap;
use std::sync::Arc;

use serde_json::{json, Value};

use super::runner::run_react_loop;
use super::spec::{AgentSpec, Role};
use super::trace::{Outcome, ReActTrace};
use super::{Dispatcher, LoopContext, ReactError, ToolDescriptor};

/// Dispatcher for a supervisor: its assistants are tools that run their own
/// loops; everything else goes to the leaf dispatcher.
pub struct Hierarchy {
    assistants: BTreeMap<String, AgentSpec>,
    leaf: Arc<dyn Dispatcher>,
}

impl Hierarchy {
    pub fn assistant(&self, name: &str) -> Option<&AgentSpec> {
        self.assistants.get(name)
    }

    pub fn assistant_names(&self) -> impl Iterator<Item = &str> {
        self.assistants.keys().map(String::as_str)
    }
}

/// Builds the supervisor's dispatcher. Checks that assistants are unique,
/// reference only leaf tools, and that every listed tool resolves.
pub fn compose_hierarchy(
    supervisor: &AgentSpec,
    assistants: Vec<AgentSpec>,
    leaf: Arc<dyn Dispatcher>,
) -> Result<Hierarchy, ReactError> {
    supervisor.validate()?;
    if supervisor.role != Role::Supervisor {
        return Err(ReactError::InvalidSpec(format!("{} is not a supervisor", supervisor.name)));
    }
    let mut map = BTreeMap::new();
    for a in assistants {
        a.validate()?;
        if a.role != Role::Assistant {
            return Err(ReactError::InvalidSpec(format!("{} is not an assistant", a.name)));
        }
        if a.name == supervisor.name || map.contains_key(&a.name) {
            return Err(ReactError::DuplicateAgent(a.name));
        }
        map.insert(a.name.clone(), a);
    }
    for a in map.values() {
        for t in &a.tool_names {
            if map.contains_key(t) || *t == supervisor.name || leaf.is_agent(t) {
                return Err(ReactError::CycleError(format!("assistant {} lists agent {t} as a tool", a.name)));
            }
            if leaf.describe(t).is_none() {
                return Err(ReactError::UnknownTool(t.clone()));
            }
        }
    }
    for t in &supervisor.tool_names {
        if *t == supervisor.name {
            return Err(ReactError::CycleError(format!("{t} lists itself as a tool")));
        }
        if !map.contains_key(t) && leaf.describe(t).is_none() {
            return Err(ReactError::UnknownTool(t.clone()));
        }
    }
    Ok(Hierarchy { assistants: map, leaf })
}

impl Dispatcher for Hierarchy {
    fn describe(&self, name: &str) -> Option<ToolDescriptor> {
        match self.assistants.get(name) {
            Some(a) => Some(ToolDescriptor {
                name: a.name.clone(),
                description: a.description.clone(),
                args: json!({"input": {"type": "string", "description": "complete task description for the assistant"}}),
            }),
            None => self.leaf.describe(name),
        }
    }

    fn is_agent(&self, name: &str) -> bool {
        self.assistants.contains_key(name)
    }

    fn call_tool(&self, name: &str, input: &Value, ctx: &LoopContext<'_>) -> String {
        self.leaf.call_tool(name, input, ctx)
    }

    fn delegate(&self, agent: &str, input: &str, ctx: &LoopContext<'_>) -> ReActTrace {
        let spec = &self.assistants[agent];
        match run_react_loop(spec, input, self.leaf.as_ref(), ctx) {
            Ok(trace) => trace,
            // unreachable after compose_hierarchy's checks, but keep the
            // supervisor alive if it happens
            Err(e) => ReActTrace {
                agent: agent.into(),
                input: input.into(),
                steps: Vec::new(),
                child_traces: Vec::new(),
                outcome: Outcome::BackendError { message: e.to_string() },
            },
        }
    }
}
