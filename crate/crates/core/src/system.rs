//! The assembled agent system: standard tools, the supervisor and its
//! assistants, ready to answer a question.

use std::sync::Arc;

use crate::react::{compose_hierarchy, run_react_loop, AgentSpec, Hierarchy, LoopContext, ReActTrace, ReactError};
use crate::toolkit::{standard_agents, ToolEnv, Toolbox};

#[derive(Clone)]
pub struct AgentSystem {
    supervisor: AgentSpec,
    hierarchy: Arc<Hierarchy>,
}

impl AgentSystem {
    pub fn new(supervisor: AgentSpec, assistants: Vec<AgentSpec>, toolbox: Toolbox) -> Result<Self, ReactError> {
        let hierarchy = compose_hierarchy(&supervisor, assistants, Arc::new(toolbox))?;
        Ok(Self { supervisor, hierarchy: Arc::new(hierarchy) })
    }

    pub fn from_toolbox(toolbox: Toolbox) -> Result<Self, ReactError> {
        let (supervisor, assistants) = standard_agents(&toolbox);
        Self::new(supervisor, assistants, toolbox)
    }

    pub fn standard(env: Arc<ToolEnv>) -> Result<Self, ReactError> {
        Self::from_toolbox(Toolbox::standard(env))
    }

    pub fn supervisor(&self) -> &AgentSpec {
        &self.supervisor
    }

    pub fn hierarchy(&self) -> &Hierarchy {
        &self.hierarchy
    }

    /// Runs the supervisor loop on `question`.
    pub fn run(&self, question: &str, ctx: &LoopContext<'_>) -> Result<ReActTrace, ReactError> {
        run_react_loop(&self.supervisor, question, self.hierarchy.as_ref(), ctx)
    }
}
