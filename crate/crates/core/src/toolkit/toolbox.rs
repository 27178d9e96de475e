use std::collections::BTreeMap;
use std::sync::Arc;

use serde_json::{json, Value};

use super::mp::{execute_query, MpEndpoint};
use super::observe::{render_observation, DEFAULT_OBSERVATION_BUDGET, EMPTY_RESULT};
use super::references::{fetch_reference, ReferenceEndpoints, ReferenceSource};
use super::schema::{catalog, ToolSchema};
use super::structures::{save_structures, saved_message};
use crate::http::HttpClient;
use crate::react::{Dispatcher, LoopContext, ToolDescriptor};

pub const STRUCTURE_TOOL: &str = "search_materials_structure__get";

/// Shared plumbing for network-backed tools.
#[derive(Clone)]
pub struct ToolEnv {
    pub http: Arc<dyn HttpClient>,
    pub mp: MpEndpoint,
    pub references: ReferenceEndpoints,
    pub observation_budget: usize,
}

impl ToolEnv {
    pub fn new(http: Arc<dyn HttpClient>, mp: MpEndpoint) -> Self {
        Self { http, mp, references: ReferenceEndpoints::default(), observation_budget: DEFAULT_OBSERVATION_BUDGET }
    }
}

pub trait Tool: Send + Sync {
    fn descriptor(&self) -> ToolDescriptor;
    /// Observation text; failures start with `Error on <name>:`.
    fn call(&self, input: &Value, ctx: &LoopContext<'_>) -> String;
}

fn schema_descriptor(s: &ToolSchema) -> ToolDescriptor {
    ToolDescriptor { name: s.name.clone(), description: s.description.clone(), args: s.args_schema() }
}

pub struct MpSearchTool {
    schema: ToolSchema,
    env: Arc<ToolEnv>,
}

impl MpSearchTool {
    pub fn new(schema: ToolSchema, env: Arc<ToolEnv>) -> Self {
        Self { schema, env }
    }
}

impl Tool for MpSearchTool {
    fn descriptor(&self) -> ToolDescriptor {
        schema_descriptor(&self.schema)
    }

    fn call(&self, input: &Value, ctx: &LoopContext<'_>) -> String {
        let q = match self.schema.validate_args(input) {
            Ok(q) => q,
            Err(e) => return e.observation(),
        };
        let result = execute_query(&q, self.env.http.as_ref(), &self.env.mp, ctx.clock);
        render_observation(&result, self.env.observation_budget)
    }
}

/// Fetches structures and saves them into the session workspace instead of
/// returning them inline.
pub struct StructureRetrieverTool {
    schema: ToolSchema,
    env: Arc<ToolEnv>,
}

impl StructureRetrieverTool {
    pub fn new(schema: ToolSchema, env: Arc<ToolEnv>) -> Self {
        Self { schema, env }
    }
}

impl Tool for StructureRetrieverTool {
    fn descriptor(&self) -> ToolDescriptor {
        schema_descriptor(&self.schema)
    }

    fn call(&self, input: &Value, ctx: &LoopContext<'_>) -> String {
        let name = &self.schema.name;
        let q = match self.schema.validate_args(input) {
            Ok(q) => q,
            Err(e) => return e.observation(),
        };
        let Some(workspace) = ctx.workspace else {
            return format!("Error on {name}: no workspace is configured for saving structures");
        };
        match execute_query(&q, self.env.http.as_ref(), &self.env.mp, ctx.clock) {
            Ok(docs) if docs.is_empty() => EMPTY_RESULT.to_string(),
            Ok(docs) => match save_structures(name, &docs, workspace) {
                Ok(names) => saved_message(&names),
                Err(obs) => obs,
            },
            Err(e) => e.observation(),
        }
    }
}

pub struct ReferenceTool {
    source: ReferenceSource,
    env: Arc<ToolEnv>,
}

impl ReferenceTool {
    pub fn new(source: ReferenceSource, env: Arc<ToolEnv>) -> Self {
        Self { source, env }
    }
}

impl Tool for ReferenceTool {
    fn descriptor(&self) -> ToolDescriptor {
        let description = match self.source {
            ReferenceSource::Arxiv => "Search arXiv for scientific articles; returns titles, authors and abstracts of the top results.",
            ReferenceSource::Wikipedia => "Search Wikipedia; returns page titles and summaries of the top results.",
        };
        ToolDescriptor {
            name: self.source.tool_name().into(),
            description: description.into(),
            args: json!({"query": {"type": "string", "description": "search query"}}),
        }
    }

    fn call(&self, input: &Value, _ctx: &LoopContext<'_>) -> String {
        let query = match input {
            Value::String(s) => s.as_str(),
            other => other.get("query").and_then(Value::as_str).unwrap_or(""),
        };
        fetch_reference(self.source, query, self.env.http.as_ref(), &self.env.references)
    }
}

#[cfg(feature = "native")]
pub struct ProcessTool {
    spec: super::process::ProcessToolSpec,
}

#[cfg(feature = "native")]
impl ProcessTool {
    pub fn new(spec: super::process::ProcessToolSpec) -> Self {
        Self { spec }
    }
}

#[cfg(feature = "native")]
impl Tool for ProcessTool {
    fn descriptor(&self) -> ToolDescriptor {
        let placeholders: Vec<String> = shlex::split(&self.spec.command_template)
            .unwrap_or_default()
            .iter()
            .flat_map(|t| {
                t.split('{')
                    .skip(1)
                    .filter_map(|p| p.split_once('}').map(|(n, _)| n.to_string()))
                    .collect::<Vec<_>>()
            })
            .filter(|n| n != "input_json")
            .collect();
        let mut args = serde_json::Map::new();
        for p in placeholders {
            args.insert(p, json!({"type": "string"}));
        }
        ToolDescriptor { name: self.spec.name.clone(), description: self.spec.description.clone(), args: Value::Object(args) }
    }

    fn call(&self, input: &Value, _ctx: &LoopContext<'_>) -> String {
        match super::process::run_process_tool(&self.spec, input) {
            Ok(out) => out.observation(),
            Err(e) => e.observation(&self.spec.name),
        }
    }
}

/// Leaf dispatcher: a name → tool map.
#[derive(Default, Clone)]
pub struct Toolbox {
    tools: BTreeMap<String, Arc<dyn Tool>>,
}

impl Toolbox {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, tool: Arc<dyn Tool>) -> &mut Self {
        self.tools.insert(tool.descriptor().name, tool);
        self
    }

    pub fn contains(&self, name: &str) -> bool {
        self.tools.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.tools.keys().map(String::as_str)
    }

    /// Every MP endpoint tool plus arXiv and Wikipedia.
    pub fn standard(env: Arc<ToolEnv>) -> Self {
        let mut tb = Self::new();
        for schema in catalog() {
            let tool: Arc<dyn Tool> = if schema.name == STRUCTURE_TOOL {
                Arc::new(StructureRetrieverTool::new(schema, env.clone()))
            } else {
                Arc::new(MpSearchTool::new(schema, env.clone()))
            };
            tb.register(tool);
        }
        tb.register(Arc::new(ReferenceTool::new(ReferenceSource::Arxiv, env.clone())));
        tb.register(Arc::new(ReferenceTool::new(ReferenceSource::Wikipedia, env)));
        tb
    }
}

impl Dispatcher for Toolbox {
    fn describe(&self, name: &str) -> Option<ToolDescriptor> {
        self.tools.get(name).map(|t| t.descriptor())
    }

    fn call_tool(&self, name: &str, input: &Value, ctx: &LoopContext<'_>) -> String {
        match self.tools.get(name) {
            Some(t) => t.call(input, ctx),
            None => {
                let names: Vec<String> = self.tools.keys().cloned().collect();
                crate::react::unknown_tool_observation(name, &names)
            }
        }
    }
}
