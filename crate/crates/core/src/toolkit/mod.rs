//! Materials Project tools: endpoint schemas, argument validation, query
//! execution and observation shaping, plus reference lookups and
//! external-process tools.
//!
//! Every failure surfaces as an observation beginning `Error on <tool>:` so
//! the calling agent can correct itself.

mod mock;
mod mp;
mod observe;
#[cfg(feature = "native")]
mod process;
mod references;
mod roster;
mod schema;
mod structures;
mod toolbox;
mod trajectory;

pub use mock::{MockDataset, MockMaterialsServer};
pub use mp::{execute_query, is_material_id, MPDocument, MpEndpoint, Provenance, QueryError, DEFAULT_MP_BASE_URL, MP_API_KEY_ENV};
pub use observe::{py_repr, render_documents, render_observation, truncate_observation, DEFAULT_OBSERVATION_BUDGET, EMPTY_RESULT};
#[cfg(feature = "native")]
pub use process::{render_command, run_process_tool, ProcessError, ProcessOutcome, ProcessToolSpec};
pub use references::{fetch_reference, parse_arxiv, parse_wikipedia, reference_url, ReferenceEndpoints, ReferenceSource, TOP_K};
pub use roster::{standard_agents, GENERAL_TOOLS, MLFF_TOOLS, MP_ASSISTANTS, SUPERVISOR_NAME};
pub use schema::{
    catalog, schema_by_name, GuardRule, MPQuery, ParamSpec, SortField, ToolSchema, ValidationError, ValueKind,
    DEFAULT_LIMIT, MAX_LIMIT, REVISE_HINT,
};
pub use structures::{save_structures, saved_message, SAVED_PREFIX};
#[cfg(feature = "native")]
pub use toolbox::ProcessTool;
pub use toolbox::{MpSearchTool, ReferenceTool, StructureRetrieverTool, Tool, ToolEnv, Toolbox, STRUCTURE_TOOL};
pub use trajectory::{parse_trajectory_summary, trajectory_stats, TrajectoryPoint, TrajectoryStats};
