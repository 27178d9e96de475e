//! Hierarchical ReAct agents for materials informatics.
//!
//! The crate is split along the lines of the system it implements:
//!
//! - [`react`]: ReAct output parsing, prompt rendering, the reason/act/observe
//!   loop, and supervisor/assistant composition.
//! - [`gateway`]: chat-completion backends (OpenAI-compatible live client and
//!   record/replay fixtures).
//! - [`toolkit`]: Materials Project tool schemas, argument validation, query
//!   execution, observation shaping, reference lookups and process tools.
//! - [`xtal`]: periodic crystal structures and their geometry.
//! - [`bench`]: repeated-trial benchmarking and self-consistency metrics.
//!
//! Everything that touches the network goes through [`http::HttpClient`],
//! so the whole stack can run offline against recorded fixtures.

pub mod bench;
pub mod canonical;
pub mod clock;
pub mod gateway;
pub mod http;
pub mod react;
pub mod system;
pub mod toolkit;
pub mod xtal;

pub use clock::{Clock, StepClock, SystemClock};
pub use system::AgentSystem;
