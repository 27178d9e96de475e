//! Benchmark runs driven through the full agent system.

use std::path::PathBuf;

use mpagent_core::bench::{run_benchmark, Answerer, BenchError, BenchOptions, BenchQuery, ScorReport};
use mpagent_core::react::{LoopContext, NullSink, Outcome};
use mpagent_core::Clock;

use crate::runtime::Runtime;

/// Answers each trial with a fresh supervisor run in session `<id>#<trial>`,
/// matching how replay fixtures for benchmarks are keyed.
pub struct AgentAnswerer<'a> {
    runtime: &'a Runtime,
    clock: &'a dyn Clock,
    scratch: PathBuf,
}

impl<'a> AgentAnswerer<'a> {
    pub fn new(runtime: &'a Runtime, clock: &'a dyn Clock, scratch: impl Into<PathBuf>) -> Self {
        Self { runtime, clock, scratch: scratch.into() }
    }
}

pub fn trial_session(query_id: &str, trial: u32) -> String {
    format!("{query_id}#{trial}")
}

impl Answerer for AgentAnswerer<'_> {
    fn answer(&self, query: &BenchQuery, trial: u32) -> Result<String, String> {
        let session = trial_session(&query.id, trial);
        let backend = self.runtime.backend.for_run(None).map_err(|e| e.to_string())?;
        let workspace = self.scratch.join(session.replace(['/', '\\'], "_"));
        std::fs::create_dir_all(&workspace).map_err(|e| format!("workspace: {e}"))?;
        let ctx = LoopContext {
            session_id: &session,
            backend: backend.as_ref(),
            sink: &NullSink,
            clock: self.clock,
            workspace: Some(&workspace),
            depth: 0,
        };
        let trace = self.runtime.system.run(&query.prompt, &ctx).map_err(|e| e.to_string())?;
        match trace.outcome {
            Outcome::Answered { text } => Ok(text),
            Outcome::StepBudgetExhausted => Err("step budget exhausted".into()),
            Outcome::BackendError { message } => Err(message),
        }
    }
}

pub fn run(
    runtime: &Runtime,
    queries: &[BenchQuery],
    trials: Option<u32>,
    parallelism: usize,
    clock: &dyn Clock,
) -> Result<ScorReport, BenchError> {
    let scratch = std::env::temp_dir().join(format!("mpagent-bench-{}", std::process::id()));
    let answerer = AgentAnswerer::new(runtime, clock, &scratch);
    let opts = BenchOptions {
        parallelism,
        backend: runtime.backend_name.clone(),
        temperature: runtime.temperature,
        trials,
    };
    let report = run_benchmark(queries, &answerer, &opts, clock);
    let _ = std::fs::remove_dir_all(&scratch);
    report
}
