//! Repeated-trial benchmarking of question answerers.
//!
//! Each query is asked `N` times. Answers are reduced to numbers (or magnetic
//! ordering labels) by [`extract_value`], and the valid ones feed the
//! self-consistency metrics:
//!
//! ```text
//! Precision  = σ̂ / √n          (σ̂: sample standard deviation, n − 1 denominator)
//! CoP        = exp(−Precision)
//! Confidence = n / N
//! SCoR       = CoP × Confidence
//! ```
//!
//! Precision here is the standard error of the valid answers, not the bare
//! standard deviation. With `n = 1` the deviation is taken as 0; with `n = 0`
//! Precision and CoP are absent and SCoR is 0.

mod extract;
mod metrics;
mod query;
mod report;
mod runner;

use thiserror::Error;

pub use extract::{extract_value, Answer, MagneticOrdering};
pub use metrics::{
    classification_metrics, cop_of, mae, precision_of, r2, scor_of, ClassificationMetrics,
    ScorMetrics, TrialSet,
};
pub use query::{load_queries, parse_queries, BenchQuery, Expected, Property, Unit};
pub use report::{Aggregate, CategoricalResult, QueryMetrics, RunConfig, ScorReport};
pub use runner::{run_benchmark, Answerer, BenchOptions};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BenchError {
    #[error("empty input")]
    EmptyInput,
    #[error("length mismatch: {0} predictions vs {1} reference values")]
    LengthMismatch(usize, usize),
    #[error("reference values have zero variance")]
    DegenerateTruth,
    #[error("need at least {0} values")]
    TooFew(usize),
    #[error("invalid query `{id}`: {reason}")]
    InvalidQuery { id: String, reason: String },
    #[error("query file line {line}: {reason}")]
    QueryFile { line: usize, reason: String },
    #[error("trial set `{0}`: responses and extracted values differ in length")]
    MalformedTrialSet(String),
}
