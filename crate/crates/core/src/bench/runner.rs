use std::collections::BTreeMap;

use super::extract::{extract_value, Answer, MagneticOrdering};
use super::metrics::{classification_metrics, mae, precision_of, r2, scor_of, TrialSet};
use super::query::{BenchQuery, Expected};
use super::report::{Aggregate, CategoricalResult, QueryMetrics, RunConfig, ScorReport};
use super::BenchError;
use crate::clock::Clock;

/// Anything that answers a benchmark prompt. Each call is an independent
/// trial and must not share conversational state with other calls.
pub trait Answerer: Send + Sync {
    fn answer(&self, query: &BenchQuery, trial: u32) -> Result<String, String>;
}

impl<F> Answerer for F
where
    F: Fn(&BenchQuery, u32) -> Result<String, String> + Send + Sync,
{
    fn answer(&self, query: &BenchQuery, trial: u32) -> Result<String, String> {
        self(query, trial)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchOptions {
    pub parallelism: usize,
    pub backend: String,
    pub temperature: f64,
    /// Overrides every query's `n_trials` when set.
    pub trials: Option<u32>,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            parallelism: 1,
            backend: "unspecified".into(),
            temperature: 0.0,
            trials: None,
        }
    }
}

fn run_trials(query: &BenchQuery, n: u32, answerer: &dyn Answerer) -> TrialSet {
    let mut raw = Vec::with_capacity(n as usize);
    let mut extracted = Vec::with_capacity(n as usize);
    for trial in 0..n {
        match answerer.answer(query, trial) {
            Ok(text) => {
                extracted.push(extract_value(&text, query.property, query.unit));
                raw.push(text);
            }
            Err(err) => {
                tracing::debug!(query = %query.id, trial, %err, "trial failed");
                extracted.push(None);
                raw.push(String::new());
            }
        }
    }
    TrialSet::new(query.id.clone(), raw, extracted).expect("n_trials is positive")
}

#[cfg(feature = "native")]
fn collect_trials(queries: &[BenchQuery], answerer: &dyn Answerer, opts: &BenchOptions) -> Vec<TrialSet> {
    use rayon::prelude::*;
    let trials_for = |q: &BenchQuery| opts.trials.unwrap_or(q.n_trials);
    if opts.parallelism <= 1 {
        return queries.iter().map(|q| run_trials(q, trials_for(q), answerer)).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(opts.parallelism).build() {
        Ok(pool) => pool.install(|| {
            queries
                .par_iter()
                .map(|q| run_trials(q, trials_for(q), answerer))
                .collect()
        }),
        Err(_) => queries.iter().map(|q| run_trials(q, trials_for(q), answerer)).collect(),
    }
}

#[cfg(not(feature = "native"))]
fn collect_trials(queries: &[BenchQuery], answerer: &dyn Answerer, opts: &BenchOptions) -> Vec<TrialSet> {
    queries
        .iter()
        .map(|q| run_trials(q, opts.trials.unwrap_or(q.n_trials), answerer))
        .collect()
}

fn modal_label(trials: &TrialSet) -> Option<String> {
    let mut counts: Vec<(&str, usize)> = Vec::new();
    for label in trials.extracted.iter().flatten().filter_map(Answer::as_category) {
        match counts.iter_mut().find(|(l, _)| *l == label) {
            Some((_, c)) => *c += 1,
            None => counts.push((label, 1)),
        }
    }
    let best = counts.iter().map(|(_, c)| *c).max()?;
    counts.iter().find(|(_, c)| *c == best).map(|(l, _)| l.to_string())
}

fn mean_of(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let v: Vec<f64> = xs.collect();
    if v.is_empty() {
        None
    } else {
        Some(v.iter().sum::<f64>() / v.len() as f64)
    }
}

/// Runs every query `N` times through `answerer` and scores the results.
/// Failed trials count as invalid responses.
pub fn run_benchmark(
    queries: &[BenchQuery],
    answerer: &dyn Answerer,
    opts: &BenchOptions,
    clock: &dyn Clock,
) -> Result<ScorReport, BenchError> {
    if queries.is_empty() {
        return Err(BenchError::EmptyInput);
    }
    for q in queries {
        q.validate()?;
    }
    if opts.trials == Some(0) {
        return Err(BenchError::InvalidQuery {
            id: "*".into(),
            reason: "trial count override must be positive".into(),
        });
    }
    let timestamp = clock.now();
    let trial_sets = collect_trials(queries, answerer, opts);

    let mut per_query = BTreeMap::new();
    let mut categorical = BTreeMap::new();
    let mut trials = BTreeMap::new();
    for (q, ts) in queries.iter().zip(trial_sets) {
        match &q.expected_value {
            Expected::Number(expected) => {
                let m = scor_of(&ts);
                let values = ts.numeric_values();
                let mean_value = mean_of(values.iter().copied());
                per_query.insert(
                    q.id.clone(),
                    QueryMetrics {
                        property: q.property,
                        unit: q.unit,
                        n_trials: ts.n_trials(),
                        n_valid: values.len(),
                        precision: m.precision,
                        cop: m.cop,
                        confidence: m.confidence,
                        scor: m.scor,
                        mean_value,
                        expected_value: *expected,
                        abs_error: mean_value.map(|v| (v - expected).abs()),
                    },
                );
                debug_assert_eq!(m.precision, precision_of(&values).ok());
            }
            Expected::Category(expected) => {
                let n_valid = ts.extracted.iter().flatten().filter(|a| a.as_category().is_some()).count();
                categorical.insert(
                    q.id.clone(),
                    CategoricalResult {
                        expected: expected.clone(),
                        predicted: modal_label(&ts),
                        n_trials: ts.n_trials(),
                        n_valid,
                        confidence: n_valid as f64 / ts.n_trials() as f64,
                    },
                );
            }
        }
        trials.insert(q.id.clone(), ts);
    }

    let numeric: Vec<&QueryMetrics> = per_query.values().collect();
    let answered: Vec<(f64, f64)> = numeric
        .iter()
        .filter_map(|m| m.mean_value.map(|v| (v, m.expected_value)))
        .collect();
    let (pred, truth): (Vec<f64>, Vec<f64>) = answered.iter().copied().unzip();
    let aggregate = Aggregate {
        n_queries: numeric.len(),
        mean_precision: mean_of(numeric.iter().filter_map(|m| m.precision)),
        mean_cop: mean_of(numeric.iter().filter_map(|m| m.cop)),
        mean_confidence: mean_of(numeric.iter().map(|m| m.confidence)),
        mean_scor: mean_of(numeric.iter().map(|m| m.scor)),
        mae: mae(&pred, &truth).ok(),
        r2: r2(&pred, &truth).ok(),
    };

    // classification uses the modal label of each query; unanswered queries
    // are scored as "unknown"
    let classification = if categorical.is_empty() {
        None
    } else {
        let (p, t): (Vec<String>, Vec<String>) = categorical
            .values()
            .map(|c| {
                (
                    c.predicted.clone().unwrap_or_else(|| MagneticOrdering::Unknown.label().to_string()),
                    c.expected.clone(),
                )
            })
            .unzip();
        let canonical: Vec<&str> = MagneticOrdering::ALL.iter().map(|o| o.label()).collect();
        Some(classification_metrics(&p, &t, &canonical)?)
    };

    Ok(ScorReport {
        per_query,
        aggregate,
        categorical,
        classification,
        run_config: RunConfig {
            backend: opts.backend.clone(),
            temperature: opts.temperature,
            timestamp,
            parallelism: opts.parallelism.max(1),
            validity_rule: "value with a unit convertible to the query unit, or a magnetic ordering label".into(),
            mae_basis: "per-query mean of valid values; queries without valid values excluded".into(),
            f1_averaging: "macro".into(),
        },
        trials,
    })
}
