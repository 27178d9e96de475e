use std::collections::BTreeMap;
use std::fmt::Write as _;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::metrics::{ClassificationMetrics, TrialSet};
use super::query::{Property, Unit};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryMetrics {
    pub property: Property,
    pub unit: Unit,
    pub n_trials: usize,
    pub n_valid: usize,
    pub precision: Option<f64>,
    pub cop: Option<f64>,
    pub confidence: f64,
    pub scor: f64,
    /// Mean of the valid extracted values.
    pub mean_value: Option<f64>,
    pub expected_value: f64,
    /// |mean_value − expected_value|; absent with no valid responses.
    pub abs_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoricalResult {
    pub expected: String,
    /// Most frequent valid label (ties go to the label answered first).
    pub predicted: Option<String>,
    pub n_trials: usize,
    pub n_valid: usize,
    pub confidence: f64,
}

/// Unweighted means over numeric queries. Precision and CoP average only the
/// queries that had at least one valid response; SCoR and Confidence average
/// all of them. MAE skips queries with no valid response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub n_queries: usize,
    pub mean_precision: Option<f64>,
    pub mean_cop: Option<f64>,
    pub mean_confidence: Option<f64>,
    pub mean_scor: Option<f64>,
    pub mae: Option<f64>,
    pub r2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub backend: String,
    pub temperature: f64,
    pub timestamp: DateTime<Utc>,
    pub parallelism: usize,
    pub validity_rule: String,
    pub mae_basis: String,
    pub f1_averaging: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScorReport {
    pub per_query: BTreeMap<String, QueryMetrics>,
    pub aggregate: Aggregate,
    pub categorical: BTreeMap<String, CategoricalResult>,
    pub classification: Option<ClassificationMetrics>,
    pub run_config: RunConfig,
    pub trials: BTreeMap<String, TrialSet>,
}

fn cell(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.3}")).unwrap_or_else(|| "-".into())
}

impl ScorReport {
    /// Deterministic JSON (sorted keys).
    pub fn to_json(&self) -> String {
        crate::canonical::to_canonical_string(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    /// Plain-text table: Precision, CoP, Confidence, SCoR, MAE per query and
    /// the mean row.
    pub fn render_table(&self) -> String {
        let width = self
            .per_query
            .keys()
            .map(String::len)
            .chain(["query".len(), "mean".len()])
            .max()
            .unwrap_or(5);
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<width$}  {:>10}  {:>7}  {:>10}  {:>7}  {:>10}",
            "query", "Precision", "CoP", "Confidence", "SCoR", "MAE"
        );
        for (id, m) in &self.per_query {
            let _ = writeln!(
                out,
                "{:<width$}  {:>10}  {:>7}  {:>10}  {:>7}  {:>10}",
                id,
                cell(m.precision),
                cell(m.cop),
                cell(Some(m.confidence)),
                cell(Some(m.scor)),
                cell(m.abs_error)
            );
        }
        let a = &self.aggregate;
        let _ = writeln!(
            out,
            "{:<width$}  {:>10}  {:>7}  {:>10}  {:>7}  {:>10}",
            "mean",
            cell(a.mean_precision),
            cell(a.mean_cop),
            cell(a.mean_confidence),
            cell(a.mean_scor),
            cell(a.mae)
        );
        if let Some(c) = &self.classification {
            let _ = writeln!(
                out,
                "\nclassification over {} queries: accuracy {:.3}, macro F1 {:.3}",
                self.categorical.len(),
                c.accuracy,
                c.f1_macro
            );
        }
        out
    }
}
