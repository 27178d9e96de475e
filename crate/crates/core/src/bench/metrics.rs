use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::extract::Answer;
use super::BenchError;

/// `N` raw responses to one query and what could be read out of each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSet {
    pub query_id: String,
    pub raw_responses: Vec<String>,
    pub extracted: Vec<Option<Answer>>,
}

impl TrialSet {
    pub fn new(
        query_id: impl Into<String>,
        raw_responses: Vec<String>,
        extracted: Vec<Option<Answer>>,
    ) -> Result<Self, BenchError> {
        let query_id = query_id.into();
        if raw_responses.len() != extracted.len() {
            return Err(BenchError::MalformedTrialSet(query_id));
        }
        if raw_responses.is_empty() {
            return Err(BenchError::EmptyInput);
        }
        Ok(Self {
            query_id,
            raw_responses,
            extracted,
        })
    }

    /// Trial set of numeric outcomes; `None` marks an invalid response.
    pub fn from_values(query_id: impl Into<String>, values: &[Option<f64>]) -> Result<Self, BenchError> {
        let raw = values
            .iter()
            .map(|v| v.map(|x| x.to_string()).unwrap_or_default())
            .collect();
        Self::new(query_id, raw, values.iter().map(|v| v.map(Answer::Number)).collect())
    }

    pub fn n_trials(&self) -> usize {
        self.raw_responses.len()
    }

    pub fn n_valid(&self) -> usize {
        self.extracted.iter().filter(|e| e.is_some()).count()
    }

    pub fn numeric_values(&self) -> Vec<f64> {
        self.extracted
            .iter()
            .flatten()
            .filter_map(Answer::as_number)
            .collect()
    }
}

/// σ̂/√n, with σ̂ the sample standard deviation (n − 1 denominator, 0 for a
/// single value).
pub fn precision_of(values: &[f64]) -> Result<f64, BenchError> {
    let n = values.len();
    if n == 0 {
        return Err(BenchError::EmptyInput);
    }
    if values.iter().all(|x| *x == values[0]) {
        // exact, where the mean of equal values may be off by an ulp
        return Ok(0.0);
    }
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let ss: f64 = values.iter().map(|x| (x - mean) * (x - mean)).sum();
    let sigma = (ss / (nf - 1.0)).sqrt();
    Ok(sigma / nf.sqrt())
}

pub fn cop_of(precision: f64) -> f64 {
    (-precision).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScorMetrics {
    pub precision: Option<f64>,
    pub cop: Option<f64>,
    pub confidence: f64,
    pub scor: f64,
}

/// Self-consistency of a numeric trial set. Only numeric answers count as
/// valid here.
pub fn scor_of(trials: &TrialSet) -> ScorMetrics {
    let values = trials.numeric_values();
    let confidence = values.len() as f64 / trials.n_trials() as f64;
    match precision_of(&values) {
        Ok(precision) => {
            let cop = cop_of(precision);
            ScorMetrics {
                precision: Some(precision),
                cop: Some(cop),
                confidence,
                scor: cop * confidence,
            }
        }
        Err(_) => ScorMetrics {
            precision: None,
            cop: None,
            confidence,
            scor: 0.0,
        },
    }
}

fn check_pairs(pred: usize, truth: usize) -> Result<(), BenchError> {
    if pred != truth {
        return Err(BenchError::LengthMismatch(pred, truth));
    }
    if pred == 0 {
        return Err(BenchError::EmptyInput);
    }
    Ok(())
}

pub fn mae(pred: &[f64], truth: &[f64]) -> Result<f64, BenchError> {
    check_pairs(pred.len(), truth.len())?;
    let total: f64 = pred.iter().zip(truth).map(|(p, t)| (p - t).abs()).sum();
    Ok(total / pred.len() as f64)
}

/// Coefficient of determination, 1 − SS_res/SS_tot about the mean of `truth`.
pub fn r2(pred: &[f64], truth: &[f64]) -> Result<f64, BenchError> {
    check_pairs(pred.len(), truth.len())?;
    if truth.len() < 2 {
        return Err(BenchError::TooFew(2));
    }
    let mean = truth.iter().sum::<f64>() / truth.len() as f64;
    let ss_tot: f64 = truth.iter().map(|t| (t - mean) * (t - mean)).sum();
    if ss_tot == 0.0 {
        return Err(BenchError::DegenerateTruth);
    }
    let ss_res: f64 = pred.iter().zip(truth).map(|(p, t)| (t - p) * (t - p)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationMetrics {
    pub accuracy: f64,
    /// Unweighted mean of per-class F1 over classes seen in truth or predictions.
    pub f1_macro: f64,
    pub labels: Vec<String>,
    /// `confusion[t][p]`: entries with true label `labels[t]` predicted as `labels[p]`.
    pub confusion: Vec<Vec<usize>>,
}

/// Accuracy, macro F1 and the confusion matrix. Labels are ordered as
/// `canonical` first, then any other observed label in sorted order.
pub fn classification_metrics(
    pred: &[String],
    truth: &[String],
    canonical: &[&str],
) -> Result<ClassificationMetrics, BenchError> {
    check_pairs(pred.len(), truth.len())?;
    let mut labels: Vec<String> = canonical.iter().map(|s| s.to_string()).collect();
    let extra: BTreeSet<&String> = pred
        .iter()
        .chain(truth)
        .filter(|l| !canonical.contains(&l.as_str()))
        .collect();
    labels.extend(extra.into_iter().cloned());
    let index = |l: &String| labels.iter().position(|x| x == l).unwrap();

    let k = labels.len();
    let mut confusion = vec![vec![0usize; k]; k];
    for (p, t) in pred.iter().zip(truth) {
        confusion[index(t)][index(p)] += 1;
    }
    let correct: usize = (0..k).map(|c| confusion[c][c]).sum();
    let accuracy = correct as f64 / pred.len() as f64;

    let mut f1s = Vec::new();
    for c in 0..k {
        let tp = confusion[c][c];
        let row: usize = confusion[c].iter().sum();
        let col: usize = confusion.iter().map(|r| r[c]).sum();
        if row == 0 && col == 0 {
            continue;
        }
        let fn_ = row - tp;
        let fp = col - tp;
        f1s.push(2.0 * tp as f64 / (2 * tp + fp + fn_) as f64);
    }
    let f1_macro = f1s.iter().sum::<f64>() / f1s.len() as f64;
    Ok(ClassificationMetrics {
        accuracy,
        f1_macro,
        labels,
        confusion,
    })
}
