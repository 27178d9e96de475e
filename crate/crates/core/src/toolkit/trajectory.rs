//! Text trajectory summaries written by simulation tools: JSON lines of
//! `{"step": int, "time_fs": real, "temperature_K": real}`.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub step: u64,
    pub time_fs: f64,
    #[serde(rename = "temperature_K")]
    pub temperature_k: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryStats {
    pub n_points: usize,
    pub t_start_fs: f64,
    pub t_end_fs: f64,
    pub temperature_min: f64,
    pub temperature_max: f64,
    pub temperature_mean: f64,
}

/// Parses a summary; steps must be strictly increasing.
pub fn parse_trajectory_summary(text: &str) -> Result<Vec<TrajectoryPoint>, String> {
    let mut out: Vec<TrajectoryPoint> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let p: TrajectoryPoint = serde_json::from_str(line).map_err(|e| format!("line {}: {e}", i + 1))?;
        if !(p.time_fs.is_finite() && p.temperature_k.is_finite() && p.temperature_k >= 0.0) {
            return Err(format!("line {}: non-physical values", i + 1));
        }
        if out.last().is_some_and(|prev| p.step <= prev.step) {
            return Err(format!("line {}: step {} does not increase", i + 1, p.step));
        }
        out.push(p);
    }
    Ok(out)
}

pub fn trajectory_stats(points: &[TrajectoryPoint]) -> Option<TrajectoryStats> {
    let first = points.first()?;
    let last = points.last()?;
    let temps = points.iter().map(|p| p.temperature_k);
    Some(TrajectoryStats {
        n_points: points.len(),
        t_start_fs: first.time_fs,
        t_end_fs: last.time_fs,
        temperature_min: temps.clone().fold(f64::INFINITY, f64::min),
        temperature_max: temps.clone().fold(f64::NEG_INFINITY, f64::max),
        temperature_mean: temps.sum::<f64>() / points.len() as f64,
    })
}
