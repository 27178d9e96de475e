//! Browser bindings for a few pure pieces of `mpagent-core`.
//!
//! Every export takes and returns JSON strings so the page needs no glue
//! beyond `JSON.parse`. The logic lives in plain functions returning
//! `Result<String, String>`; the `#[wasm_bindgen]` wrappers only convert
//! errors into thrown JS strings, which keeps everything testable natively.

use mpagent_core::bench::{scor_of, TrialSet};
use mpagent_core::react::{parse_react_output, ParsedAction};
use mpagent_core::xtal::{
    bond_angles, bond_angles_between, bond_lengths, insert_site, mean, neighbor_list, parse_structure_doc, volume, Species,
};
use serde::Serialize;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn to_js(r: Result<String, String>) -> Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e))
}

#[derive(Serialize)]
struct ScorView {
    n_trials: usize,
    n_valid: usize,
    precision: Option<f64>,
    cop: Option<f64>,
    confidence: f64,
    scor: f64,
}

/// One trial per line; a blank or non-numeric line counts as an invalid
/// response.
pub fn score_trials(text: &str) -> Result<String, String> {
    let values: Vec<Option<f64>> = text
        .lines()
        .map(str::trim)
        .map(|l| l.parse::<f64>().ok().filter(|v| v.is_finite()))
        .collect();
    let trials = TrialSet::from_values("demo", &values).map_err(|e| e.to_string())?;
    let m = scor_of(&trials);
    let view = ScorView {
        n_trials: trials.n_trials(),
        n_valid: trials.n_valid(),
        precision: m.precision,
        cop: m.cop,
        confidence: m.confidence,
        scor: m.scor,
    };
    serde_json::to_string(&view).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Stats {
    count: usize,
    mean: Option<f64>,
    min: Option<f64>,
    max: Option<f64>,
}

fn stats(values: &[f64]) -> Stats {
    Stats {
        count: values.len(),
        mean: mean(values),
        min: values.iter().copied().reduce(f64::min),
        max: values.iter().copied().reduce(f64::max),
    }
}

/// Cell and local-environment summary of a Materials Project structure
/// document. `center`/`neighbor` pick the bond species; an optional
/// `insert` of `{"species": "Li", "frac": [x, y, z]}` adds a site first.
pub fn explore_structure(doc: &str, center: &str, neighbor: &str, cutoff: f64, insert: &str) -> Result<String, String> {
    let mut s = parse_structure_doc(doc).map_err(|e| e.to_string())?;
    if !insert.trim().is_empty() {
        let spec: Value = serde_json::from_str(insert).map_err(|e| format!("insert: {e}"))?;
        let species = spec["species"].as_str().ok_or("insert: `species` must be a string")?;
        let frac: [f64; 3] = serde_json::from_value(spec["frac"].clone()).map_err(|e| format!("insert: `frac`: {e}"))?;
        let species = Species::element(species).map_err(|e| e.to_string())?;
        s = insert_site(&s, species, frac).map_err(|e| e.to_string())?;
    }
    if !(cutoff > 0.0 && cutoff <= 8.0) {
        return Err(format!("cutoff must be in (0, 8] Å, got {cutoff}"));
    }
    let lattice = s.lattice();
    let lengths = bond_lengths(&s, center, neighbor, cutoff);
    let angles: Vec<f64> = if neighbor == center {
        bond_angles(&s, center, cutoff)
    } else {
        bond_angles_between(&s, center, neighbor, cutoff)
    };
    let out = json!({
        "nsites": s.len(),
        "composition": s.composition(),
        "volume": volume(&s),
        "lengths": lattice.lengths(),
        "angles": lattice.angles(),
        "pairs_within_cutoff": neighbor_list(&s, cutoff).len(),
        "bond_lengths": stats(&lengths),
        "bond_angles": stats(&angles),
    });
    Ok(out.to_string())
}

/// How one model completion is read: a tool call, a final answer, or the
/// corrective observation the agent would receive.
pub fn parse_completion(text: &str) -> String {
    let out = match parse_react_output(text) {
        Ok(p) => match p.action {
            ParsedAction::Invoke { name, input } => {
                json!({"ok": true, "thought": p.thought, "kind": "invoke", "tool": name, "input": input})
            }
            ParsedAction::Final(answer) => {
                json!({"ok": true, "thought": p.thought, "kind": "final", "answer": answer})
            }
        },
        Err(e) => json!({"ok": false, "error": e.to_string(), "observation": e.corrective_observation()}),
    };
    out.to_string()
}

#[wasm_bindgen(js_name = scoreTrials)]
pub fn score_trials_js(text: &str) -> Result<String, JsValue> {
    to_js(score_trials(text))
}

#[wasm_bindgen(js_name = exploreStructure)]
pub fn explore_structure_js(doc: &str, center: &str, neighbor: &str, cutoff: f64, insert: &str) -> Result<String, JsValue> {
    to_js(explore_structure(doc, center, neighbor, cutoff, insert))
}

#[wasm_bindgen(js_name = parseCompletion)]
pub fn parse_completion_js(text: &str) -> String {
    parse_completion(text)
}
