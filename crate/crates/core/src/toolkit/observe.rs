//! Observation text for the model: Python-literal style rendering with a
//! byte budget.

use serde_json::Value;

use super::mp::{MPDocument, QueryError};

pub const DEFAULT_OBSERVATION_BUDGET: usize = 4096;
pub const EMPTY_RESULT: &str = "No documents matched the query.";

fn push_py_str(s: &str, out: &mut String) {
    // Python's repr prefers single quotes unless the text has one and no
    // double quote
    let quote = if s.contains('\'') && !s.contains('"') { '"' } else { '\'' };
    out.push(quote);
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if c == quote => {
                out.push('\\');
                out.push(c);
            }
            c if (c as u32) < 0x20 => out.push_str(&format!("\\x{:02x}", c as u32)),
            c => out.push(c),
        }
    }
    out.push(quote);
}

/// Python float repr: shortest round-trip digits, scientific outside
/// [1e-4, 1e16).
fn py_float(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let a = x.abs();
    if a != 0.0 && !(1e-4..1e16).contains(&a) {
        let s = format!("{x:e}");
        let (mant, exp) = s.split_once('e').expect("exponent form");
        let exp: i32 = exp.parse().expect("integer exponent");
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mant}e{sign}{:02}", exp.abs())
    } else {
        let s = format!("{x}");
        if s.contains('.') { s } else { format!("{s}.0") }
    }
}

fn push_py(v: &Value, out: &mut String) {
    match v {
        Value::Null => out.push_str("None"),
        Value::Bool(true) => out.push_str("True"),
        Value::Bool(false) => out.push_str("False"),
        Value::Number(n) => match (n.as_i64(), n.as_u64()) {
            (Some(i), _) => out.push_str(&i.to_string()),
            (_, Some(u)) => out.push_str(&u.to_string()),
            _ => out.push_str(&py_float(n.as_f64().unwrap_or(f64::NAN))),
        },
        Value::String(s) => push_py_str(s, out),
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                push_py(item, out);
            }
            out.push(']');
        }
        Value::Object(map) => {
            out.push('{');
            for (i, (k, item)) in map.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                push_py_str(k, out);
                out.push_str(": ");
                push_py(item, out);
            }
            out.push('}');
        }
    }
}

/// Renders a JSON value the way Python prints the equivalent dict/list.
pub fn py_repr(v: &Value) -> String {
    let mut out = String::new();
    push_py(v, &mut out);
    out
}

fn truncation_marker(shown: usize, total: usize) -> String {
    format!(" ... [truncated: showing {shown} of {total} bytes; request fewer `fields` or a smaller `limit`]")
}

/// Cuts `text` to at most `budget` bytes, ending with an explicit marker.
pub fn truncate_observation(text: String, budget: usize) -> String {
    if text.len() <= budget {
        return text;
    }
    let total = text.len();
    // the marker length depends on the number shown; iterate to a fixpoint
    let mut keep = budget.saturating_sub(truncation_marker(budget, total).len());
    while !text.is_char_boundary(keep) {
        keep -= 1;
    }
    let mut out = text[..keep].to_string();
    out.push_str(&truncation_marker(keep, total));
    out
}

pub fn render_documents(docs: &[MPDocument], budget: usize) -> String {
    if docs.is_empty() {
        return EMPTY_RESULT.to_string();
    }
    let list = Value::Array(docs.iter().map(|d| Value::Object(d.payload.clone())).collect());
    truncate_observation(py_repr(&list), budget)
}

/// Observation for a query result or its error.
pub fn render_observation(result: &Result<Vec<MPDocument>, QueryError>, budget: usize) -> String {
    match result {
        Ok(docs) => render_documents(docs, budget),
        Err(e) => e.observation(),
    }
}
