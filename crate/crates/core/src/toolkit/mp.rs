//! Query execution against the Materials Project REST API.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use super::schema::MPQuery;
use crate::clock::Clock;
use crate::http::{HttpClient, HttpRequest};

pub const DEFAULT_MP_BASE_URL: &str = "https://api.materialsproject.org";
pub const MP_API_KEY_ENV: &str = "MP_API_KEY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub endpoint: String,
    pub retrieved_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MPDocument {
    pub material_id: Option<String>,
    /// The document as returned, field order preserved.
    pub payload: Map<String, Value>,
    pub provenance: Provenance,
}

pub fn is_material_id(s: &str) -> bool {
    s.strip_prefix("mp-")
        .is_some_and(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()))
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{}", self.observation())]
pub struct QueryError {
    pub tool: String,
    pub http_status: Option<u16>,
    pub body_excerpt: String,
    pub retry_after: Option<String>,
}

impl QueryError {
    pub fn observation(&self) -> String {
        let what = match self.http_status {
            Some(401) | Some(403) => format!(
                "HTTP {} unauthorized; check that {MP_API_KEY_ENV} holds a valid API key",
                self.http_status.unwrap()
            ),
            Some(429) => format!(
                "HTTP 429 rate limited; retry after {}",
                self.retry_after.as_deref().map(|s| format!("{s} s")).unwrap_or_else(|| "a short wait".into())
            ),
            Some(code) => format!("HTTP {code}"),
            None => "request failed".into(),
        };
        if self.body_excerpt.is_empty() {
            format!("Error on {}: {what}", self.tool)
        } else {
            format!("Error on {}: {what}: {}", self.tool, self.body_excerpt)
        }
    }
}

/// Where and how to reach the API.
#[derive(Debug, Clone, PartialEq)]
pub struct MpEndpoint {
    pub base_url: String,
    pub api_key: String,
}

impl MpEndpoint {
    pub fn from_env() -> Self {
        Self {
            base_url: std::env::var("MP_BASE_URL").unwrap_or_else(|_| DEFAULT_MP_BASE_URL.to_string()),
            api_key: std::env::var(MP_API_KEY_ENV).unwrap_or_default(),
        }
    }
}

fn excerpt(body: &str) -> String {
    const MAX: usize = 300;
    let t = body.trim();
    if t.len() <= MAX {
        return t.to_string();
    }
    let mut end = MAX;
    while !t.is_char_boundary(end) {
        end -= 1;
    }
    format!("{}...", &t[..end])
}

pub fn execute_query(
    q: &MPQuery,
    http: &dyn HttpClient,
    endpoint: &MpEndpoint,
    clock: &dyn Clock,
) -> Result<Vec<MPDocument>, QueryError> {
    let fail = |status: Option<u16>, body: String, retry_after: Option<String>| QueryError {
        tool: q.tool.clone(),
        http_status: status,
        body_excerpt: body,
        retry_after,
    };
    let url = q.resolved_url(&endpoint.base_url);
    let mut req = HttpRequest::get(url).header("accept", "application/json");
    if !endpoint.api_key.is_empty() {
        req = req.header("X-API-KEY", endpoint.api_key.clone());
    }
    let resp = http.send(&req).map_err(|e| fail(None, e.to_string(), None))?;
    if !resp.is_success() {
        let retry = resp.header_value("retry-after").map(str::to_string);
        return Err(fail(Some(resp.status), excerpt(&resp.body), retry));
    }
    let body: Value = serde_json::from_str(&resp.body)
        .map_err(|e| fail(Some(resp.status), format!("invalid JSON response: {e}"), None))?;
    let data = body
        .get("data")
        .and_then(Value::as_array)
        .ok_or_else(|| fail(Some(resp.status), "response has no `data` array".into(), None))?;
    let retrieved_at = clock.now();
    data.iter()
        .map(|d| {
            let payload = d
                .as_object()
                .cloned()
                .ok_or_else(|| fail(Some(resp.status), "`data` entries must be objects".into(), None))?;
            let material_id = payload.get("material_id").and_then(Value::as_str).map(str::to_string);
            if let Some(id) = &material_id {
                if !is_material_id(id) {
                    return Err(fail(Some(resp.status), format!("unexpected material_id `{id}`"), None));
                }
            }
            Ok(MPDocument {
                material_id,
                payload,
                provenance: Provenance { endpoint: q.endpoint_path.clone(), retrieved_at },
            })
        })
        .collect()
}
