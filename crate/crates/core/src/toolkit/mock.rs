//! In-process stand-in for the Materials Project API, serving a small
//! dataset with the same query parameters and response envelope.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::Deserialize;
use serde_json::{json, Map, Value};

use crate::http::{HttpClient, HttpError, HttpRequest, HttpResponse, Method};

#[derive(Debug, Clone, Default, Deserialize)]
pub struct MockDataset {
    /// endpoint path (e.g. `/materials/summary/`) → documents
    pub endpoints: BTreeMap<String, Vec<Map<String, Value>>>,
}

#[derive(Debug, Clone)]
pub struct MockMaterialsServer {
    base_url: url::Url,
    api_key: Option<String>,
    data: MockDataset,
}

fn bad_request(detail: String) -> HttpResponse {
    HttpResponse::json(400, &json!({ "detail": detail }))
}

fn list(v: &str) -> Vec<&str> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).collect()
}

fn chemsys_key(s: &str) -> String {
    let mut parts: Vec<&str> = s.split('-').map(str::trim).collect();
    parts.sort_unstable();
    parts.join("-")
}

fn cmp_values(a: Option<&Value>, b: Option<&Value>) -> Ordering {
    match (a, b) {
        (None, None) => Ordering::Equal,
        (None, Some(_)) => Ordering::Greater,
        (Some(_), None) => Ordering::Less,
        (Some(x), Some(y)) => match (x.as_f64(), y.as_f64()) {
            (Some(p), Some(q)) => p.total_cmp(&q),
            _ => x.to_string().cmp(&y.to_string()),
        },
    }
}

impl MockMaterialsServer {
    pub fn new(base_url: &str, data: MockDataset) -> Self {
        Self {
            base_url: url::Url::parse(base_url).expect("valid base url"),
            api_key: None,
            data,
        }
    }

    pub fn load(base_url: &str, path: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let data: MockDataset =
            serde_json::from_str(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
        Ok(Self::new(base_url, data))
    }

    /// Requests without this `X-API-KEY` get HTTP 401.
    pub fn require_key(mut self, key: impl Into<String>) -> Self {
        self.api_key = Some(key.into());
        self
    }

    fn matches(doc: &Map<String, Value>, key: &str, value: &str) -> Result<bool, String> {
        let field = |k: &str| doc.get(k);
        let s = |k: &str| field(k).and_then(Value::as_str);
        Ok(match key {
            "material_ids" => s("material_id").is_some_and(|id| list(value).contains(&id)),
            "formula" => s("formula_pretty").is_some_and(|f| list(value).contains(&f)),
            "chemsys" => s("chemsys").is_some_and(|c| list(value).iter().any(|v| chemsys_key(v) == chemsys_key(c))),
            "elements" => {
                let have: HashSet<&str> = field("elements")
                    .and_then(Value::as_array)
                    .map(|a| a.iter().filter_map(Value::as_str).collect())
                    .unwrap_or_default();
                list(value).iter().all(|e| have.contains(e))
            }
            "ordering" | "target_formula" => s(key) == Some(value),
            "precursor_formula" => field("precursors")
                .and_then(Value::as_array)
                .is_some_and(|a| a.iter().any(|p| p.as_str() == Some(value))),
            "keywords" => {
                let text = Value::Object(doc.clone()).to_string().to_lowercase();
                list(value).iter().all(|k| text.contains(&k.to_lowercase()))
            }
            "is_stable" | "is_gap_direct" => {
                let want = value == "true";
                field(key).and_then(Value::as_bool) == Some(want)
            }
            k if k.ends_with("_min") || k.ends_with("_max") => {
                let bound: f64 = value.parse().map_err(|_| format!("`{k}` must be a number"))?;
                let name = &k[..k.len() - 4];
                match field(name).and_then(Value::as_f64) {
                    Some(x) if k.ends_with("_min") => x >= bound,
                    Some(x) => x <= bound,
                    None => false,
                }
            }
            other => return Err(format!("unknown parameter `{other}`")),
        })
    }

    fn search(&self, path: &str, pairs: &[(String, String)]) -> HttpResponse {
        let Some(docs) = self.data.endpoints.get(path) else {
            return HttpResponse::json(404, &json!({"detail": "Not Found"}));
        };
        let mut fields: Option<Vec<String>> = None;
        let mut limit = 10usize;
        let mut sort: Vec<(String, bool)> = Vec::new();
        let mut filters = Vec::new();
        for (k, v) in pairs {
            match k.as_str() {
                "_fields" => fields = Some(list(v).into_iter().map(str::to_string).collect()),
                "_limit" => match v.parse() {
                    Ok(n) => limit = n,
                    Err(_) => return bad_request("`_limit` must be an integer".into()),
                },
                "_sort_fields" => {
                    sort = list(v)
                        .into_iter()
                        .map(|f| match f.strip_prefix('-') {
                            Some(name) => (name.to_string(), true),
                            None => (f.to_string(), false),
                        })
                        .collect()
                }
                _ => filters.push((k.as_str(), v.as_str())),
            }
        }

        let mut hits: Vec<(usize, &Map<String, Value>)> = Vec::new();
        for (i, d) in docs.iter().enumerate() {
            let mut keep = true;
            for (k, v) in &filters {
                match Self::matches(d, k, v) {
                    Ok(true) => {}
                    Ok(false) => keep = false,
                    Err(msg) => return bad_request(msg),
                }
            }
            if keep {
                hits.push((i, d));
            }
        }
        if !sort.is_empty() {
            // ties are broken by dataset order in the direction of the first
            // key, so "-f" is exactly the reverse of "f"
            let first_desc = sort[0].1;
            hits.sort_by(|(ia, a), (ib, b)| {
                for (f, desc) in &sort {
                    let mut o = cmp_values(a.get(f), b.get(f));
                    if *desc {
                        o = o.reverse();
                    }
                    if o != Ordering::Equal {
                        return o;
                    }
                }
                if first_desc { ib.cmp(ia) } else { ia.cmp(ib) }
            });
        }
        let total = hits.len();
        let data: Vec<Value> = hits
            .into_iter()
            .take(limit)
            .map(|(_, d)| match &fields {
                Some(f) => Value::Object(d.iter().filter(|(k, _)| f.contains(k)).map(|(k, v)| (k.clone(), v.clone())).collect()),
                None => Value::Object(d.clone()),
            })
            .collect();
        HttpResponse::json(200, &json!({"data": data, "meta": {"total_doc": total, "max_limit": 1000}}))
    }
}

impl HttpClient for MockMaterialsServer {
    fn send(&self, request: &HttpRequest) -> Result<HttpResponse, HttpError> {
        let url = url::Url::parse(&request.url).map_err(|e| HttpError::Other(e.to_string()))?;
        if url.origin() != self.base_url.origin() {
            return Err(HttpError::Connect(format!("mock serves {} only", self.base_url)));
        }
        if request.method != Method::Get {
            return Ok(HttpResponse::json(405, &json!({"detail": "Method Not Allowed"})));
        }
        if let Some(key) = &self.api_key {
            if request.header_value("x-api-key") != Some(key.as_str()) {
                return Ok(HttpResponse::json(401, &json!({"detail": "API key is missing or invalid"})));
            }
        }
        let pairs: Vec<(String, String)> = url.query_pairs().map(|(k, v)| (k.into_owned(), v.into_owned())).collect();
        Ok(self.search(url.path(), &pairs))
    }
}
