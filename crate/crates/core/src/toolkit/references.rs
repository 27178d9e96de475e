//! arXiv and Wikipedia lookups.

use serde_json::Value;

use crate::http::{HttpClient, HttpRequest};

pub const TOP_K: usize = 3;
pub const ARXIV_URL: &str = "http://export.arxiv.org/api/query";
pub const WIKIPEDIA_URL: &str = "https://en.wikipedia.org/w/api.php";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceSource {
    Arxiv,
    Wikipedia,
}

impl ReferenceSource {
    pub fn tool_name(self) -> &'static str {
        match self {
            ReferenceSource::Arxiv => "arxiv",
            ReferenceSource::Wikipedia => "wikipedia",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceEndpoints {
    pub arxiv: String,
    pub wikipedia: String,
}

impl Default for ReferenceEndpoints {
    fn default() -> Self {
        Self { arxiv: ARXIV_URL.into(), wikipedia: WIKIPEDIA_URL.into() }
    }
}

pub fn reference_url(source: ReferenceSource, query: &str, endpoints: &ReferenceEndpoints) -> String {
    let (base, pairs): (&str, Vec<(&str, String)>) = match source {
        ReferenceSource::Arxiv => (
            &endpoints.arxiv,
            vec![
                ("search_query", format!("all:{query}")),
                ("start", "0".into()),
                ("max_results", TOP_K.to_string()),
            ],
        ),
        ReferenceSource::Wikipedia => (
            &endpoints.wikipedia,
            vec![
                ("action", "query".into()),
                ("list", "search".into()),
                ("srsearch", query.into()),
                ("srlimit", TOP_K.to_string()),
                ("format", "json".into()),
            ],
        ),
    };
    let mut url = url::Url::parse(base).unwrap_or_else(|_| url::Url::parse("http://invalid.local/").expect("static url"));
    url.query_pairs_mut().extend_pairs(pairs);
    url.to_string()
}

fn squash(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn strip_tags(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut in_tag = false;
    for c in s.chars() {
        match c {
            '<' => in_tag = true,
            '>' if in_tag => in_tag = false,
            c if !in_tag => out.push(c),
            _ => {}
        }
    }
    out.replace("&quot;", "\"").replace("&amp;", "&").replace("&#039;", "'")
}

pub fn parse_arxiv(xml: &str) -> Result<Vec<String>, String> {
    let doc = roxmltree::Document::parse(xml).map_err(|e| format!("invalid Atom feed: {e}"))?;
    let text_of = |node: roxmltree::Node<'_, '_>, name: &str| {
        node.children()
            .find(|c| c.has_tag_name(name))
            .and_then(|c| c.text())
            .map(squash)
            .unwrap_or_default()
    };
    Ok(doc
        .descendants()
        .filter(|n| n.has_tag_name("entry"))
        .take(TOP_K)
        .map(|e| {
            let published = text_of(e, "published");
            let authors: Vec<String> = e
                .children()
                .filter(|c| c.has_tag_name("author"))
                .map(|a| text_of(a, "name"))
                .collect();
            format!(
                "Published: {}\nTitle: {}\nAuthors: {}\nSummary: {}",
                published.get(..10).unwrap_or(&published),
                text_of(e, "title"),
                authors.join(", "),
                text_of(e, "summary")
            )
        })
        .collect())
}

pub fn parse_wikipedia(body: &str) -> Result<Vec<String>, String> {
    let v: Value = serde_json::from_str(body).map_err(|e| format!("invalid response: {e}"))?;
    let results = v
        .pointer("/query/search")
        .and_then(Value::as_array)
        .ok_or_else(|| "response has no query.search array".to_string())?;
    Ok(results
        .iter()
        .take(TOP_K)
        .map(|r| {
            let title = r.get("title").and_then(Value::as_str).unwrap_or_default();
            let snippet = r.get("snippet").and_then(Value::as_str).unwrap_or_default();
            format!("Page: {title}\nSummary: {}", squash(&strip_tags(snippet)))
        })
        .collect())
}

/// Top results as one observation; every failure is an `Error on` string.
pub fn fetch_reference(
    source: ReferenceSource,
    query: &str,
    http: &dyn HttpClient,
    endpoints: &ReferenceEndpoints,
) -> String {
    let tool = source.tool_name();
    let query = query.trim();
    if query.is_empty() {
        return format!("Error on {tool}: query must not be empty. Please provide search terms.");
    }
    let req = HttpRequest::get(reference_url(source, query, endpoints));
    let resp = match http.send(&req) {
        Ok(r) if r.is_success() => r,
        Ok(r) => return format!("Error on {tool}: HTTP {}", r.status),
        Err(e) => return format!("Error on {tool}: {e}"),
    };
    let parsed = match source {
        ReferenceSource::Arxiv => parse_arxiv(&resp.body),
        ReferenceSource::Wikipedia => parse_wikipedia(&resp.body),
    };
    match parsed {
        Ok(items) if items.is_empty() => format!("No good {} result was found", match source {
            ReferenceSource::Arxiv => "Arxiv",
            ReferenceSource::Wikipedia => "Wikipedia",
        }),
        Ok(items) => items.join("\n\n"),
        Err(e) => format!("Error on {tool}: {e}"),
    }
}
