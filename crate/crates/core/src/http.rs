//! Blocking HTTP transport abstraction plus offline implementations.
//!
//! Every network call in the crate goes through [`HttpClient`]. The service
//! binary supplies a live transport; tests use [`RecordedHttp`],
//! [`MockMaterialsServer`](crate::toolkit::MockMaterialsServer) or
//! [`FailingHttp`].

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Method {
    Get,
    Post,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Get => "GET",
            Method::Post => "POST",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HttpRequest {
    pub method: Method,
    pub url: String,
    pub headers: Vec<(String, String)>,
    pub body: Option<String>,
}

impl HttpRequest {
    pub fn get(url: impl Into<String>) -> Self {
        Self { method: Method::Get, url: url.into(), headers: Vec::new(), body: None }
    }

    pub fn post_json(url: impl Into<String>, body: String) -> Self {
        Self {
            method: Method::Post,
            url: url.into(),
            headers: vec![("Content-Type".into(), "application/json".into())],
            body: Some(body),
        }
    }

    pub fn header(mut self, name: impl Into<String>, value: impl Into<String>) -> Self {
        self.headers.push((name.into(), value.into()));
        self
    }

    pub fn header_value(&self, name: &str) -> Option<&str> {
        self.headers
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.as_str())
    }

    /// `"GET https://host/path?query"`, the key used by recorded fixtures.
    pub fn request_line(&self) -> String {
        format!("{} {}", self.method, self.url)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HttpResponse {
    pub status: u16,
    #[serde(default)]
    pub headers: Vec<(String, String)>,
    pub body: String,
}

impl HttpResponse {
    pub fn new(status: u16, body: impl Into<String>) -> Self {
        Self { status, headers: Vec::new(), body: body.into() }
    }

    pub fn json(status: u16, body: &serde_json::Value) -> Self {
        Self {
            status,
            headers: vec![("content-type".into(), "application/json".into())],
            body: body.to_string(),
        }
    }

    pub fn header_value(&self, name: &str) -> Option<&str> {
        self.headers
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.as_str())
    }

    pub fn is_success(&self) -> bool {
        (200..300).contains(&self.status)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HttpError {
    #[error("request timed out")]
    Timeout,
    #[error("connection failed: {0}")]
    Connect(String),
    #[error("no recorded response for `{0}`")]
    NotRecorded(String),
    #[error("network access is disabled (attempted `{0}`)")]
    Disabled(String),
    #[error("transport error: {0}")]
    Other(String),
}

pub trait HttpClient: Send + Sync {
    fn send(&self, request: &HttpRequest) -> Result<HttpResponse, HttpError>;
}

impl<T: HttpClient + ?Sized> HttpClient for std::sync::Arc<T> {
    fn send(&self, request: &HttpRequest) -> Result<HttpResponse, HttpError> {
        (**self).send(request)
    }
}

/// Refuses every request and counts the attempts. Used to prove that replay
/// mode never touches the network.
#[derive(Debug, Default)]
pub struct FailingHttp {
    attempts: AtomicUsize,
}

impl FailingHttp {
    pub fn attempts(&self) -> usize {
        self.attempts.load(Ordering::SeqCst)
    }
}

impl HttpClient for FailingHttp {
    fn send(&self, request: &HttpRequest) -> Result<HttpResponse, HttpError> {
        self.attempts.fetch_add(1, Ordering::SeqCst);
        Err(HttpError::Disabled(request.request_line()))
    }
}

/// One line of a recorded HTTP fixture file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordedExchange {
    pub request: String,
    pub status: u16,
    #[serde(default)]
    pub headers: Vec<(String, String)>,
    pub body: String,
}

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error("line {line}: {reason}")]
    Line { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Serves responses from a JSON-lines file of request-line/response pairs.
/// Lookup is by exact request line; later duplicates override earlier ones.
#[derive(Debug, Default, Clone)]
pub struct RecordedHttp {
    exchanges: HashMap<String, HttpResponse>,
}

impl RecordedHttp {
    pub fn parse(text: &str) -> Result<Self, FixtureError> {
        let mut exchanges = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let ex: RecordedExchange = serde_json::from_str(line)
                .map_err(|e| FixtureError::Line { line: i + 1, reason: e.to_string() })?;
            exchanges.insert(
                ex.request,
                HttpResponse { status: ex.status, headers: ex.headers, body: ex.body },
            );
        }
        Ok(Self { exchanges })
    }

    pub fn load(path: &Path) -> Result<Self, FixtureError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn insert(&mut self, request_line: impl Into<String>, response: HttpResponse) {
        self.exchanges.insert(request_line.into(), response);
    }

    pub fn len(&self) -> usize {
        self.exchanges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exchanges.is_empty()
    }
}

impl HttpClient for RecordedHttp {
    fn send(&self, request: &HttpRequest) -> Result<HttpResponse, HttpError> {
        let line = request.request_line();
        self.exchanges
            .get(&line)
            .cloned()
            .ok_or(HttpError::NotRecorded(line))
    }
}
