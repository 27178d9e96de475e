#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use mpagent_core::http::{FailingHttp, HttpClient};
use mpagent_core::react::AgentEvent;
use mpagent_core::toolkit::MockMaterialsServer;
use mpagent_core::StepClock;
use mpagent_service::config::Config;
use mpagent_service::runtime::{Runtime, Transports};
use mpagent_service::server::{router, AppState};
use mpagent_service::store::SessionStore;
use serde_json::Value;
use tower::ServiceExt;

pub const STIFFEST_OXIDE_QUESTION: &str = "What's the stiffest material with the lowest formation energy in Si-O system?";
pub const LITAO3_QUESTION: &str = "Get the structures of LiTaO3 from Materials Project and tell me which one is the stable phase.";

pub fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn test_config(session_root: &Path) -> Config {
    let text = format!(
        r#"
[server]
session_root = "{root}"

[mp]
mock_dataset = "{repo}/fixtures/mp/dataset.json"

[backends.replay]
kind = "replay"
fixture_path = "{repo}/fixtures/llm/transcripts.jsonl"
"#,
        root = session_root.display(),
        repo = repo().display()
    );
    Config::from_toml(&text, &repo().join("test.toml")).unwrap()
}

pub struct TestApp {
    pub router: Router,
    pub state: Arc<AppState>,
    pub llm: Arc<FailingHttp>,
    pub dir: tempfile::TempDir,
}

/// Replay backend over the recorded transcripts, mock MP data, and an LLM
/// transport that refuses (and counts) every request.
pub fn replay_app() -> TestApp {
    let dir = tempfile::tempdir().unwrap();
    let cfg = test_config(&dir.path().join("sessions"));
    let llm = Arc::new(FailingHttp::default());
    let mp: Arc<dyn HttpClient> =
        Arc::new(MockMaterialsServer::load(&cfg.mp.base_url, cfg.mp.mock_dataset.as_ref().unwrap()).unwrap());
    let runtime = Runtime::with_transports(&cfg, None, Transports { llm: llm.clone(), mp }).unwrap();
    app_with(runtime, dir, llm)
}

pub fn app_with(runtime: Runtime, dir: tempfile::TempDir, llm: Arc<FailingHttp>) -> TestApp {
    let store = SessionStore::open(dir.path().join("sessions")).unwrap();
    let state = Arc::new(AppState { store, runtime, clock: Arc::new(StepClock::default()) });
    TestApp { router: router(state.clone()), state, llm, dir }
}

pub async fn call(router: &Router, req: Request<Body>) -> (StatusCode, Vec<u8>) {
    let resp = router.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = axum::body::to_bytes(resp.into_body(), usize::MAX).await.unwrap();
    (status, bytes.to_vec())
}

pub async fn create_session(router: &Router) -> String {
    let (status, body) = call(router, Request::post("/api/sessions").body(Body::empty()).unwrap()).await;
    assert_eq!(status, StatusCode::CREATED);
    let v: Value = serde_json::from_slice(&body).unwrap();
    v["id"].as_str().unwrap().to_string()
}

pub fn message_request(id: &str, text: &str, replay_session: Option<&str>) -> Request<Body> {
    let mut body = serde_json::json!({ "text": text });
    if let Some(s) = replay_session {
        body["replay_session"] = s.into();
    }
    Request::post(format!("/api/sessions/{id}/messages"))
        .header("content-type", "application/json")
        .body(Body::from(body.to_string()))
        .unwrap()
}

/// `(event name, id, data)` frames of an SSE body; comments are skipped.
pub fn sse_frames(body: &[u8]) -> Vec<(String, String, AgentEvent)> {
    let text = std::str::from_utf8(body).unwrap();
    let mut out = Vec::new();
    for block in text.split("\n\n").filter(|b| !b.trim().is_empty()) {
        let (mut event, mut id, mut data) = (String::new(), String::new(), String::new());
        for line in block.lines() {
            if let Some(v) = line.strip_prefix("event: ") {
                event = v.to_string();
            } else if let Some(v) = line.strip_prefix("id: ") {
                id = v.to_string();
            } else if let Some(v) = line.strip_prefix("data: ") {
                data.push_str(v);
            }
        }
        if data.is_empty() {
            continue;
        }
        out.push((event, id, serde_json::from_str(&data).unwrap()));
    }
    out
}

pub async fn post_and_collect(router: &Router, id: &str, text: &str, pin: &str) -> Vec<AgentEvent> {
    let (status, body) = call(router, message_request(id, text, Some(pin))).await;
    assert_eq!(status, StatusCode::OK, "{}", String::from_utf8_lossy(&body));
    let frames = sse_frames(&body);
    for (name, sid, ev) in &frames {
        assert_eq!(sid, &ev.seq.to_string());
        assert_eq!(*name, serde_json::to_value(ev.kind).unwrap().as_str().unwrap());
    }
    frames.into_iter().map(|(_, _, e)| e).collect()
}
