//! HTTP API: sessions, SSE message streams, traces and workspace files.

use std::convert::Infallible;
use std::panic::AssertUnwindSafe;
use std::sync::{Arc, Mutex};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use mpagent_core::gateway::LlmBackend;
use mpagent_core::react::{AgentEvent, EventKind, EventSink, LoopContext, LoopEvent, Outcome, SequencingSink};
use mpagent_core::Clock;
use serde::Deserialize;
use serde_json::json;
use tokio::sync::mpsc;
use tokio_stream::wrappers::UnboundedReceiverStream;
use tokio_stream::{Stream, StreamExt};
use uuid::Uuid;

use crate::runtime::Runtime;
use crate::store::{SessionStore, StoreError, Ticket};

pub struct AppState {
    pub store: SessionStore,
    pub runtime: Runtime,
    pub clock: Arc<dyn Clock>,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self { status, message: message.into() }
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let status = match &e {
            StoreError::NotFound | StoreError::NoMessage(_) | StoreError::NoFile | StoreError::Incomplete(_) => {
                StatusCode::NOT_FOUND
            }
            StoreError::Busy | StoreError::Closed | StoreError::StillRunning(_) => StatusCode::CONFLICT,
            StoreError::Forbidden => StatusCode::FORBIDDEN,
            StoreError::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        if status == StatusCode::INTERNAL_SERVER_ERROR {
            tracing::error!(error = %e, "storage failure");
        }
        Self::new(status, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn session_id(raw: &str) -> ApiResult<Uuid> {
    Uuid::parse_str(raw).map_err(|_| ApiError::from(StoreError::NotFound))
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/api/sessions", post(create_session))
        .route("/api/sessions/{id}", get(get_session).delete(close_session))
        .route("/api/sessions/{id}/messages", post(post_message))
        .route("/api/sessions/{id}/traces/{n}", get(get_trace))
        .route("/api/sessions/{id}/files/{*name}", get(get_file))
        .with_state(state)
}

async fn health(State(st): State<Arc<AppState>>) -> Json<serde_json::Value> {
    Json(json!({
        "status": "ok",
        "backend": st.runtime.backend_name,
        "replay": st.runtime.backend.is_replay(),
    }))
}

async fn create_session(State(st): State<Arc<AppState>>) -> ApiResult<impl IntoResponse> {
    let view = st.store.create()?;
    Ok((StatusCode::CREATED, Json(view)))
}

async fn get_session(State(st): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    Ok(Json(st.store.view(session_id(&id)?)?))
}

async fn close_session(State(st): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    Ok(Json(st.store.close(session_id(&id)?)?))
}

async fn get_trace(State(st): State<Arc<AppState>>, Path((id, n)): Path<(String, String)>) -> ApiResult<Response> {
    let id = session_id(&id)?;
    let n: usize = n.parse().map_err(|_| ApiError::from(StoreError::NoMessage(usize::MAX)))?;
    let trace = st.store.trace(id, n)?;
    Ok(([(header::CONTENT_TYPE, "application/json")], trace.to_json()).into_response())
}

fn content_type(name: &str) -> &'static str {
    match name.rsplit('.').next().unwrap_or("") {
        "json" => "application/json",
        "txt" | "log" | "out" => "text/plain; charset=utf-8",
        "csv" => "text/csv",
        "cif" => "chemical/x-cif",
        _ => "application/octet-stream",
    }
}

async fn get_file(State(st): State<Arc<AppState>>, Path((id, name)): Path<(String, String)>) -> ApiResult<Response> {
    let path = st.store.workspace_file(session_id(&id)?, &name)?;
    let bytes = tokio::fs::read(&path).await.map_err(|_| ApiError::from(StoreError::NoFile))?;
    Ok(([(header::CONTENT_TYPE, content_type(&name))], bytes).into_response())
}

#[derive(Debug, Deserialize)]
pub struct PostMessage {
    pub text: String,
    /// Replay backends only: the recorded session to follow.
    #[serde(default)]
    pub replay_session: Option<String>,
}

async fn post_message(
    State(st): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Result<Json<PostMessage>, JsonRejection>,
) -> ApiResult<Sse<impl Stream<Item = Result<Event, Infallible>>>> {
    let id = session_id(&id)?;
    let Json(body) = body.map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, e.body_text()))?;
    let text = body.text.trim().to_string();
    if text.is_empty() {
        return Err(ApiError::new(StatusCode::BAD_REQUEST, "message text must not be empty"));
    }
    st.store.view(id)?;
    let backend = if st.runtime.backend.is_replay() {
        let pin = body.replay_session.or_else(|| st.runtime.backend.default_pin()).ok_or_else(|| {
            ApiError::new(
                StatusCode::BAD_REQUEST,
                format!(
                    "replay backend needs `replay_session`; recorded sessions: {}",
                    st.runtime.backend.replay_sessions().join(", ")
                ),
            )
        })?;
        st.runtime.backend.for_run(Some(&pin))
    } else {
        st.runtime.backend.for_run(None)
    }
    .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, e.to_string()))?;

    let ticket = st.store.begin_message(id, &text)?;
    let (tx, rx) = mpsc::unbounded_channel();
    let state = st.clone();
    tokio::task::spawn_blocking(move || run_message(state, &ticket, &text, backend, tx));

    let stream = UnboundedReceiverStream::new(rx).map(|ev: AgentEvent| {
        let kind = serde_json::to_value(ev.kind).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
        Ok(Event::default()
            .event(kind)
            .id(ev.seq.to_string())
            .data(serde_json::to_string(&ev).expect("events serialize")))
    });
    Ok(Sse::new(stream).keep_alive(KeepAlive::default()))
}

fn error_event(agent: &str, reason: &str, message: String) -> LoopEvent {
    LoopEvent { kind: EventKind::Error, agent: agent.into(), payload: json!({"reason": reason, "message": message}) }
}

/// Runs one message to completion. The terminal event is held back until
/// the trace is persisted, so a client that sees it can fetch the trace.
fn run_message(
    st: Arc<AppState>,
    ticket: &Ticket,
    text: &str,
    backend: Arc<dyn LlmBackend>,
    tx: mpsc::UnboundedSender<AgentEvent>,
) {
    let terminal: Arc<Mutex<Option<AgentEvent>>> = Arc::default();
    let sid = ticket.session_id.to_string();
    let supervisor = st.runtime.system.supervisor().name.clone();
    let sink = SequencingSink::new(sid.clone(), ticket.first_seq, st.clock.clone(), {
        let st = st.clone();
        let held = terminal.clone();
        let tx = tx.clone();
        move |ev: AgentEvent| {
            if let Err(e) = st.store.append_event(&ev) {
                tracing::warn!(session = %ev.session_id, seq = ev.seq, error = %e, "failed to log event");
            }
            if ev.kind.is_terminal() {
                let mut slot = held.lock().unwrap();
                if slot.is_none() {
                    *slot = Some(ev);
                }
            } else {
                let _ = tx.send(ev);
            }
        }
    });
    let ctx = LoopContext {
        session_id: &sid,
        backend: backend.as_ref(),
        sink: &sink,
        clock: st.clock.as_ref(),
        workspace: Some(&ticket.workspace),
        depth: 0,
    };
    let result = std::panic::catch_unwind(AssertUnwindSafe(|| st.runtime.system.run(text, &ctx)));
    let (trace, reply) = match result {
        Ok(Ok(trace)) => {
            let reply = match &trace.outcome {
                Outcome::Answered { text } => text.clone(),
                Outcome::StepBudgetExhausted => "No final answer within the step budget.".to_string(),
                Outcome::BackendError { message } => format!("The language model backend failed: {message}"),
            };
            (Some(trace), reply)
        }
        Ok(Err(e)) => {
            sink.emit(error_event(&supervisor, "agent_error", e.to_string()));
            (None, format!("Agent error: {e}"))
        }
        Err(_) => {
            sink.emit(error_event(&supervisor, "internal_error", "agent loop panicked".into()));
            (None, "Internal error.".to_string())
        }
    };
    if terminal.lock().unwrap().is_none() {
        sink.emit(error_event(&supervisor, "internal_error", "run ended without a terminal event".into()));
    }
    if let Err(e) = st.store.finish_message(ticket, trace, &reply) {
        tracing::error!(session = %ticket.session_id, error = %e, "failed to persist trace");
    }
    let held = terminal.lock().unwrap().take();
    if let Some(ev) = held {
        let _ = tx.send(ev);
    }
}
