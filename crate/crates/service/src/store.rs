//! Session state with an append-only JSON-lines log per session under
//! `<root>/<id>/log.jsonl`; tool artifacts go to `<root>/<id>/workspace/`.

use std::collections::HashMap;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use chrono::{DateTime, Utc};
use mpagent_core::react::{AgentEvent, ReActTrace};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use uuid::Uuid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Idle,
    Running,
    Closed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    User,
    Agent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub text: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SessionView {
    pub id: Uuid,
    pub created_at: DateTime<Utc>,
    pub status: Status,
    pub messages: Vec<Message>,
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("session not found")]
    NotFound,
    #[error("session is busy with another message")]
    Busy,
    #[error("session is closed")]
    Closed,
    #[error("message {0} not found")]
    NoMessage(usize),
    #[error("message {0} is still running")]
    StillRunning(usize),
    #[error("message {0} did not complete")]
    Incomplete(usize),
    #[error("path escapes the session workspace")]
    Forbidden,
    #[error("file not found")]
    NoFile,
    #[error("storage: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum LogRecord {
    Created { id: Uuid, created_at: DateTime<Utc> },
    Message { role: Role, text: String },
    Event { event: AgentEvent },
    Trace { index: usize, trace: ReActTrace },
    Closed,
}

struct Session {
    id: Uuid,
    created_at: DateTime<Utc>,
    status: Status,
    messages: Vec<Message>,
    /// one slot per user message, filled when its run completes
    traces: Vec<Option<ReActTrace>>,
    next_seq: u64,
    dir: PathBuf,
}

impl Session {
    fn view(&self) -> SessionView {
        SessionView { id: self.id, created_at: self.created_at, status: self.status, messages: self.messages.clone() }
    }

    fn log(&self, record: &LogRecord) -> std::io::Result<()> {
        let mut line = serde_json::to_string(record).map_err(std::io::Error::other)?;
        line.push('\n');
        OpenOptions::new().create(true).append(true).open(self.dir.join("log.jsonl"))?.write_all(line.as_bytes())
    }
}

/// A started message: where its run writes and where its events start.
#[derive(Debug, Clone)]
pub struct Ticket {
    pub session_id: Uuid,
    pub index: usize,
    pub first_seq: u64,
    pub workspace: PathBuf,
}

pub struct SessionStore {
    root: PathBuf,
    sessions: Mutex<HashMap<Uuid, Arc<Mutex<Session>>>>,
}

impl SessionStore {
    /// Opens `root`, creating it if needed, and reloads sessions found there.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        std::fs::create_dir_all(&root)?;
        let mut sessions = HashMap::new();
        for entry in std::fs::read_dir(&root)? {
            let dir = entry?.path();
            let log = dir.join("log.jsonl");
            if !log.is_file() {
                continue;
            }
            match reload(&dir, &log) {
                Ok(s) => {
                    sessions.insert(s.id, Arc::new(Mutex::new(s)));
                }
                Err(e) => tracing::warn!(path = %log.display(), error = %e, "skipping unreadable session log"),
            }
        }
        Ok(Self { root, sessions: Mutex::new(sessions) })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn session(&self, id: Uuid) -> Result<Arc<Mutex<Session>>, StoreError> {
        self.sessions.lock().unwrap().get(&id).cloned().ok_or(StoreError::NotFound)
    }

    pub fn create(&self) -> Result<SessionView, StoreError> {
        let id = Uuid::new_v4();
        let dir = self.root.join(id.to_string());
        std::fs::create_dir_all(dir.join("workspace"))?;
        let s = Session {
            id,
            created_at: Utc::now(),
            status: Status::Idle,
            messages: Vec::new(),
            traces: Vec::new(),
            next_seq: 0,
            dir,
        };
        s.log(&LogRecord::Created { id, created_at: s.created_at })?;
        let view = s.view();
        self.sessions.lock().unwrap().insert(id, Arc::new(Mutex::new(s)));
        Ok(view)
    }

    pub fn view(&self, id: Uuid) -> Result<SessionView, StoreError> {
        Ok(self.session(id)?.lock().unwrap().view())
    }

    /// Marks the session running and records the user message.
    pub fn begin_message(&self, id: Uuid, text: &str) -> Result<Ticket, StoreError> {
        let arc = self.session(id)?;
        let mut s = arc.lock().unwrap();
        match s.status {
            Status::Running => return Err(StoreError::Busy),
            Status::Closed => return Err(StoreError::Closed),
            Status::Idle => {}
        }
        let msg = Message { role: Role::User, text: text.to_string() };
        s.log(&LogRecord::Message { role: msg.role, text: msg.text.clone() })?;
        s.messages.push(msg);
        s.traces.push(None);
        s.status = Status::Running;
        Ok(Ticket { session_id: id, index: s.traces.len() - 1, first_seq: s.next_seq, workspace: s.dir.join("workspace") })
    }

    pub fn append_event(&self, event: &AgentEvent) -> Result<(), StoreError> {
        let id = Uuid::parse_str(&event.session_id).map_err(|_| StoreError::NotFound)?;
        let arc = self.session(id)?;
        let mut s = arc.lock().unwrap();
        s.next_seq = s.next_seq.max(event.seq + 1);
        s.log(&LogRecord::Event { event: event.clone() })?;
        Ok(())
    }

    /// Stores the finished trace (if the run produced one) and returns the
    /// session to idle.
    pub fn finish_message(&self, ticket: &Ticket, trace: Option<ReActTrace>, reply: &str) -> Result<(), StoreError> {
        let arc = self.session(ticket.session_id)?;
        let mut s = arc.lock().unwrap();
        s.status = Status::Idle;
        let reply = Message { role: Role::Agent, text: reply.to_string() };
        let mut result = s.log(&LogRecord::Message { role: reply.role, text: reply.text.clone() });
        s.messages.push(reply);
        if let Some(trace) = trace {
            if result.is_ok() {
                result = s.log(&LogRecord::Trace { index: ticket.index, trace: trace.clone() });
            }
            s.traces[ticket.index] = Some(trace);
        }
        Ok(result?)
    }

    pub fn trace(&self, id: Uuid, index: usize) -> Result<ReActTrace, StoreError> {
        let arc = self.session(id)?;
        let s = arc.lock().unwrap();
        match s.traces.get(index) {
            None => Err(StoreError::NoMessage(index)),
            Some(Some(t)) => Ok(t.clone()),
            Some(None) if s.status == Status::Running && index + 1 == s.traces.len() => Err(StoreError::StillRunning(index)),
            Some(None) => Err(StoreError::Incomplete(index)),
        }
    }

    pub fn close(&self, id: Uuid) -> Result<SessionView, StoreError> {
        let arc = self.session(id)?;
        let mut s = arc.lock().unwrap();
        match s.status {
            Status::Running => Err(StoreError::Busy),
            Status::Closed => Ok(s.view()),
            Status::Idle => {
                s.log(&LogRecord::Closed)?;
                s.status = Status::Closed;
                Ok(s.view())
            }
        }
    }

    /// Resolves `name` inside the session workspace.
    pub fn workspace_file(&self, id: Uuid, name: &str) -> Result<PathBuf, StoreError> {
        let workspace = self.session(id)?.lock().unwrap().dir.join("workspace");
        resolve_confined(&workspace, name)
    }
}

/// `root/name`, provided `name` is a relative path of plain components and
/// the resolved file (after following symlinks) is still under `root`.
pub fn resolve_confined(root: &Path, name: &str) -> Result<PathBuf, StoreError> {
    let plain = |c: &str| !c.is_empty() && c != "." && c != "..";
    if name.is_empty() || name.contains(['\\', '\0', ':']) || !name.split('/').all(plain) {
        return Err(StoreError::Forbidden);
    }
    let root = root.canonicalize()?;
    let path = root.join(name).canonicalize().map_err(|_| StoreError::NoFile)?;
    if !path.starts_with(&root) {
        return Err(StoreError::Forbidden);
    }
    if !path.is_file() {
        return Err(StoreError::NoFile);
    }
    Ok(path)
}

fn reload(dir: &Path, log: &Path) -> Result<Session, StoreError> {
    let text = std::fs::read_to_string(log)?;
    let mut s: Option<Session> = None;
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let rec: LogRecord = serde_json::from_str(line).map_err(std::io::Error::other)?;
        match (rec, s.as_mut()) {
            (LogRecord::Created { id, created_at }, None) => {
                s = Some(Session {
                    id,
                    created_at,
                    status: Status::Idle,
                    messages: Vec::new(),
                    traces: Vec::new(),
                    next_seq: 0,
                    dir: dir.to_path_buf(),
                })
            }
            (LogRecord::Message { role, text }, Some(s)) => {
                if role == Role::User {
                    s.traces.push(None);
                }
                s.messages.push(Message { role, text });
            }
            (LogRecord::Event { event }, Some(s)) => s.next_seq = s.next_seq.max(event.seq + 1),
            (LogRecord::Trace { index, trace }, Some(s)) if index < s.traces.len() => s.traces[index] = Some(trace),
            (LogRecord::Closed, Some(s)) => s.status = Status::Closed,
            _ => return Err(std::io::Error::other("malformed session log").into()),
        }
    }
    s.ok_or_else(|| std::io::Error::other("empty session log").into())
}
