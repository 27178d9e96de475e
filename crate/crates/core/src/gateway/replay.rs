use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use super::{truncate_at_stop, CompletionRequest, FixtureEntry, GatewayError, LlmBackend};

type Key = (String, String);

/// Deterministic backend over recorded completions.
///
/// Entries are shared (cheap to clone); cursors are per backend instance, so
/// each chat session or benchmark trial should get its own via [`fork`].
///
/// [`fork`]: ReplayBackend::fork
#[derive(Debug)]
pub struct ReplayBackend {
    entries: Arc<HashMap<Key, Vec<FixtureEntry>>>,
    cursors: Mutex<HashMap<Key, usize>>,
    pinned_session: Option<String>,
}

impl ReplayBackend {
    pub fn new(entries: Vec<FixtureEntry>) -> Self {
        let mut map: HashMap<Key, Vec<FixtureEntry>> = HashMap::new();
        for e in entries {
            map.entry((e.session_id.clone(), e.agent.clone())).or_default().push(e);
        }
        Self { entries: Arc::new(map), cursors: Mutex::new(HashMap::new()), pinned_session: None }
    }

    /// Answers every request from fixture session `session`, whatever
    /// session id the caller uses.
    pub fn pinned(mut self, session: impl Into<String>) -> Self {
        self.pinned_session = Some(session.into());
        self
    }

    /// Fresh cursors over the same entries.
    pub fn fork(&self) -> Self {
        Self {
            entries: Arc::clone(&self.entries),
            cursors: Mutex::new(HashMap::new()),
            pinned_session: self.pinned_session.clone(),
        }
    }

    pub fn fork_pinned(&self, session: impl Into<String>) -> Self {
        self.fork().pinned(session)
    }

    pub fn sessions(&self) -> Vec<String> {
        let mut s: Vec<String> = self.entries.keys().map(|(s, _)| s.clone()).collect();
        s.sort();
        s.dedup();
        s
    }

    pub fn remaining(&self, session: &str, agent: &str) -> usize {
        let key = (session.to_string(), agent.to_string());
        let total = self.entries.get(&key).map_or(0, Vec::len);
        total - self.cursors.lock().unwrap().get(&key).copied().unwrap_or(0).min(total)
    }
}

impl LlmBackend for ReplayBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<String, GatewayError> {
        let session = self.pinned_session.as_ref().unwrap_or(&request.session_id);
        let key = (session.clone(), request.agent.clone());
        let exhausted = || GatewayError::FixtureExhausted {
            session: session.clone(),
            agent: request.agent.clone(),
        };
        let list = self.entries.get(&key).ok_or_else(exhausted)?;
        let idx = {
            let mut cursors = self.cursors.lock().unwrap();
            let c = cursors.entry(key).or_insert(0);
            let idx = *c;
            if idx >= list.len() {
                return Err(exhausted());
            }
            *c += 1;
            idx
        };
        let entry = &list[idx];
        if !entry.prompt_digest.is_empty() {
            let digest = request.digest();
            if digest != entry.prompt_digest {
                tracing::warn!(
                    session = %session,
                    agent = %request.agent,
                    index = idx,
                    recorded = %entry.prompt_digest,
                    actual = %digest,
                    "prompt drift against replay fixture"
                );
            }
        }
        Ok(truncate_at_stop(&entry.completion, &request.stop).to_string())
    }
}
