use std::io::Write;
use std::sync::Mutex;

use super::{write_entry, CompletionRequest, FixtureEntry, GatewayError, LlmBackend};

/// Wraps a backend and appends every successful completion to a fixture
/// stream, in call order.
pub struct RecordingBackend<B> {
    inner: B,
    sink: Mutex<Box<dyn Write + Send>>,
}

impl<B: LlmBackend> RecordingBackend<B> {
    pub fn new(inner: B, sink: Box<dyn Write + Send>) -> Self {
        Self { inner, sink: Mutex::new(sink) }
    }

    pub fn into_inner(self) -> B {
        self.inner
    }
}

impl<B: LlmBackend> LlmBackend for RecordingBackend<B> {
    fn complete(&self, request: &CompletionRequest) -> Result<String, GatewayError> {
        // hold the lock across the call so concurrent sessions record in
        // the order their completions were produced
        let mut sink = self.sink.lock().unwrap();
        let completion = self.inner.complete(request)?;
        write_entry(
            &mut **sink,
            &FixtureEntry {
                session_id: request.session_id.clone(),
                agent: request.agent.clone(),
                prompt_digest: request.digest(),
                completion: completion.clone(),
            },
        )?;
        Ok(completion)
    }
}
