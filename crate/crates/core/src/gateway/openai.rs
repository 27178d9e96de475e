use std::sync::Arc;
use std::time::Duration;

use serde_json::{json, Value};

use super::{truncate_at_stop, BackendConfig, BackendKind, CompletionRequest, GatewayError, LlmBackend};
use crate::http::{HttpClient, HttpRequest};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { max_retries: 3, base_delay: Duration::from_millis(500) }
    }
}

/// Client for `POST {base_url}/chat/completions`.
pub struct OpenAiBackend {
    url: String,
    model: String,
    temperature: f64,
    api_key: String,
    transport: Arc<dyn HttpClient>,
    retry: RetryPolicy,
}

impl OpenAiBackend {
    /// Reads the key from the environment variable named in the config.
    pub fn from_env(config: &BackendConfig, transport: Arc<dyn HttpClient>) -> Result<Self, GatewayError> {
        let key = std::env::var(&config.api_key_env).unwrap_or_default();
        Self::with_api_key(config, transport, key)
    }

    pub fn with_api_key(
        config: &BackendConfig,
        transport: Arc<dyn HttpClient>,
        api_key: impl Into<String>,
    ) -> Result<Self, GatewayError> {
        if config.kind != BackendKind::Live {
            return Err(GatewayError::Config("OpenAI client needs a live backend config".into()));
        }
        config.validate()?;
        let api_key = api_key.into();
        if api_key.trim().is_empty() {
            return Err(GatewayError::Auth(format!("environment variable {} is not set", config.api_key_env)));
        }
        let base = config.base_url.clone().unwrap_or_default();
        Ok(Self {
            url: format!("{}/chat/completions", base.trim_end_matches('/')),
            model: config.model.clone().unwrap_or_default(),
            temperature: config.temperature,
            api_key,
            transport,
            retry: RetryPolicy::default(),
        })
    }

    pub fn retry_policy(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    fn body(&self, request: &CompletionRequest) -> Value {
        let mut messages = Vec::new();
        if !request.system.is_empty() {
            messages.push(json!({"role": "system", "content": request.system}));
        }
        messages.push(json!({"role": "user", "content": request.user}));
        let mut body = json!({
            "model": self.model,
            "messages": messages,
            "temperature": self.temperature,
        });
        if !request.stop.is_empty() {
            body["stop"] = json!(request.stop);
        }
        body
    }
}

fn parse_completion(body: &str) -> Result<String, GatewayError> {
    let v: Value = serde_json::from_str(body).map_err(|e| GatewayError::BadResponse(e.to_string()))?;
    v.pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| GatewayError::BadResponse("missing choices[0].message.content".into()))
}

impl LlmBackend for OpenAiBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<String, GatewayError> {
        let http = HttpRequest::post_json(self.url.clone(), self.body(request).to_string())
            .header("Authorization", format!("Bearer {}", self.api_key));
        let mut attempts = 0;
        loop {
            attempts += 1;
            let (message, status) = match self.transport.send(&http) {
                Ok(resp) if resp.is_success() => {
                    let text = parse_completion(&resp.body)?;
                    return Ok(truncate_at_stop(&text, &request.stop).to_string());
                }
                Ok(resp) if resp.status == 401 || resp.status == 403 => {
                    return Err(GatewayError::Auth(format!("key rejected (HTTP {})", resp.status)));
                }
                Ok(resp) if resp.status == 429 || resp.status >= 500 => {
                    (resp.body.chars().take(200).collect::<String>(), Some(resp.status))
                }
                Ok(resp) => {
                    return Err(GatewayError::Transport {
                        message: resp.body.chars().take(200).collect(),
                        attempts,
                        status: Some(resp.status),
                    })
                }
                Err(e) => (e.to_string(), None),
            };
            if attempts > self.retry.max_retries {
                return Err(GatewayError::Transport { message, attempts, status });
            }
            let delay = self.retry.base_delay * 2u32.pow(attempts - 1);
            tracing::warn!(attempt = attempts, ?status, %message, ?delay, "completion failed, retrying");
            std::thread::sleep(delay);
        }
    }
}
