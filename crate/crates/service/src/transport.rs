//! Live blocking HTTP via ureq, with an optional client-side rate limit.

use std::io::Read;
use std::num::NonZeroU32;
use std::time::Duration;

use governor::clock::{Clock, DefaultClock};
use governor::{DefaultDirectRateLimiter, Quota, RateLimiter};
use mpagent_core::http::{HttpClient, HttpError, HttpRequest, HttpResponse, Method};

/// Responses larger than this are cut off while reading.
const MAX_BODY: u64 = 32 << 20;

pub struct UreqHttp {
    agent: ureq::Agent,
    limiter: Option<DefaultDirectRateLimiter>,
}

impl UreqHttp {
    pub fn new(timeout: Duration) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self { agent, limiter: None }
    }

    /// At most `per_second` requests per second; 0 disables the limit.
    pub fn rate_limited(mut self, per_second: u32) -> Self {
        self.limiter = NonZeroU32::new(per_second).map(|n| RateLimiter::direct(Quota::per_second(n)));
        self
    }

    fn wait_turn(&self) {
        let Some(limiter) = &self.limiter else { return };
        let clock = DefaultClock::default();
        while let Err(not_until) = limiter.check() {
            std::thread::sleep(not_until.wait_time_from(clock.now()));
        }
    }
}

fn map_error(err: ureq::Error) -> HttpError {
    match err {
        ureq::Error::Timeout(_) => HttpError::Timeout,
        ureq::Error::ConnectionFailed | ureq::Error::HostNotFound => HttpError::Connect(err.to_string()),
        ureq::Error::Io(e) if e.kind() == std::io::ErrorKind::ConnectionRefused => HttpError::Connect(e.to_string()),
        other => HttpError::Other(other.to_string()),
    }
}

impl HttpClient for UreqHttp {
    fn send(&self, request: &HttpRequest) -> Result<HttpResponse, HttpError> {
        self.wait_turn();
        tracing::debug!(method = %request.method, url = %request.url, "http request");
        let result = match request.method {
            Method::Get => {
                let mut req = self.agent.get(&request.url);
                for (k, v) in &request.headers {
                    req = req.header(k, v);
                }
                req.call()
            }
            Method::Post => {
                let mut req = self.agent.post(&request.url);
                for (k, v) in &request.headers {
                    req = req.header(k, v);
                }
                req.send(request.body.as_deref().unwrap_or(""))
            }
        };
        let mut resp = result.map_err(map_error)?;
        let status = resp.status().as_u16();
        let headers = resp
            .headers()
            .iter()
            .filter_map(|(k, v)| v.to_str().ok().map(|v| (k.as_str().to_string(), v.to_string())))
            .collect();
        let mut body = String::new();
        resp.body_mut()
            .as_reader()
            .take(MAX_BODY)
            .read_to_string(&mut body)
            .map_err(|e| HttpError::Other(format!("reading response body: {e}")))?;
        Ok(HttpResponse { status, headers, body })
    }
}
