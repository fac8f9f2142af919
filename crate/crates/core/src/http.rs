//! Blocking JSON-over-HTTP POST with bounded retries, shared by the chat and
//! embedding clients.

use std::time::Duration;

use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HttpError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("HTTP status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed response: {0}")]
    Decode(String),
    #[error("environment variable `{0}` is not set")]
    MissingApiKey(String),
}

impl HttpError {
    fn retryable(&self) -> bool {
        match self {
            HttpError::Transport(_) => true,
            HttpError::Status { status, .. } => *status == 429 || *status >= 500,
            _ => false,
        }
    }
}

pub(crate) struct JsonPoster {
    agent: ureq::Agent,
    api_key: Option<String>,
    max_retries: u32,
}

impl JsonPoster {
    pub(crate) fn new(timeout_s: f64, api_key_env: Option<&str>, max_retries: u32) -> Result<Self, HttpError> {
        let api_key = match api_key_env {
            Some(var) if !var.is_empty() => Some(std::env::var(var).map_err(|_| HttpError::MissingApiKey(var.to_string()))?),
            _ => None,
        };
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(timeout_s.max(0.001))))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(Self { agent, api_key, max_retries })
    }

    fn post_once(&self, url: &str, body: &Value) -> Result<Value, HttpError> {
        let mut req = self.agent.post(url).header("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let payload = serde_json::to_vec(body).map_err(|e| HttpError::Decode(e.to_string()))?;
        let mut resp = req.send(&payload[..]).map_err(|e| HttpError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(|e| HttpError::Transport(e.to_string()))?;
        if !(200..300).contains(&status) {
            return Err(HttpError::Status { status, body: text });
        }
        serde_json::from_str(&text).map_err(|e| HttpError::Decode(e.to_string()))
    }

    pub(crate) fn post(&self, url: &str, body: &Value) -> Result<Value, HttpError> {
        let mut attempt = 0;
        loop {
            match self.post_once(url, body) {
                Err(e) if e.retryable() && attempt < self.max_retries => {
                    log::warn!("POST {url} failed ({e}); retry {}/{}", attempt + 1, self.max_retries);
                    std::thread::sleep(Duration::from_millis(200 << attempt.min(6)));
                    attempt += 1;
                }
                other => return other,
            }
        }
    }
}

pub(crate) fn join_url(base: &str, path: &str) -> String {
    format!("{}/{}", base.trim_end_matches('/'), path.trim_start_matches('/'))
}
