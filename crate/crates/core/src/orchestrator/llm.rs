//! Chat-completion clients: an OpenAI-compatible HTTP client and a scripted
//! client that replays response files from a directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::http::{join_url, HttpError, JsonPoster};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self { role: "system".into(), content: content.into() }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self { role: "user".into(), content: content.into() }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self { role: "assistant".into(), content: content.into() }
    }
}

/// Where a request sits in the run; only the scripted client uses it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChatSlot {
    /// 1-based outer iteration.
    pub iteration: usize,
    /// 0-based sample index within the iteration.
    pub sample: usize,
    /// 0 for the first request, 1 for the parse-failure retry.
    pub attempt: usize,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LlmError {
    #[error(transparent)]
    Http(#[from] HttpError),
    #[error("response has no choices[0].message.content")]
    MissingContent,
    #[error("no scripted response for iteration {iteration}, sample {sample} in {dir}")]
    ScriptMissing { dir: String, iteration: usize, sample: usize },
    #[error("reading {path}: {reason}")]
    Io { path: String, reason: String },
}

pub trait LlmClient: Send + Sync {
    fn chat(&self, messages: &[ChatMessage], slot: ChatSlot) -> Result<String, LlmError>;
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LlmClientConfig {
    pub base_url: String,
    pub model_name: String,
    #[serde(default)]
    pub api_key_env: Option<String>,
    #[serde(default = "default_timeout_s")]
    pub timeout_s: f64,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    #[serde(default = "default_temperature")]
    pub request_temperature: f64,
}

fn default_timeout_s() -> f64 {
    120.0
}

fn default_max_retries() -> u32 {
    3
}

fn default_temperature() -> f64 {
    1.0
}

pub struct HttpChatClient {
    poster: JsonPoster,
    url: String,
    model: String,
    temperature: f64,
}

impl HttpChatClient {
    pub fn new(config: &LlmClientConfig) -> Result<Self, LlmError> {
        Ok(Self {
            poster: JsonPoster::new(config.timeout_s, config.api_key_env.as_deref(), config.max_retries)?,
            url: join_url(&config.base_url, "chat/completions"),
            model: config.model_name.clone(),
            temperature: config.request_temperature,
        })
    }
}

impl LlmClient for HttpChatClient {
    fn chat(&self, messages: &[ChatMessage], _slot: ChatSlot) -> Result<String, LlmError> {
        let body = json!({ "model": self.model, "messages": messages, "temperature": self.temperature });
        let resp = self.poster.post(&self.url, &body)?;
        resp["choices"][0]["message"]["content"].as_str().map(str::to_string).ok_or(LlmError::MissingContent)
    }
}

/// Replays `iter{n}_sample{k}.md` files. A retry reads
/// `iter{n}_sample{k}_retry{a}.md` when present, else the same file again.
/// A missing iteration falls back to the latest earlier one.
pub struct ScriptedLlm {
    dir: PathBuf,
}

impl ScriptedLlm {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn read(path: &Path) -> Result<String, LlmError> {
        std::fs::read_to_string(path).map_err(|e| LlmError::Io { path: path.display().to_string(), reason: e.to_string() })
    }
}

impl LlmClient for ScriptedLlm {
    fn chat(&self, _messages: &[ChatMessage], slot: ChatSlot) -> Result<String, LlmError> {
        for n in (1..=slot.iteration).rev() {
            let base = format!("iter{n}_sample{}", slot.sample);
            if slot.attempt > 0 {
                let retry = self.dir.join(format!("{base}_retry{}.md", slot.attempt));
                if retry.is_file() {
                    return Self::read(&retry);
                }
            }
            let path = self.dir.join(format!("{base}.md"));
            if path.is_file() {
                return Self::read(&path);
            }
        }
        Err(LlmError::ScriptMissing { dir: self.dir.display().to_string(), iteration: slot.iteration, sample: slot.sample })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::http::testing::serve;

    #[test]
    fn http_client_wire_format() {
        let reply = r#"{"choices":[{"message":{"role":"assistant","content":"hello"}}]}"#;
        let (base, rx) = serve(vec![(200, reply.to_string())]);
        let cfg = LlmClientConfig { base_url: format!("{base}/v1/"), model_name: "m1".into(), api_key_env: None, timeout_s: 5.0, max_retries: 0, request_temperature: 0.7 };
        let client = HttpChatClient::new(&cfg).unwrap();
        let out = client.chat(&[ChatMessage::system("s"), ChatMessage::user("u")], ChatSlot { iteration: 1, sample: 0, attempt: 0 }).unwrap();
        assert_eq!(out, "hello");
        let (line, body) = rx.recv().unwrap();
        assert_eq!(line, "POST /v1/chat/completions HTTP/1.1");
        let v: serde_json::Value = serde_json::from_str(&body).unwrap();
        assert_eq!(v["model"], "m1");
        assert_eq!(v["temperature"], 0.7);
        assert_eq!(v["messages"][1]["role"], "user");
        assert_eq!(v["messages"][1]["content"], "u");
    }

    #[test]
    fn http_client_reports_missing_content() {
        let (base, _rx) = serve(vec![(200, r#"{"choices":[]}"#.to_string())]);
        let cfg = LlmClientConfig { base_url: base, model_name: "m".into(), api_key_env: None, timeout_s: 5.0, max_retries: 0, request_temperature: 1.0 };
        let err = HttpChatClient::new(&cfg).unwrap().chat(&[], ChatSlot { iteration: 1, sample: 0, attempt: 0 });
        assert_eq!(err, Err(LlmError::MissingContent));
    }

    #[test]
    fn scripted_lookup_rules() {
        let dir = tempfile::tempdir().unwrap();
        let write = |name: &str, body: &str| std::fs::write(dir.path().join(name), body).unwrap();
        write("iter1_sample0.md", "a");
        write("iter1_sample0_retry1.md", "a-retry");
        write("iter1_sample1.md", "b");
        write("iter2_sample1.md", "b2");
        let llm = ScriptedLlm::new(dir.path());
        let at = |iteration, sample, attempt| llm.chat(&[], ChatSlot { iteration, sample, attempt });
        assert_eq!(at(1, 0, 0).unwrap(), "a");
        assert_eq!(at(1, 0, 1).unwrap(), "a-retry");
        assert_eq!(at(1, 1, 1).unwrap(), "b");
        assert_eq!(at(2, 1, 0).unwrap(), "b2");
        assert_eq!(at(3, 0, 0).unwrap(), "a");
        assert!(matches!(at(1, 5, 0), Err(LlmError::ScriptMissing { .. })));
    }
}
