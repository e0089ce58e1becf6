//! LLM endpoints: an HTTP chat-completions client and a file-backed mock
//! that replays authored responses.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use log::warn;
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::prompt::Method;

/// Endpoint URL prefix selecting the file-backed mock.
pub const MOCK_PREFIX: &str = "mock:";

#[derive(Debug, Error)]
pub enum EndpointError {
    #[error("request to {url} failed after {attempts} attempts: {reason}")]
    Request { url: String, attempts: u32, reason: String },
    #[error("endpoint returned status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed endpoint response: {0}")]
    Malformed(String),
    #[error("environment variable {0} holding the auth token is not set")]
    MissingToken(String),
    #[error("no mock response for article {article_id} ({method}, query {query}) under {dir}")]
    MissingMock {
        article_id: String,
        method: Method,
        query: usize,
        dir: String,
    },
    #[error("mock file {path}: {reason}")]
    MockRead { path: String, reason: String },
    #[error("invalid endpoint config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: "user".into(),
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self {
            role: "assistant".into(),
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LlmResponse {
    pub text: String,
    /// Usage reported by the endpoint, when it reports any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_tokens: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub completion_tokens: Option<usize>,
}

/// Which article/query a request belongs to. Real endpoints ignore it; the
/// mock uses it to find the scripted answer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RequestContext {
    pub article_id: String,
    pub method: Method,
    /// 1-based query number within the article's conversation.
    pub query: usize,
}

pub trait LlmClient: Send + Sync {
    fn model_name(&self) -> &str;
    fn complete(&self, messages: &[ChatMessage], ctx: &RequestContext) -> Result<LlmResponse, EndpointError>;
    /// Requests actually sent (for the mock: files served).
    fn calls(&self) -> usize;
}

fn default_timeout() -> u64 {
    60
}
fn default_retries() -> u32 {
    3
}
fn default_backoff() -> u64 {
    500
}
fn default_in_flight() -> usize {
    4
}
fn default_model() -> String {
    "mock".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndpointConfig {
    /// Chat-completions base URL, or `mock:<dir>`.
    pub base_url: String,
    #[serde(default = "default_model")]
    pub model: String,
    /// Name of the environment variable holding the bearer token.
    #[serde(default)]
    pub auth_env: Option<String>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    /// First retry delay; doubles on every further attempt.
    #[serde(default = "default_backoff")]
    pub backoff_ms: u64,
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
    #[serde(default)]
    pub requests_per_minute: Option<u32>,
    #[serde(default)]
    pub temperature: f64,
}

impl EndpointConfig {
    pub fn new(base_url: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            model: default_model(),
            auth_env: None,
            timeout_secs: default_timeout(),
            max_retries: default_retries(),
            backoff_ms: default_backoff(),
            max_in_flight: default_in_flight(),
            requests_per_minute: None,
            temperature: 0.0,
        }
    }
}

/// Builds the client named by `config.base_url`.
pub fn connect(config: &EndpointConfig) -> Result<Box<dyn LlmClient>, EndpointError> {
    if config.max_in_flight == 0 {
        return Err(EndpointError::Config("max_in_flight must be positive".into()));
    }
    match config.base_url.strip_prefix(MOCK_PREFIX) {
        Some(dir) => Ok(Box::new(MockClient::new(dir, &config.model))),
        None => Ok(Box::new(HttpClient::new(config.clone())?)),
    }
}

/// Replays `{dir}/{method}/{id}.{query}.txt`, falling back to
/// `{dir}/{method}/{id}.txt` and then `{dir}/{id}.txt`.
#[derive(Debug)]
pub struct MockClient {
    dir: PathBuf,
    model: String,
    calls: AtomicUsize,
}

impl MockClient {
    pub fn new(dir: impl AsRef<Path>, model: &str) -> Self {
        Self {
            dir: dir.as_ref().to_path_buf(),
            model: model.to_string(),
            calls: AtomicUsize::new(0),
        }
    }

    fn candidates(&self, ctx: &RequestContext) -> [PathBuf; 3] {
        let method_dir = self.dir.join(ctx.method.key());
        [
            method_dir.join(format!("{}.{}.txt", ctx.article_id, ctx.query)),
            method_dir.join(format!("{}.txt", ctx.article_id)),
            self.dir.join(format!("{}.txt", ctx.article_id)),
        ]
    }
}

impl LlmClient for MockClient {
    fn model_name(&self) -> &str {
        &self.model
    }

    fn complete(&self, _messages: &[ChatMessage], ctx: &RequestContext) -> Result<LlmResponse, EndpointError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let path = self
            .candidates(ctx)
            .into_iter()
            .find(|p| p.is_file())
            .ok_or_else(|| EndpointError::MissingMock {
                article_id: ctx.article_id.clone(),
                method: ctx.method,
                query: ctx.query,
                dir: self.dir.display().to_string(),
            })?;
        let text = std::fs::read_to_string(&path).map_err(|e| EndpointError::MockRead {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        Ok(LlmResponse {
            text,
            prompt_tokens: None,
            completion_tokens: None,
        })
    }

    fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

/// Spaces requests at least `60 / rpm` seconds apart across threads.
#[derive(Debug)]
struct RateLimiter {
    interval: Duration,
    next: Mutex<Instant>,
}

impl RateLimiter {
    fn wait(&self) {
        let slot = {
            let mut next = self.next.lock().expect("rate limiter lock");
            let now = Instant::now();
            let slot = (*next).max(now);
            *next = slot + self.interval;
            slot
        };
        let now = Instant::now();
        if slot > now {
            thread::sleep(slot - now);
        }
    }
}

pub struct HttpClient {
    config: EndpointConfig,
    url: String,
    token: Option<String>,
    http: reqwest::blocking::Client,
    limiter: Option<RateLimiter>,
    calls: AtomicUsize,
}

impl HttpClient {
    pub fn new(config: EndpointConfig) -> Result<Self, EndpointError> {
        let token = match &config.auth_env {
            Some(var) => Some(std::env::var(var).map_err(|_| EndpointError::MissingToken(var.clone()))?),
            None => None,
        };
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| EndpointError::Config(e.to_string()))?;
        let base = config.base_url.trim_end_matches('/');
        let url = if base.ends_with("/chat/completions") {
            base.to_string()
        } else {
            format!("{base}/chat/completions")
        };
        let limiter = config.requests_per_minute.filter(|r| *r > 0).map(|rpm| RateLimiter {
            interval: Duration::from_secs_f64(60.0 / f64::from(rpm)),
            next: Mutex::new(Instant::now()),
        });
        Ok(Self {
            config,
            url,
            token,
            http,
            limiter,
            calls: AtomicUsize::new(0),
        })
    }

    fn send_once(&self, body: &serde_json::Value) -> Result<LlmResponse, (bool, EndpointError)> {
        if let Some(l) = &self.limiter {
            l.wait();
        }
        self.calls.fetch_add(1, Ordering::SeqCst);
        let mut req = self.http.post(&self.url).json(body);
        if let Some(t) = &self.token {
            req = req.bearer_auth(t);
        }
        let resp = req.send().map_err(|e| {
            (
                true,
                EndpointError::Request {
                    url: self.url.clone(),
                    attempts: 1,
                    reason: e.to_string(),
                },
            )
        })?;
        let status = resp.status();
        if !status.is_success() {
            let retry = status.as_u16() == 429 || status.is_server_error();
            let body = resp.text().unwrap_or_default();
            return Err((
                retry,
                EndpointError::Status {
                    status: status.as_u16(),
                    body: body.chars().take(500).collect(),
                },
            ));
        }
        let value: serde_json::Value = resp
            .json()
            .map_err(|e| (false, EndpointError::Malformed(e.to_string())))?;
        parse_chat_response(&value).map_err(|e| (false, e))
    }
}

/// Extracts text and usage from a chat-completions response body.
pub fn parse_chat_response(value: &serde_json::Value) -> Result<LlmResponse, EndpointError> {
    let text = value
        .pointer("/choices/0/message/content")
        .and_then(|v| v.as_str())
        .ok_or_else(|| EndpointError::Malformed("missing choices[0].message.content".into()))?;
    let usage = |key: &str| {
        value
            .pointer(&format!("/usage/{key}"))
            .and_then(|v| v.as_u64())
            .map(|v| v as usize)
    };
    Ok(LlmResponse {
        text: text.to_string(),
        prompt_tokens: usage("prompt_tokens"),
        completion_tokens: usage("completion_tokens"),
    })
}

impl LlmClient for HttpClient {
    fn model_name(&self) -> &str {
        &self.config.model
    }

    fn complete(&self, messages: &[ChatMessage], _ctx: &RequestContext) -> Result<LlmResponse, EndpointError> {
        let body = json!({
            "model": self.config.model,
            "messages": messages,
            "temperature": self.config.temperature,
        });
        let mut delay = Duration::from_millis(self.config.backoff_ms);
        let mut attempt = 0;
        loop {
            attempt += 1;
            match self.send_once(&body) {
                Ok(r) => return Ok(r),
                Err((true, e)) if attempt <= self.config.max_retries => {
                    warn!("attempt {attempt} failed: {e}; retrying in {delay:?}");
                    thread::sleep(delay);
                    delay *= 2;
                }
                Err((_, EndpointError::Request { url, reason, .. })) => {
                    return Err(EndpointError::Request {
                        url,
                        attempts: attempt,
                        reason,
                    })
                }
                Err((_, e)) => return Err(e),
            }
        }
    }

    fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}
