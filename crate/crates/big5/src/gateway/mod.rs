//! Uniform chat-completion interface over model endpoints.
//!
//! A [`Gateway`] wraps a [`ChatBackend`] with retry, a fair parallelism
//! limit, and optional request logging. The [`scripted`] backends are pure
//! functions of the request and serve as offline test oracles; the
//! [`http`] backend speaks the common chat-completions wire protocol.

mod limit;
mod log;
mod scripted;

#[cfg(feature = "http")]
mod http;

use std::path::Path;
use std::sync::Mutex;
use std::time::Duration;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use limit::FairSemaphore;
pub use log::{read_request_log, ReplayBackend, RequestRecord};
pub use scripted::ScriptedBackend;
pub use scripted::ScriptedBehavior;

#[cfg(feature = "http")]
pub use http::HttpChatBackend;

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("backend configuration error: {0}")]
    Configuration(String),
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("server returned status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed response body: {0}")]
    Protocol(String),
    #[error("scripted backend failure: {0}")]
    Scripted(String),
    #[error("retries exhausted after {attempts} attempts: {last}")]
    RetriesExhausted {
        attempts: u32,
        last: String,
        attempt_log: Vec<String>,
    },
}

impl GatewayError {
    /// Transport failures, 5xx, and 429 are worth retrying; everything else
    /// is not.
    fn is_retryable(&self) -> bool {
        match self {
            GatewayError::Transport(_) => true,
            GatewayError::Status { status, .. } => *status == 429 || *status >= 500,
            _ => false,
        }
    }
}

/// Message roles of the chat-completions protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> ChatMessage {
        ChatMessage { role: Role::System, content: content.into() }
    }

    pub fn user(content: impl Into<String>) -> ChatMessage {
        ChatMessage { role: Role::User, content: content.into() }
    }

    pub fn assistant(content: impl Into<String>) -> ChatMessage {
        ChatMessage { role: Role::Assistant, content: content.into() }
    }
}

/// Sampling parameters sent with every completion request.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationParams {
    pub max_new_tokens: u32,
    pub temperature: f64,
    pub top_p: f64,
}

impl Default for GenerationParams {
    fn default() -> Self {
        GenerationParams { max_new_tokens: 512, temperature: 1.0, top_p: 0.8 }
    }
}

impl GenerationParams {
    pub fn validate(&self) -> Result<(), GatewayError> {
        if self.max_new_tokens == 0 {
            return Err(GatewayError::InvalidRequest("max_new_tokens must be positive".into()));
        }
        if self.temperature < 0.0 {
            return Err(GatewayError::InvalidRequest("temperature must be non-negative".into()));
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(GatewayError::InvalidRequest("top_p must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

/// Exponential backoff with full jitter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetryPolicy {
    /// Total attempts, including the first (must be at least 1).
    pub max_attempts: u32,
    pub backoff_base_ms: u64,
    pub backoff_cap_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { max_attempts: 3, backoff_base_ms: 500, backoff_cap_ms: 10_000 }
    }
}

impl RetryPolicy {
    /// No retries at all; scripted backends never fail.
    pub fn none() -> RetryPolicy {
        RetryPolicy { max_attempts: 1, backoff_base_ms: 0, backoff_cap_ms: 0 }
    }

    fn delay_before(&self, attempt: u32) -> Duration {
        let ceiling = self
            .backoff_base_ms
            .saturating_mul(1u64 << attempt.min(20))
            .min(self.backoff_cap_ms);
        if ceiling == 0 {
            return Duration::ZERO;
        }
        // full jitter: uniform over [0, ceiling]
        Duration::from_millis(rand::rng().random_range(0..=ceiling))
    }
}

fn default_parallelism() -> usize {
    4
}

fn default_timeout_secs() -> u64 {
    60
}

/// Declarative backend description, as it appears in experiment configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendSpec {
    /// A remote endpoint speaking the chat-completions wire protocol.
    /// `endpoint` is the full URL of the completions route; the API key is
    /// read from the environment variable named by `credential_env` and is
    /// never stored in files.
    HttpChat {
        endpoint: String,
        model: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        credential_env: Option<String>,
        #[serde(default)]
        retry: RetryPolicy,
        #[serde(default = "default_parallelism")]
        parallelism: usize,
        #[serde(default = "default_timeout_secs")]
        timeout_secs: u64,
    },
    /// A deterministic offline backend driven by a behavior profile.
    Scripted {
        behavior: ScriptedBehavior,
        #[serde(default = "default_parallelism")]
        parallelism: usize,
    },
}

impl BackendSpec {
    pub fn scripted(behavior: ScriptedBehavior) -> BackendSpec {
        BackendSpec::Scripted { behavior, parallelism: default_parallelism() }
    }

    /// Stable identifier recorded in transcripts and reports.
    pub fn id(&self) -> String {
        match self {
            BackendSpec::HttpChat { endpoint, model, .. } => format!("http:{model}@{endpoint}"),
            BackendSpec::Scripted { behavior, .. } => format!("scripted:{}", behavior.name()),
        }
    }

    /// Instantiates the gateway this spec describes.
    pub fn build(&self) -> Result<Gateway, GatewayError> {
        match self {
            BackendSpec::Scripted { behavior, parallelism } => Ok(Gateway::new(
                Box::new(ScriptedBackend::new(behavior.clone())),
                RetryPolicy::none(),
                *parallelism,
            )),
            #[cfg(feature = "http")]
            BackendSpec::HttpChat {
                endpoint,
                model,
                credential_env,
                retry,
                parallelism,
                timeout_secs,
            } => {
                let backend = HttpChatBackend::new(
                    endpoint.clone(),
                    model.clone(),
                    credential_env.as_deref(),
                    Duration::from_secs(*timeout_secs),
                )?;
                Ok(Gateway::new(Box::new(backend), *retry, *parallelism))
            }
            #[cfg(not(feature = "http"))]
            BackendSpec::HttpChat { .. } => Err(GatewayError::Configuration(
                "built without the `http` feature".into(),
            )),
        }
    }
}

/// A single completion attempt against a concrete backend.
///
/// Retry, rate limiting, and logging live in [`Gateway`], not here.
pub trait ChatBackend: Send + Sync {
    fn complete_once(
        &self,
        messages: &[ChatMessage],
        params: &GenerationParams,
    ) -> Result<String, GatewayError>;

    fn describe(&self) -> String;
}

fn validate_messages(messages: &[ChatMessage]) -> Result<(), GatewayError> {
    if messages.is_empty() {
        return Err(GatewayError::InvalidRequest("message list is empty".into()));
    }
    for (i, m) in messages.iter().enumerate() {
        if m.role == Role::System && i != 0 {
            return Err(GatewayError::InvalidRequest(
                "system message must be first and unique".into(),
            ));
        }
        if m.role != Role::System && m.content.is_empty() {
            return Err(GatewayError::InvalidRequest(format!(
                "message {i} has empty content"
            )));
        }
    }
    Ok(())
}

/// Retrying, rate-limited front door for a chat backend.
pub struct Gateway {
    backend: Box<dyn ChatBackend>,
    retry: RetryPolicy,
    limiter: FairSemaphore,
    request_log: Option<Mutex<log::RequestLogWriter>>,
    requests: std::sync::atomic::AtomicU64,
}

impl Gateway {
    pub fn new(backend: Box<dyn ChatBackend>, retry: RetryPolicy, parallelism: usize) -> Gateway {
        Gateway {
            backend,
            retry,
            limiter: FairSemaphore::new(parallelism.max(1)),
            request_log: None,
            requests: std::sync::atomic::AtomicU64::new(0),
        }
    }

    /// Completed `complete()` calls so far (retries not counted).
    pub fn requests_made(&self) -> u64 {
        self.requests.load(std::sync::atomic::Ordering::Relaxed)
    }

    /// Enables tracing: every request/response pair is appended to a
    /// line-delimited log file.
    pub fn with_request_log(mut self, path: &Path) -> std::io::Result<Gateway> {
        self.request_log = Some(Mutex::new(log::RequestLogWriter::create(path)?));
        Ok(self)
    }

    pub fn describe(&self) -> String {
        self.backend.describe()
    }

    /// Sends one completion request, retrying retryable failures with
    /// exponential backoff and full jitter. Successful responses are
    /// returned unmodified apart from a trailing-whitespace strip.
    pub fn complete(
        &self,
        messages: &[ChatMessage],
        params: &GenerationParams,
    ) -> Result<String, GatewayError> {
        validate_messages(messages)?;
        params.validate()?;
        self.requests.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
        let _permit = self.limiter.acquire();
        let mut attempt_log = Vec::new();
        let mut attempt = 0;
        loop {
            match self.backend.complete_once(messages, params) {
                Ok(raw) => {
                    let text = raw.trim_end().to_string();
                    if let Some(log) = &self.request_log {
                        log.lock()
                            .expect("request log poisoned")
                            .append(&RequestRecord {
                                backend: self.backend.describe(),
                                messages: messages.to_vec(),
                                params: *params,
                                response: text.clone(),
                            })
                            .map_err(|e| GatewayError::Configuration(e.to_string()))?;
                    }
                    return Ok(text);
                }
                Err(err) => {
                    attempt += 1;
                    attempt_log.push(format!("attempt {attempt}: {err}"));
                    if !err.is_retryable() || attempt >= self.retry.max_attempts {
                        if attempt == 1 {
                            return Err(err);
                        }
                        return Err(GatewayError::RetriesExhausted {
                            attempts: attempt,
                            last: err.to_string(),
                            attempt_log,
                        });
                    }
                    std::thread::sleep(self.retry.delay_before(attempt - 1));
                }
            }
        }
    }
}

/// Runs `f` over the inputs on up to `workers` threads, preserving input
/// order in the output. Used for embarrassingly parallel request batches;
/// each call still passes through the gateway's own limiter.
pub fn parallel_map<T, U, F>(inputs: Vec<T>, workers: usize, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync,
{
    use std::sync::atomic::{AtomicUsize, Ordering};

    let workers = workers.max(1).min(inputs.len().max(1));
    let slots: Vec<Mutex<Option<U>>> = inputs.iter().map(|_| Mutex::new(None)).collect();
    let items: Vec<Mutex<Option<T>>> = inputs.into_iter().map(|t| Mutex::new(Some(t))).collect();
    let next = AtomicUsize::new(0);

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let item = items[i].lock().expect("item slot poisoned").take().expect("taken once");
                let out = f(item);
                *slots[i].lock().expect("result slot poisoned") = Some(out);
            });
        }
    });

    slots
        .into_iter()
        .map(|m| m.into_inner().expect("result slot poisoned").expect("worker filled slot"))
        .collect()
}
