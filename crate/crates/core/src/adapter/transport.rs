//! Wire transports: the real HTTP chat-completions client and a scripted
//! stand-in for tests.

use std::collections::VecDeque;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{AdapterError, ChatRequest};

/// What a transport hands back on success.
#[derive(Debug, Clone)]
pub struct TransportReply {
    pub text: String,
    /// Provider status tag for the audit trail (e.g. `"200"`).
    pub status: String,
}

/// Transport failures, split by whether retrying can help.
#[derive(Debug, thiserror::Error)]
pub enum TransportError {
    /// Transient: connection trouble, 429, 5xx. The adapter retries these
    /// with backoff.
    #[error("retryable transport error ({status}): {detail}")]
    Retryable { status: String, detail: String },
    /// Permanent: auth failures, malformed requests, 4xx in general. The
    /// provider payload is preserved for the caller.
    #[error("fatal transport error ({status}): {detail}")]
    Fatal { status: String, detail: String },
}

/// A synchronous chat-completions wire.
pub trait ChatTransport: Send + Sync {
    /// One request, one reply, no retries (the adapter owns retry policy).
    fn send(&self, request: &ChatRequest) -> Result<TransportReply, TransportError>;
    /// Short provider tag for audit lines (e.g. `"http"`, `"scripted"`).
    fn provider_id(&self) -> String;
}

/// Environment variable naming the chat-completions base URL.
pub const ENV_API_BASE: &str = "EG_API_BASE";
/// Environment variable holding the bearer credential.
pub const ENV_API_KEY: &str = "EG_API_KEY";

/// Blocking HTTP transport speaking the common chat-completions JSON shape
/// against `{base}/chat/completions`.
pub struct HttpTransport {
    base_url: String,
    api_key: String,
    client: reqwest::blocking::Client,
}

#[derive(Serialize)]
struct WireRequest<'a> {
    model: &'a str,
    messages: Vec<WireMessage<'a>>,
    max_tokens: u32,
    temperature: f64,
    top_p: f64,
    n: u32,
}

#[derive(Serialize)]
struct WireMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Deserialize)]
struct WireReply {
    choices: Vec<WireChoice>,
}

#[derive(Deserialize)]
struct WireChoice {
    message: WireReplyMessage,
}

#[derive(Deserialize)]
struct WireReplyMessage {
    content: String,
}

impl HttpTransport {
    /// Build from `EG_API_BASE` / `EG_API_KEY`. Fails before any send when
    /// either is missing, so misconfiguration surfaces immediately.
    pub fn from_env() -> Result<HttpTransport, AdapterError> {
        let base_url = std::env::var(ENV_API_BASE)
            .map_err(|_| AdapterError::MissingConfiguration { var: ENV_API_BASE })?;
        let api_key = std::env::var(ENV_API_KEY)
            .map_err(|_| AdapterError::MissingConfiguration { var: ENV_API_KEY })?;
        Ok(Self::new(base_url, api_key))
    }

    pub fn new(base_url: impl Into<String>, api_key: impl Into<String>) -> HttpTransport {
        HttpTransport {
            base_url: base_url.into(),
            api_key: api_key.into(),
            client: reqwest::blocking::Client::builder()
                .timeout(Duration::from_secs(120))
                .build()
                .expect("default TLS client builds"),
        }
    }
}

impl ChatTransport for HttpTransport {
    fn send(&self, request: &ChatRequest) -> Result<TransportReply, TransportError> {
        let body = WireRequest {
            model: &request.model_name,
            messages: request
                .messages
                .iter()
                .map(|m| WireMessage {
                    role: m.role.as_str(),
                    content: &m.content,
                })
                .collect(),
            max_tokens: request.params.max_tokens,
            temperature: request.params.temperature,
            top_p: request.params.top_p,
            n: request.params.n,
        };
        let url = format!("{}/chat/completions", self.base_url.trim_end_matches('/'));
        let response = self
            .client
            .post(&url)
            .bearer_auth(&self.api_key)
            .json(&body)
            .send()
            .map_err(|e| TransportError::Retryable {
                status: "connection".into(),
                detail: e.to_string(),
            })?;

        let status = response.status();
        let payload = response.text().unwrap_or_default();
        if status.as_u16() == 429 || status.is_server_error() {
            return Err(TransportError::Retryable {
                status: status.as_u16().to_string(),
                detail: payload,
            });
        }
        if !status.is_success() {
            return Err(TransportError::Fatal {
                status: status.as_u16().to_string(),
                detail: payload,
            });
        }
        let parsed: WireReply = serde_json::from_str(&payload).map_err(|e| TransportError::Fatal {
            status: status.as_u16().to_string(),
            detail: format!("malformed completion payload: {e}; body: {payload}"),
        })?;
        let text = parsed
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| TransportError::Fatal {
                status: status.as_u16().to_string(),
                detail: "completion payload has no choices".into(),
            })?;
        Ok(TransportReply {
            text,
            status: status.as_u16().to_string(),
        })
    }

    fn provider_id(&self) -> String {
        "http".into()
    }
}

/// Test transport that pops pre-scripted outcomes in order.
pub struct ScriptedTransport {
    script: Mutex<VecDeque<Result<TransportReply, TransportError>>>,
    calls: std::sync::atomic::AtomicU32,
}

impl ScriptedTransport {
    pub fn new(outcomes: Vec<Result<TransportReply, TransportError>>) -> ScriptedTransport {
        ScriptedTransport {
            script: Mutex::new(outcomes.into()),
            calls: std::sync::atomic::AtomicU32::new(0),
        }
    }

    /// Convenience: a script of plain successful replies.
    pub fn replies(texts: &[&str]) -> ScriptedTransport {
        Self::new(
            texts
                .iter()
                .map(|t| {
                    Ok(TransportReply {
                        text: t.to_string(),
                        status: "200".into(),
                    })
                })
                .collect(),
        )
    }

    /// Total send calls observed.
    pub fn calls(&self) -> u32 {
        self.calls.load(std::sync::atomic::Ordering::SeqCst)
    }
}

impl ChatTransport for ScriptedTransport {
    fn send(&self, _request: &ChatRequest) -> Result<TransportReply, TransportError> {
        self.calls
            .fetch_add(1, std::sync::atomic::Ordering::SeqCst);
        self.script
            .lock()
            .expect("script lock")
            .pop_front()
            .unwrap_or_else(|| {
                Err(TransportError::Fatal {
                    status: "script-exhausted".into(),
                    detail: "scripted transport ran out of outcomes".into(),
                })
            })
    }

    fn provider_id(&self) -> String {
        "scripted".into()
    }
}
