//! Provider-agnostic chat-completion client with deterministic replay.
//!
//! Design: one blocking call per request, a small in-flight semaphore
//! (default 4) as the whole concurrency contract, exponential backoff with
//! jitter on retryable failures, and a record/replay layer keyed by a
//! canonical request hash so every downstream pipeline can run offline,
//! byte-for-byte reproducibly. Batching is the caller's loop; at desk scale
//! reproducibility and rate-limit friendliness outrank throughput.
//!
//! Three modes:
//!
//! * **Live** — send over the transport, nothing persisted.
//! * **Record** — send over the transport, append `{hash, request, reply}`
//!   to a JSONL store.
//! * **Replay** — serve exclusively from the store; a request that was never
//!   recorded is a hard [`AdapterError::ReplayMiss`], never a silent live
//!   call.

mod replay;
mod transport;

pub use replay::{ReplayEntry, ReplayStore};
pub use transport::{
    ChatTransport, HttpTransport, ScriptedTransport, TransportError, TransportReply, ENV_API_BASE,
    ENV_API_KEY,
};

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Message author role.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    System,
    User,
    Assistant,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
        }
    }
}

/// One chat message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> ChatMessage {
        ChatMessage {
            role: Role::System,
            content: content.into(),
        }
    }
    pub fn user(content: impl Into<String>) -> ChatMessage {
        ChatMessage {
            role: Role::User,
            content: content.into(),
        }
    }
    pub fn assistant(content: impl Into<String>) -> ChatMessage {
        ChatMessage {
            role: Role::Assistant,
            content: content.into(),
        }
    }
}

/// Sampling parameters sent with every request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenParams {
    pub max_tokens: u32,
    pub temperature: f64,
    pub top_p: f64,
    pub n: u32,
}

impl Default for GenParams {
    /// Deterministic-ish scoring defaults. Stimulus generation overrides
    /// these with its own high-temperature block.
    fn default() -> Self {
        GenParams {
            max_tokens: 256,
            temperature: 0.0,
            top_p: 1.0,
            n: 1,
        }
    }
}

/// A validated chat-completion request. Field order here is the canonical
/// serialisation order used for hashing — do not reorder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model_name: String,
    pub messages: Vec<ChatMessage>,
    pub params: GenParams,
}

impl ChatRequest {
    /// Build a request, enforcing the shape invariants: at least one
    /// message, first role system or user, positive `max_tokens`/`n`,
    /// non-negative temperature, `top_p` in `(0, 1]`.
    pub fn new(
        model_name: impl Into<String>,
        messages: Vec<ChatMessage>,
        params: GenParams,
    ) -> Result<ChatRequest, AdapterError> {
        let model_name = model_name.into();
        if model_name.trim().is_empty() {
            return Err(AdapterError::InvalidRequest {
                detail: "model_name is empty".into(),
            });
        }
        match messages.first() {
            None => {
                return Err(AdapterError::InvalidRequest {
                    detail: "request has no messages".into(),
                })
            }
            Some(first) if first.role == Role::Assistant => {
                return Err(AdapterError::InvalidRequest {
                    detail: "first message role must be system or user".into(),
                })
            }
            Some(_) => {}
        }
        if params.max_tokens == 0 || params.n == 0 {
            return Err(AdapterError::InvalidRequest {
                detail: "max_tokens and n must be positive".into(),
            });
        }
        if params.temperature.is_nan() || params.temperature < 0.0 {
            return Err(AdapterError::InvalidRequest {
                detail: format!("temperature {} must be non-negative", params.temperature),
            });
        }
        if !(params.top_p > 0.0 && params.top_p <= 1.0) {
            return Err(AdapterError::InvalidRequest {
                detail: format!("top_p {} must lie in (0, 1]", params.top_p),
            });
        }
        Ok(ChatRequest {
            model_name,
            messages,
            params,
        })
    }

    /// Canonical content hash: SHA-256 over the request's JSON serialisation
    /// (struct field order is fixed, floats serialise via their shortest
    /// round-trip form), hex-encoded. Stable across runs and platforms for
    /// identical `(model_name, messages, params)`.
    pub fn request_hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("request serialises");
        let mut hasher = Sha256::new();
        hasher.update(canonical.as_bytes());
        hex::encode(hasher.finalize())
    }
}

/// A completed request/reply pair plus bookkeeping.
#[derive(Debug, Clone)]
pub struct ChatExchange {
    pub request: ChatRequest,
    pub reply_text: String,
    /// Wall-clock time spent on the successful attempt (zero for replay).
    pub latency: Duration,
    /// 1-based attempt number that succeeded.
    pub attempt: u32,
    pub transport_meta: TransportMeta,
}

/// Provider id + status tag for an exchange.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransportMeta {
    pub provider: String,
    pub status: String,
}

/// Retry, concurrency, and audit configuration.
#[derive(Debug, Clone)]
pub struct AdapterConfig {
    /// Maximum concurrent in-flight requests.
    pub max_inflight: usize,
    /// Total attempts per request (first try included).
    pub max_attempts: u32,
    /// Backoff before retry k is `backoff_base · 2^(k-1)`, capped.
    pub backoff_base: Duration,
    pub backoff_cap: Duration,
    /// Multiply each backoff by a random factor in `[0.5, 1.5)`. Affects
    /// timing only, never outputs.
    pub jitter: bool,
    /// Where to append one audit line per attempt; `None` disables.
    pub audit_log: Option<PathBuf>,
}

impl Default for AdapterConfig {
    fn default() -> Self {
        AdapterConfig {
            max_inflight: 4,
            max_attempts: 4,
            backoff_base: Duration::from_millis(500),
            backoff_cap: Duration::from_secs(8),
            jitter: true,
            audit_log: None,
        }
    }
}

enum Mode {
    Live,
    Record(Mutex<ReplayStore>),
    Replay(ReplayStore),
}

/// The chat client. Shareable across threads; the audit log append and the
/// record-store append are the only serialised sections.
pub struct ChatAdapter {
    mode: Mode,
    transport: Option<Box<dyn ChatTransport>>,
    config: AdapterConfig,
    audit: Option<Mutex<std::fs::File>>,
    inflight: Semaphore,
}

impl ChatAdapter {
    /// Live mode: every request goes over the transport.
    pub fn live(
        transport: Box<dyn ChatTransport>,
        config: AdapterConfig,
    ) -> Result<ChatAdapter, AdapterError> {
        Self::build(Mode::Live, Some(transport), config)
    }

    /// Record mode: live sends, every success appended to the store at
    /// `store_path` (created if missing, extended if present).
    pub fn record(
        transport: Box<dyn ChatTransport>,
        store_path: &Path,
        config: AdapterConfig,
    ) -> Result<ChatAdapter, AdapterError> {
        let store = ReplayStore::open_for_record(store_path)?;
        Self::build(Mode::Record(Mutex::new(store)), Some(transport), config)
    }

    /// Replay mode: serve recorded replies only; no transport, no network.
    pub fn replay(store_path: &Path, config: AdapterConfig) -> Result<ChatAdapter, AdapterError> {
        let store = ReplayStore::load(store_path)?;
        Self::build(Mode::Replay(store), None, config)
    }

    fn build(
        mode: Mode,
        transport: Option<Box<dyn ChatTransport>>,
        config: AdapterConfig,
    ) -> Result<ChatAdapter, AdapterError> {
        let audit = match &config.audit_log {
            Some(path) => {
                let file = std::fs::OpenOptions::new()
                    .create(true)
                    .append(true)
                    .open(path)
                    .map_err(|e| AdapterError::Store {
                        path: path.clone(),
                        detail: format!("audit log: {e}"),
                    })?;
                Some(Mutex::new(file))
            }
            None => None,
        };
        let inflight = Semaphore::new(config.max_inflight.max(1));
        Ok(ChatAdapter {
            mode,
            transport,
            config,
            audit,
            inflight,
        })
    }

    /// Number of entries in the backing store (0 in live mode).
    pub fn store_len(&self) -> usize {
        match &self.mode {
            Mode::Live => 0,
            Mode::Record(store) => store.lock().expect("store lock").len(),
            Mode::Replay(store) => store.len(),
        }
    }

    /// True when no request can reach a network.
    pub fn is_replay(&self) -> bool {
        matches!(self.mode, Mode::Replay(_))
    }

    /// Send one request, honouring mode, retry policy, in-flight limit, and
    /// audit logging (one line per attempt, including replay hits).
    pub fn send_chat(&self, request: &ChatRequest) -> Result<ChatExchange, AdapterError> {
        let _permit = self.inflight.acquire();
        let hash = request.request_hash();

        if let Mode::Replay(store) = &self.mode {
            return match store.lookup(&hash) {
                Some(entry) => {
                    self.audit_line(&hash, 1, "replay", "hit");
                    Ok(ChatExchange {
                        request: request.clone(),
                        reply_text: entry.reply_text.clone(),
                        latency: Duration::ZERO,
                        attempt: 1,
                        transport_meta: TransportMeta {
                            provider: "replay".into(),
                            status: "hit".into(),
                        },
                    })
                }
                None => {
                    self.audit_line(&hash, 1, "replay", "miss");
                    Err(AdapterError::ReplayMiss {
                        hash,
                        store: store.path().into(),
                    })
                }
            };
        }

        let transport = self.transport.as_ref().expect("live/record modes have a transport");
        let mut last_retryable: Option<TransportError> = None;
        for attempt in 1..=self.config.max_attempts {
            let started = Instant::now();
            match transport.send(request) {
                Ok(reply) => {
                    self.audit_line(&hash, attempt, &transport.provider_id(), &reply.status);
                    if let Mode::Record(store) = &self.mode {
                        store
                            .lock()
                            .expect("store lock")
                            .append(request, &reply.text)?;
                    }
                    return Ok(ChatExchange {
                        request: request.clone(),
                        reply_text: reply.text,
                        latency: started.elapsed(),
                        attempt,
                        transport_meta: TransportMeta {
                            provider: transport.provider_id(),
                            status: reply.status,
                        },
                    });
                }
                Err(TransportError::Fatal { status, detail }) => {
                    self.audit_line(&hash, attempt, &transport.provider_id(), &status);
                    return Err(AdapterError::Provider { status, detail });
                }
                Err(err @ TransportError::Retryable { .. }) => {
                    if let TransportError::Retryable { status, .. } = &err {
                        self.audit_line(&hash, attempt, &transport.provider_id(), status);
                    }
                    last_retryable = Some(err);
                    if attempt < self.config.max_attempts {
                        std::thread::sleep(self.backoff(attempt));
                    }
                }
            }
        }
        Err(AdapterError::RetriesExhausted {
            attempts: self.config.max_attempts,
            last: last_retryable
                .map(|e| e.to_string())
                .unwrap_or_else(|| "no attempt made".into()),
        })
    }

    /// Exponential backoff with optional jitter: `base · 2^(attempt−1)`,
    /// capped, scaled by a uniform factor in `[0.5, 1.5)`.
    fn backoff(&self, attempt: u32) -> Duration {
        let exp = self
            .config
            .backoff_base
            .saturating_mul(1u32 << (attempt - 1).min(16));
        let capped = exp.min(self.config.backoff_cap);
        if !self.config.jitter {
            return capped;
        }
        // Timing-only randomness: deliberately not seeded, outputs are
        // unaffected.
        let factor: f64 = 0.5 + rand::random::<f64>();
        capped.mul_f64(factor)
    }

    /// One audit line per attempt. Deliberately free of timestamps and
    /// latencies so that replayed runs stay byte-identical.
    fn audit_line(&self, hash: &str, attempt: u32, provider: &str, status: &str) {
        if let Some(audit) = &self.audit {
            let line = serde_json::json!({
                "hash": hash,
                "attempt": attempt,
                "provider": provider,
                "status": status,
            });
            let mut file = audit.lock().expect("audit lock");
            // An unwritable audit line is not worth failing the exchange.
            let _ = writeln!(file, "{line}");
        }
    }
}

/// Minimal counting semaphore (std has no blocking semaphore).
struct Semaphore {
    permits: Mutex<usize>,
    available: Condvar,
}

struct SemaphorePermit<'a>(&'a Semaphore);

impl Semaphore {
    fn new(permits: usize) -> Semaphore {
        Semaphore {
            permits: Mutex::new(permits),
            available: Condvar::new(),
        }
    }

    fn acquire(&self) -> SemaphorePermit<'_> {
        let mut permits = self.permits.lock().expect("semaphore lock");
        while *permits == 0 {
            permits = self.available.wait(permits).expect("semaphore wait");
        }
        *permits -= 1;
        SemaphorePermit(self)
    }
}

impl Drop for SemaphorePermit<'_> {
    fn drop(&mut self) {
        let mut permits = self.0.permits.lock().expect("semaphore lock");
        *permits += 1;
        self.0.available.notify_one();
    }
}

/// Errors from request building, transport, and the replay store.
#[derive(Debug, thiserror::Error)]
pub enum AdapterError {
    #[error("invalid chat request: {detail}")]
    InvalidRequest { detail: String },
    #[error("missing configuration: set the {var} environment variable")]
    MissingConfiguration { var: &'static str },
    #[error("provider rejected the request ({status}): {detail}")]
    Provider { status: String, detail: String },
    #[error("retry budget exhausted after {attempts} attempts; last error: {last}")]
    RetriesExhausted { attempts: u32, last: String },
    #[error("unrecorded exchange: no replay entry for request hash {hash} in {store}")]
    ReplayMiss { hash: String, store: PathBuf },
    #[error("replay store {path}: {detail}")]
    Store { path: PathBuf, detail: String },
}

#[cfg(test)]
mod tests {
    use super::*;

    fn request(text: &str) -> ChatRequest {
        ChatRequest::new(
            "test-model",
            vec![
                ChatMessage::system("You are a scorer."),
                ChatMessage::user(text),
            ],
            GenParams::default(),
        )
        .unwrap()
    }

    fn fast_config() -> AdapterConfig {
        AdapterConfig {
            backoff_base: Duration::ZERO,
            backoff_cap: Duration::ZERO,
            jitter: false,
            ..AdapterConfig::default()
        }
    }

    #[test]
    fn request_validation_enforces_shape() {
        assert!(matches!(
            ChatRequest::new("m", vec![], GenParams::default()),
            Err(AdapterError::InvalidRequest { .. })
        ));
        assert!(matches!(
            ChatRequest::new(
                "m",
                vec![ChatMessage::assistant("hi")],
                GenParams::default()
            ),
            Err(AdapterError::InvalidRequest { .. })
        ));
        let bad_top_p = GenParams {
            top_p: 0.0,
            ..GenParams::default()
        };
        assert!(matches!(
            ChatRequest::new("m", vec![ChatMessage::user("hi")], bad_top_p),
            Err(AdapterError::InvalidRequest { .. })
        ));
        let bad_tokens = GenParams {
            max_tokens: 0,
            ..GenParams::default()
        };
        assert!(matches!(
            ChatRequest::new("m", vec![ChatMessage::user("hi")], bad_tokens),
            Err(AdapterError::InvalidRequest { .. })
        ));
    }

    #[test]
    fn request_hash_is_stable_and_content_sensitive() {
        let a = request("score this");
        let b = request("score this");
        let c = request("score that");
        assert_eq!(a.request_hash(), b.request_hash());
        assert_ne!(a.request_hash(), c.request_hash());
        assert_eq!(a.request_hash().len(), 64); // sha-256 hex
        // Params are part of the identity.
        let mut d = request("score this");
        d.params.temperature = 1.5;
        assert_ne!(a.request_hash(), d.request_hash());
        // Hash is the exact sha-256 of the canonical JSON (pinned so stores
        // stay valid across releases).
        let canonical = serde_json::to_string(&a).unwrap();
        let mut hasher = Sha256::new();
        hasher.update(canonical.as_bytes());
        assert_eq!(a.request_hash(), hex::encode(hasher.finalize()));
    }

    #[test]
    fn live_mode_returns_first_reply() {
        let transport = ScriptedTransport::replies(&["7.5"]);
        let adapter = ChatAdapter::live(Box::new(transport), fast_config()).unwrap();
        let exchange = adapter.send_chat(&request("rate me")).unwrap();
        assert_eq!(exchange.reply_text, "7.5");
        assert_eq!(exchange.attempt, 1);
        assert_eq!(exchange.transport_meta.provider, "scripted");
    }

    #[test]
    fn two_retryable_failures_then_success_is_attempt_three() {
        let transport = ScriptedTransport::new(vec![
            Err(TransportError::Retryable {
                status: "429".into(),
                detail: "slow down".into(),
            }),
            Err(TransportError::Retryable {
                status: "500".into(),
                detail: "hiccup".into(),
            }),
            Ok(TransportReply {
                text: "6.0".into(),
                status: "200".into(),
            }),
        ]);
        let adapter = ChatAdapter::live(Box::new(transport), fast_config()).unwrap();
        let exchange = adapter.send_chat(&request("rate me")).unwrap();
        assert_eq!(exchange.attempt, 3);
        assert_eq!(exchange.reply_text, "6.0");
    }

    #[test]
    fn fatal_errors_do_not_retry_and_carry_payload() {
        let transport = ScriptedTransport::new(vec![Err(TransportError::Fatal {
            status: "401".into(),
            detail: "bad key".into(),
        })]);
        let adapter = ChatAdapter::live(Box::new(transport), fast_config()).unwrap();
        match adapter.send_chat(&request("rate me")) {
            Err(AdapterError::Provider { status, detail }) => {
                assert_eq!(status, "401");
                assert_eq!(detail, "bad key");
            }
            other => panic!("expected Provider error, got {other:?}"),
        }
    }

    #[test]
    fn retry_budget_exhaustion_reports_last_error() {
        let retryable = || {
            Err(TransportError::Retryable {
                status: "503".into(),
                detail: "overloaded".into(),
            })
        };
        let transport = ScriptedTransport::new(vec![retryable(), retryable(), retryable(), retryable()]);
        let adapter = ChatAdapter::live(Box::new(transport), fast_config()).unwrap();
        match adapter.send_chat(&request("rate me")) {
            Err(AdapterError::RetriesExhausted { attempts, last }) => {
                assert_eq!(attempts, 4);
                assert!(last.contains("503"));
            }
            other => panic!("expected RetriesExhausted, got {other:?}"),
        }
    }

    #[test]
    fn record_then_replay_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let store_path = dir.path().join("store.jsonl");
        let texts = ["one", "two", "three", "four", "five"];
        {
            let transport = ScriptedTransport::replies(&texts);
            let adapter =
                ChatAdapter::record(Box::new(transport), &store_path, fast_config()).unwrap();
            for (i, _) in texts.iter().enumerate() {
                adapter.send_chat(&request(&format!("q{i}"))).unwrap();
            }
            assert_eq!(adapter.store_len(), 5);
        }
        let adapter = ChatAdapter::replay(&store_path, fast_config()).unwrap();
        assert!(adapter.is_replay());
        for (i, expected) in texts.iter().enumerate() {
            let exchange = adapter.send_chat(&request(&format!("q{i}"))).unwrap();
            assert_eq!(&exchange.reply_text, expected);
            assert_eq!(exchange.transport_meta.provider, "replay");
            assert_eq!(exchange.latency, Duration::ZERO);
        }
    }

    #[test]
    fn replay_miss_names_the_hash() {
        let dir = tempfile::tempdir().unwrap();
        let store_path = dir.path().join("store.jsonl");
        std::fs::write(&store_path, "").unwrap();
        let adapter = ChatAdapter::replay(&store_path, fast_config()).unwrap();
        let req = request("never recorded");
        match adapter.send_chat(&req) {
            Err(AdapterError::ReplayMiss { hash, .. }) => {
                assert_eq!(hash, req.request_hash());
            }
            other => panic!("expected ReplayMiss, got {other:?}"),
        }
    }

    #[test]
    fn corrupted_store_fails_at_load() {
        let dir = tempfile::tempdir().unwrap();
        let store_path = dir.path().join("store.jsonl");
        std::fs::write(&store_path, "not json\n").unwrap();
        assert!(matches!(
            ChatAdapter::replay(&store_path, fast_config()),
            Err(AdapterError::Store { .. })
        ));

        // Hash mismatch is also a load-time failure.
        let req = request("x");
        let entry = ReplayEntry {
            hash: "0".repeat(64),
            request: req,
            reply_text: "y".into(),
        };
        std::fs::write(
            &store_path,
            format!("{}\n", serde_json::to_string(&entry).unwrap()),
        )
        .unwrap();
        assert!(matches!(
            ChatAdapter::replay(&store_path, fast_config()),
            Err(AdapterError::Store { .. })
        ));
    }

    #[test]
    fn audit_log_counts_attempts_not_successes() {
        let dir = tempfile::tempdir().unwrap();
        let audit_path = dir.path().join("audit.jsonl");
        let transport = ScriptedTransport::new(vec![
            Err(TransportError::Retryable {
                status: "429".into(),
                detail: "".into(),
            }),
            Ok(TransportReply {
                text: "ok".into(),
                status: "200".into(),
            }),
        ]);
        let config = AdapterConfig {
            audit_log: Some(audit_path.clone()),
            ..fast_config()
        };
        let adapter = ChatAdapter::live(Box::new(transport), config).unwrap();
        adapter.send_chat(&request("q")).unwrap();
        let body = std::fs::read_to_string(&audit_path).unwrap();
        let lines: Vec<&str> = body.lines().collect();
        assert_eq!(lines.len(), 2, "one audit line per attempt");
        let first: serde_json::Value = serde_json::from_str(lines[0]).unwrap();
        assert_eq!(first["attempt"], 1);
        assert_eq!(first["status"], "429");
        let second: serde_json::Value = serde_json::from_str(lines[1]).unwrap();
        assert_eq!(second["attempt"], 2);
        assert_eq!(second["status"], "200");
    }

    #[test]
    fn inflight_limit_is_respected_under_contention() {
        use std::sync::atomic::{AtomicUsize, Ordering};
        use std::sync::Arc;

        /// Transport that tracks its own peak concurrency.
        struct GaugedTransport {
            current: AtomicUsize,
            peak: AtomicUsize,
        }
        impl ChatTransport for GaugedTransport {
            fn send(&self, _request: &ChatRequest) -> Result<TransportReply, TransportError> {
                let now = self.current.fetch_add(1, Ordering::SeqCst) + 1;
                self.peak.fetch_max(now, Ordering::SeqCst);
                std::thread::sleep(Duration::from_millis(10));
                self.current.fetch_sub(1, Ordering::SeqCst);
                Ok(TransportReply {
                    text: "ok".into(),
                    status: "200".into(),
                })
            }
            fn provider_id(&self) -> String {
                "gauged".into()
            }
        }

        let transport = Arc::new(GaugedTransport {
            current: AtomicUsize::new(0),
            peak: AtomicUsize::new(0),
        });
        struct Shared(Arc<GaugedTransport>);
        impl ChatTransport for Shared {
            fn send(&self, request: &ChatRequest) -> Result<TransportReply, TransportError> {
                self.0.send(request)
            }
            fn provider_id(&self) -> String {
                self.0.provider_id()
            }
        }
        let config = AdapterConfig {
            max_inflight: 2,
            ..fast_config()
        };
        let adapter =
            Arc::new(ChatAdapter::live(Box::new(Shared(transport.clone())), config).unwrap());
        let handles: Vec<_> = (0..8)
            .map(|i| {
                let adapter = adapter.clone();
                std::thread::spawn(move || adapter.send_chat(&request(&format!("q{i}"))).unwrap())
            })
            .collect();
        for handle in handles {
            handle.join().unwrap();
        }
        assert!(
            transport.peak.load(Ordering::SeqCst) <= 2,
            "peak concurrency {} exceeded max_inflight 2",
            transport.peak.load(Ordering::SeqCst)
        );
    }

    #[test]
    fn missing_credentials_fail_before_any_send() {
        // from_env reads real process env; ensure both vars are absent.
        std::env::remove_var(ENV_API_BASE);
        std::env::remove_var(ENV_API_KEY);
        match HttpTransport::from_env() {
            Err(AdapterError::MissingConfiguration { var }) => assert_eq!(var, ENV_API_BASE),
            Ok(_) => panic!("expected MissingConfiguration, transport built anyway"),
            Err(other) => panic!("expected MissingConfiguration, got {other:?}"),
        }
    }
}
