//! Chat-completions client with retries and a per-call trace.

use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

fn default_temperature() -> f64 {
    1.0
}
fn default_top_p() -> f64 {
    0.8
}
fn default_seed() -> u64 {
    42
}
fn default_max_new_tokens() -> u32 {
    1024
}
fn default_timeout() -> u64 {
    120
}
fn default_retries() -> u32 {
    3
}

/// Where and how to call a model. Defaults follow the reference inference
/// setup; reasoning models should raise `max_new_tokens` to 4096.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndpointConfig {
    pub base_url: String,
    pub model_name: String,
    /// Name of the environment variable holding the API key.
    #[serde(default)]
    pub api_key_env: Option<String>,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_top_p")]
    pub top_p: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_max_new_tokens")]
    pub max_new_tokens: u32,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
}

pub const REASONING_MAX_NEW_TOKENS: u32 = 4096;

impl EndpointConfig {
    pub fn new(base_url: impl Into<String>, model_name: impl Into<String>) -> Self {
        EndpointConfig {
            base_url: base_url.into(),
            model_name: model_name.into(),
            api_key_env: None,
            temperature: default_temperature(),
            top_p: default_top_p(),
            seed: default_seed(),
            max_new_tokens: default_max_new_tokens(),
            timeout_secs: default_timeout(),
            max_retries: default_retries(),
        }
    }

    pub fn reasoning(mut self) -> Self {
        self.max_new_tokens = REASONING_MAX_NEW_TOKENS;
        self
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.temperature < 0.0 {
            return Err("temperature must be >= 0".into());
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err("top_p must be in (0, 1]".into());
        }
        if self.max_new_tokens == 0 {
            return Err("max_new_tokens must be > 0".into());
        }
        Ok(())
    }

    fn url(&self) -> String {
        format!("{}/chat/completions", self.base_url.trim_end_matches('/'))
    }
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum GatewayError {
    #[error("transport error: {0}")]
    TransportError(String),
    #[error("authentication error: {0}")]
    AuthError(String),
    #[error("bad response: {0}")]
    BadResponse(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub model: String,
    pub url: String,
    pub prompt: String,
    pub attempts: u32,
    pub latency_ms: u64,
    pub status: Option<u16>,
    pub request_id: Option<String>,
    pub usage: Option<Value>,
    pub content: Option<String>,
    pub error: Option<String>,
}

/// Append-only call log shared between clones.
#[derive(Debug, Clone, Default)]
pub struct TraceLog(Arc<Mutex<Vec<TraceRecord>>>);

impl TraceLog {
    pub fn push(&self, record: TraceRecord) {
        self.0.lock().expect("trace log poisoned").push(record);
    }

    pub fn records(&self) -> Vec<TraceRecord> {
        self.0.lock().expect("trace log poisoned").clone()
    }

    pub fn len(&self) -> usize {
        self.0.lock().expect("trace log poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Counting gate bounding concurrent requests.
#[derive(Debug, Default)]
struct Gate {
    in_flight: Mutex<usize>,
    freed: Condvar,
}

impl Gate {
    fn enter(&self, limit: usize) {
        let mut n = self.in_flight.lock().expect("gate poisoned");
        while *n >= limit {
            n = self.freed.wait(n).expect("gate poisoned");
        }
        *n += 1;
    }

    fn leave(&self) {
        *self.in_flight.lock().expect("gate poisoned") -= 1;
        self.freed.notify_one();
    }
}

#[derive(Clone)]
pub struct Client {
    trace: TraceLog,
    backoff: Duration,
    max_in_flight: usize,
    gate: Arc<Gate>,
}

enum Attempt {
    Done(String),
    Retry(String),
    Fatal(GatewayError),
}

impl Client {
    pub fn new(trace: TraceLog) -> Self {
        Client {
            trace,
            backoff: Duration::from_millis(500),
            max_in_flight: 8,
            gate: Arc::default(),
        }
    }

    pub fn with_max_in_flight(mut self, limit: usize) -> Self {
        self.max_in_flight = limit.max(1);
        self
    }

    /// Base delay; attempt n waits `base * 2^(n-1)`.
    pub fn with_backoff(mut self, base: Duration) -> Self {
        self.backoff = base;
        self
    }

    pub fn trace(&self) -> &TraceLog {
        &self.trace
    }

    pub fn complete(&self, cfg: &EndpointConfig, prompt: &str) -> Result<String, GatewayError> {
        let start = Instant::now();
        let mut record = TraceRecord {
            model: cfg.model_name.clone(),
            url: cfg.url(),
            prompt: prompt.to_string(),
            attempts: 0,
            latency_ms: 0,
            status: None,
            request_id: None,
            usage: None,
            content: None,
            error: None,
        };
        self.gate.enter(self.max_in_flight);
        let result = self.run(cfg, prompt, &mut record);
        self.gate.leave();
        record.latency_ms = start.elapsed().as_millis() as u64;
        match &result {
            Ok(c) => record.content = Some(c.clone()),
            Err(e) => record.error = Some(e.to_string()),
        }
        tracing::debug!(
            model = %record.model,
            attempts = record.attempts,
            latency_ms = record.latency_ms,
            request_id = record.request_id.as_deref().unwrap_or(""),
            "completion"
        );
        self.trace.push(record);
        result
    }

    fn run(&self, cfg: &EndpointConfig, prompt: &str, record: &mut TraceRecord) -> Result<String, GatewayError> {
        let key = match &cfg.api_key_env {
            Some(var) => Some(std::env::var(var).map_err(|_| {
                GatewayError::AuthError(format!("environment variable {var} is not set"))
            })?),
            None => None,
        };
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(cfg.timeout_secs))
            .build()
            .map_err(|e| GatewayError::TransportError(e.to_string()))?;
        let body = json!({
            "model": cfg.model_name,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": cfg.temperature,
            "top_p": cfg.top_p,
            "seed": cfg.seed,
            "max_tokens": cfg.max_new_tokens,
        });
        let mut last = String::new();
        for attempt in 0..=cfg.max_retries {
            if attempt > 0 {
                std::thread::sleep(self.backoff * 2u32.saturating_pow(attempt - 1));
            }
            record.attempts = attempt + 1;
            let mut req = http.post(cfg.url()).json(&body);
            if let Some(k) = &key {
                req = req.bearer_auth(k);
            }
            match Self::attempt(req, record) {
                Attempt::Done(content) => return Ok(content),
                Attempt::Fatal(e) => return Err(e),
                Attempt::Retry(msg) => {
                    tracing::warn!(attempt = attempt + 1, "retryable failure: {msg}");
                    last = msg;
                }
            }
        }
        Err(GatewayError::TransportError(last))
    }

    fn attempt(req: reqwest::blocking::RequestBuilder, record: &mut TraceRecord) -> Attempt {
        let resp = match req.send() {
            Ok(r) => r,
            Err(e) => return Attempt::Retry(e.to_string()),
        };
        let status = resp.status();
        record.status = Some(status.as_u16());
        record.request_id = resp
            .headers()
            .get("x-request-id")
            .and_then(|v| v.to_str().ok())
            .map(str::to_string);
        if status.as_u16() == 429 || status.is_server_error() {
            return Attempt::Retry(format!("HTTP {status}"));
        }
        if status.as_u16() == 401 || status.as_u16() == 403 {
            return Attempt::Fatal(GatewayError::AuthError(format!("HTTP {status}")));
        }
        let text = match resp.text() {
            Ok(t) => t,
            Err(e) => return Attempt::Retry(e.to_string()),
        };
        if !status.is_success() {
            return Attempt::Fatal(GatewayError::BadResponse(format!("HTTP {status}: {text}")));
        }
        let value: Value = match serde_json::from_str(&text) {
            Ok(v) => v,
            Err(e) => return Attempt::Fatal(GatewayError::BadResponse(format!("invalid JSON: {e}"))),
        };
        record.usage = value.get("usage").cloned();
        if record.request_id.is_none() {
            record.request_id = value.get("id").and_then(Value::as_str).map(str::to_string);
        }
        match value
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
        {
            Some(content) => Attempt::Done(content.to_string()),
            None => Attempt::Fatal(GatewayError::BadResponse("missing message content".into())),
        }
    }
}
