//! Chat-completions client, fixture replay, and the process-wide in-flight limit.

use std::fmt;
use std::path::PathBuf;
use std::sync::{Condvar, LazyLock, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Environment variable holding the bearer token.
pub const API_KEY_ENV: &str = "ONTOCLEAN_LLM_API_KEY";

/// Endpoint prefix selecting the fixture replay backend.
pub const FIXTURE_SCHEME: &str = "fixture:";

/// Name of the fallback response file inside a fixture directory.
pub const FIXTURE_DEFAULT: &str = "default.txt";

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("endpoint rejected the credentials (HTTP {status})")]
    AuthError { status: u16 },
    #[error("rate limited after {attempts} attempt(s)")]
    RateLimited { attempts: u32 },
    #[error("server error HTTP {status} after {attempts} attempt(s): {body}")]
    ServerError { status: u16, attempts: u32, body: String },
    #[error("request failed with HTTP {status}: {body}")]
    HttpError { status: u16, body: String },
    #[error("transport error after {attempts} attempt(s): {message}")]
    TransportError { attempts: u32, message: String },
    #[error("malformed completion response: {0}")]
    MalformedResponse(String),
    #[error("no fixture response for prompt hash {hash} in {dir}")]
    FixtureMissing { dir: String, hash: String },
    #[error("invalid LLM configuration: {0}")]
    InvalidConfig(String),
}

/// Bearer token. Never printed.
#[derive(Clone, PartialEq, Eq)]
pub struct ApiKey(String);

impl ApiKey {
    pub fn new(key: impl Into<String>) -> Self {
        Self(key.into())
    }

    pub fn from_env() -> Option<Self> {
        std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty()).map(Self)
    }

    pub fn expose(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for ApiKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ApiKey(***)")
    }
}

fn default_temperature() -> f64 {
    0.0
}
fn default_max_tokens() -> u32 {
    2048
}
fn default_timeout_secs() -> u64 {
    120
}
fn default_max_retries() -> u32 {
    3
}
fn default_backoff_ms() -> u64 {
    500
}

/// Endpoint, model and decoding parameters for one labelling run.
///
/// `endpoint_url` is the API base (the client appends `/chat/completions`),
/// or `fixture:<dir>` to replay canned responses from disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmConfig {
    pub endpoint_url: String,
    pub model: String,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    /// First retry delay; doubles on each further retry.
    #[serde(default = "default_backoff_ms")]
    pub backoff_ms: u64,
    #[serde(skip)]
    pub api_key: Option<ApiKey>,
}

impl LlmConfig {
    /// Defaults plus the API key from the environment.
    pub fn new(endpoint_url: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            endpoint_url: endpoint_url.into(),
            model: model.into(),
            temperature: default_temperature(),
            max_tokens: default_max_tokens(),
            timeout_secs: default_timeout_secs(),
            max_retries: default_max_retries(),
            backoff_ms: default_backoff_ms(),
            api_key: ApiKey::from_env(),
        }
    }

    pub fn fixture(dir: impl Into<PathBuf>) -> Self {
        let dir: PathBuf = dir.into();
        Self::new(format!("{FIXTURE_SCHEME}{}", dir.display()), "fixture")
    }

    /// Fills `api_key` from the environment when it is not set yet.
    pub fn with_env_key(mut self) -> Self {
        if self.api_key.is_none() {
            self.api_key = ApiKey::from_env();
        }
        self
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs(self.timeout_secs)
    }

    pub fn fixture_dir(&self) -> Option<PathBuf> {
        self.endpoint_url.strip_prefix(FIXTURE_SCHEME).map(PathBuf::from)
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        let invalid = |m: &str| Err(LlmError::InvalidConfig(m.to_owned()));
        if self.fixture_dir().is_none()
            && !(self.endpoint_url.starts_with("http://") || self.endpoint_url.starts_with("https://"))
        {
            return invalid("endpoint_url must be http(s):// or fixture:<dir>");
        }
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return invalid("temperature must be a finite number >= 0");
        }
        if self.max_tokens == 0 {
            return invalid("max_tokens must be positive");
        }
        if self.max_retries > 10 {
            return invalid("max_retries must be at most 10");
        }
        Ok(())
    }

    fn completions_url(&self) -> String {
        format!("{}/chat/completions", self.endpoint_url.trim_end_matches('/'))
    }

    fn backoff(&self, retry: u32) -> Duration {
        Duration::from_millis(self.backoff_ms.saturating_mul(1u64 << retry.min(16)))
    }
}

/// Assistant text of a completion and the number of HTTP attempts it took.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Completion {
    pub content: String,
    pub attempts: u32,
}

/// Anything that answers a single user prompt.
pub trait ChatBackend: Send + Sync {
    fn complete(&self, prompt: &str) -> Result<Completion, LlmError>;
}

/// Picks the HTTP or fixture backend for a configuration.
pub fn backend_for(cfg: &LlmConfig) -> Result<Box<dyn ChatBackend>, LlmError> {
    cfg.validate()?;
    match cfg.fixture_dir() {
        Some(dir) => Ok(Box::new(FixtureBackend::new(dir))),
        None => Ok(Box::new(HttpBackend::new(cfg.clone())?)),
    }
}

/// Sends one prompt and returns the first choice's message content.
pub fn call_llm(prompt: &str, cfg: &LlmConfig) -> Result<Completion, LlmError> {
    backend_for(cfg)?.complete(prompt)
}

/// Hex SHA-256 of a prompt; names fixture response files.
pub fn prompt_hash(prompt: &str) -> String {
    hex::encode(Sha256::digest(prompt.as_bytes()))
}

/// Replays `<dir>/<prompt-hash>.txt`, falling back to `<dir>/default.txt`.
#[derive(Debug, Clone)]
pub struct FixtureBackend {
    dir: PathBuf,
}

impl FixtureBackend {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }
}

impl ChatBackend for FixtureBackend {
    fn complete(&self, prompt: &str) -> Result<Completion, LlmError> {
        let hash = prompt_hash(prompt);
        for name in [format!("{hash}.txt"), FIXTURE_DEFAULT.to_owned()] {
            match std::fs::read_to_string(self.dir.join(&name)) {
                Ok(content) => return Ok(Completion { content, attempts: 1 }),
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => continue,
                Err(e) => {
                    return Err(LlmError::TransportError {
                        attempts: 1,
                        message: format!("reading fixture {name}: {e}"),
                    })
                }
            }
        }
        Err(LlmError::FixtureMissing {
            dir: self.dir.display().to_string(),
            hash,
        })
    }
}

struct InFlight {
    state: Mutex<(usize, usize)>,
    freed: Condvar,
}

static IN_FLIGHT: LazyLock<InFlight> = LazyLock::new(|| InFlight {
    state: Mutex::new((0, DEFAULT_MAX_IN_FLIGHT)),
    freed: Condvar::new(),
});

pub const DEFAULT_MAX_IN_FLIGHT: usize = 4;

/// Sets the process-wide cap on concurrent HTTP requests to LLM endpoints.
pub fn set_max_in_flight(limit: usize) {
    let mut state = IN_FLIGHT.state.lock().unwrap();
    state.1 = limit.max(1);
    IN_FLIGHT.freed.notify_all();
}

pub fn max_in_flight() -> usize {
    IN_FLIGHT.state.lock().unwrap().1
}

struct Permit;

impl Permit {
    fn acquire() -> Self {
        let mut state = IN_FLIGHT.state.lock().unwrap();
        while state.0 >= state.1 {
            state = IN_FLIGHT.freed.wait(state).unwrap();
        }
        state.0 += 1;
        Permit
    }
}

impl Drop for Permit {
    fn drop(&mut self) {
        IN_FLIGHT.state.lock().unwrap().0 -= 1;
        IN_FLIGHT.freed.notify_one();
    }
}

/// Blocking OpenAI-compatible chat-completions client with retries.
pub struct HttpBackend {
    cfg: LlmConfig,
    client: reqwest::blocking::Client,
}

impl HttpBackend {
    pub fn new(cfg: LlmConfig) -> Result<Self, LlmError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(cfg.timeout())
            .build()
            .map_err(|e| LlmError::InvalidConfig(e.to_string()))?;
        Ok(Self { cfg, client })
    }

    fn body(&self, prompt: &str) -> serde_json::Value {
        json!({
            "model": self.cfg.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.cfg.temperature,
            "max_tokens": self.cfg.max_tokens,
        })
    }
}

enum Outcome {
    Done(Result<String, LlmError>),
    Retry(LlmError),
}

impl HttpBackend {
    fn attempt(&self, body: &serde_json::Value, attempts: u32) -> Outcome {
        let mut request = self.client.post(self.cfg.completions_url()).json(body);
        if let Some(key) = &self.cfg.api_key {
            request = request.bearer_auth(key.expose());
        }
        let response = {
            let _permit = Permit::acquire();
            request.send()
        };
        let response = match response {
            Ok(r) => r,
            Err(e) => {
                return Outcome::Retry(LlmError::TransportError {
                    attempts,
                    message: e.to_string(),
                })
            }
        };
        let status = response.status().as_u16();
        match status {
            200..=299 => Outcome::Done(read_content(response)),
            401 | 403 => Outcome::Done(Err(LlmError::AuthError { status })),
            429 => Outcome::Retry(LlmError::RateLimited { attempts }),
            500..=599 => Outcome::Retry(LlmError::ServerError {
                status,
                attempts,
                body: response.text().unwrap_or_default(),
            }),
            _ => Outcome::Done(Err(LlmError::HttpError {
                status,
                body: response.text().unwrap_or_default(),
            })),
        }
    }
}

fn read_content(response: reqwest::blocking::Response) -> Result<String, LlmError> {
    let value: serde_json::Value = response
        .json()
        .map_err(|e| LlmError::MalformedResponse(e.to_string()))?;
    value
        .pointer("/choices/0/message/content")
        .and_then(serde_json::Value::as_str)
        .map(str::to_owned)
        .ok_or_else(|| LlmError::MalformedResponse("missing choices[0].message.content".into()))
}

impl ChatBackend for HttpBackend {
    fn complete(&self, prompt: &str) -> Result<Completion, LlmError> {
        let body = self.body(prompt);
        let mut attempts = 0;
        loop {
            attempts += 1;
            match self.attempt(&body, attempts) {
                Outcome::Done(result) => return result.map(|content| Completion { content, attempts }),
                Outcome::Retry(err) if attempts > self.cfg.max_retries => return Err(err),
                Outcome::Retry(err) => {
                    let delay = self.cfg.backoff(attempts - 1);
                    tracing::warn!(attempt = attempts, ?delay, error = %err, "retrying LLM request");
                    std::thread::sleep(delay);
                }
            }
        }
    }
}
