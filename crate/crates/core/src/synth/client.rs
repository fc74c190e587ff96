//! Chat-completions client.
//!
//! Requests go to `POST {base_url}/chat/completions` with a bearer key read
//! from the environment. Every network attempt holds one of
//! `max_concurrency` permits and waits for a slot from a rate limiter that
//! spaces attempts `1 / requests_per_second` apart. 429 and 5xx responses
//! (and connection failures) are retried with exponential backoff.
//!
//! Responses are cached under `sha256(model, messages)`. Concurrent
//! requests for the same key share one network call; with a cache
//! directory the entries survive the process as `<key>.json` files.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use chrono::{DateTime, Utc};
use futures::stream::{self, StreamExt};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;
use tokio::sync::{OnceCell, Semaphore};
use tokio::time::Instant;

use super::prompt::{build_prompt, PromptError, PromptSpec};

pub const DEFAULT_API_KEY_ENV: &str = "LEXFORGE_API_KEY";

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("request failed after {attempts} attempt(s); last status {}; last error: {}",
        last_status.map_or("none".to_string(), |s| s.to_string()),
        last_error.as_deref().unwrap_or("none"))]
    Transport {
        attempts: u32,
        last_status: Option<u16>,
        last_error: Option<String>,
    },
    #[error("endpoint answered HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("response cache {path}: {message}")]
    Cache { path: PathBuf, message: String },
}

fn default_provider_name() -> String {
    "openai-compatible".into()
}
fn default_api_key_env() -> String {
    DEFAULT_API_KEY_ENV.into()
}
fn default_max_concurrency() -> usize {
    4
}
fn default_rps() -> f64 {
    2.0
}
fn default_max_retries() -> u32 {
    3
}
fn default_temperature() -> f64 {
    0.7
}
fn default_backoff_ms() -> u64 {
    500
}
fn default_backoff_max_ms() -> u64 {
    30_000
}
fn default_timeout_secs() -> u64 {
    120
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderConfig {
    /// Label recorded on generated pairs.
    #[serde(default = "default_provider_name")]
    pub name: String,
    pub base_url: String,
    pub model_name: String,
    #[serde(default = "default_api_key_env")]
    pub api_key_env: String,
    #[serde(default = "default_max_concurrency")]
    pub max_concurrency: usize,
    #[serde(default = "default_rps")]
    pub requests_per_second: f64,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    /// First backoff delay; doubled on every further retry.
    #[serde(default = "default_backoff_ms")]
    pub backoff_base_ms: u64,
    #[serde(default = "default_backoff_max_ms")]
    pub backoff_max_ms: u64,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
}

impl ProviderConfig {
    pub fn new(base_url: impl Into<String>, model_name: impl Into<String>) -> Self {
        Self {
            name: default_provider_name(),
            base_url: base_url.into(),
            model_name: model_name.into(),
            api_key_env: default_api_key_env(),
            max_concurrency: default_max_concurrency(),
            requests_per_second: default_rps(),
            max_retries: default_max_retries(),
            temperature: default_temperature(),
            backoff_base_ms: default_backoff_ms(),
            backoff_max_ms: default_backoff_max_ms(),
            timeout_secs: default_timeout_secs(),
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::Config(m));
        if reqwest::Url::parse(&self.base_url).is_err() {
            return bad(format!("base_url {:?} is not a valid URL", self.base_url));
        }
        if self.model_name.trim().is_empty() {
            return bad("model_name is empty".into());
        }
        if self.api_key_env.trim().is_empty() {
            return bad("api_key_env is empty".into());
        }
        if self.max_concurrency < 1 {
            return bad("max_concurrency must be at least 1".into());
        }
        if !(self.requests_per_second.is_finite() && self.requests_per_second > 0.0) {
            return bad(format!(
                "requests_per_second must be positive, got {}",
                self.requests_per_second
            ));
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return bad(format!(
                "temperature must be in [0, 2], got {}",
                self.temperature
            ));
        }
        Ok(())
    }

    fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.base_url.trim_end_matches('/'))
    }

    fn backoff(&self, retry: u32) -> Duration {
        let factor = 1u64
            .checked_shl(retry.saturating_sub(1))
            .unwrap_or(u64::MAX);
        Duration::from_millis(
            self.backoff_base_ms
                .saturating_mul(factor)
                .min(self.backoff_max_ms),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self {
            role: "system".into(),
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: "user".into(),
            content: content.into(),
        }
    }
}

/// A model answer and how it was obtained.
#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub text: String,
    /// Retries spent on the network call; 0 for cache hits.
    pub retries: u32,
    pub from_cache: bool,
    /// When the network response was received (kept through the cache).
    pub created_at: DateTime<Utc>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClientStats {
    pub network_calls: u64,
    pub retries: u64,
    pub cache_hits: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CacheEntry {
    key: String,
    model: String,
    response: String,
    created_at: DateTime<Utc>,
}

/// Response store keyed by `sha256(model, messages)`.
#[derive(Debug, Default)]
pub struct ResponseCache {
    dir: Option<PathBuf>,
    cells: Mutex<HashMap<String, Arc<OnceCell<CacheEntry>>>>,
}

impl ResponseCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Cache backed by `<dir>/<key>.json` files (created on demand).
    pub fn on_disk(dir: impl Into<PathBuf>) -> Self {
        Self {
            dir: Some(dir.into()),
            cells: Mutex::default(),
        }
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn key(model: &str, messages: &[ChatMessage]) -> String {
        let mut h = Sha256::new();
        h.update(model.as_bytes());
        for m in messages {
            h.update([0u8]);
            h.update(m.role.as_bytes());
            h.update([0u8]);
            h.update(m.content.as_bytes());
        }
        hex::encode(h.finalize())
    }

    fn cell(&self, key: &str) -> Arc<OnceCell<CacheEntry>> {
        let mut cells = self.cells.lock().expect("cache lock");
        Arc::clone(cells.entry(key.to_string()).or_default())
    }

    fn path_for(&self, key: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("{key}.json")))
    }

    fn load(&self, key: &str) -> Result<Option<CacheEntry>, SynthError> {
        let Some(path) = self.path_for(key) else {
            return Ok(None);
        };
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => {
                return Err(SynthError::Cache {
                    path,
                    message: e.to_string(),
                })
            }
        };
        serde_json::from_str(&text)
            .map(Some)
            .map_err(|e| SynthError::Cache {
                path,
                message: e.to_string(),
            })
    }

    fn store(&self, entry: &CacheEntry) -> Result<(), SynthError> {
        let Some(path) = self.path_for(&entry.key) else {
            return Ok(());
        };
        let err = |message: String| SynthError::Cache {
            path: path.clone(),
            message,
        };
        if let Some(dir) = &self.dir {
            std::fs::create_dir_all(dir).map_err(|e| err(e.to_string()))?;
        }
        let tmp = path.with_extension("json.tmp");
        let body = serde_json::to_string_pretty(entry).expect("cache entry serializes");
        std::fs::write(&tmp, body).map_err(|e| err(e.to_string()))?;
        std::fs::rename(&tmp, &path).map_err(|e| err(e.to_string()))
    }
}

/// Spaces successive acquisitions at least `interval` apart.
#[derive(Debug)]
struct RateLimiter {
    interval: Duration,
    next: tokio::sync::Mutex<Option<Instant>>,
}

impl RateLimiter {
    fn new(per_second: f64) -> Self {
        Self {
            interval: Duration::from_secs_f64(1.0 / per_second),
            next: tokio::sync::Mutex::new(None),
        }
    }

    async fn acquire(&self) {
        let slot = {
            let mut next = self.next.lock().await;
            let now = Instant::now();
            let slot = next.map_or(now, |n| n.max(now));
            *next = Some(slot + self.interval);
            slot
        };
        tokio::time::sleep_until(slot).await;
    }
}

#[derive(Debug)]
pub struct ChatClient {
    config: ProviderConfig,
    api_key: String,
    http: reqwest::Client,
    permits: Semaphore,
    limiter: RateLimiter,
    cache: ResponseCache,
    network_calls: AtomicU64,
    retries: AtomicU64,
    cache_hits: AtomicU64,
}

struct Fetched {
    entry: CacheEntry,
    retries: u32,
}

impl ChatClient {
    /// Validates the config and reads the API key from the environment.
    pub fn new(config: ProviderConfig, cache: ResponseCache) -> Result<Self, SynthError> {
        config.validate()?;
        let api_key = std::env::var(&config.api_key_env)
            .ok()
            .filter(|k| !k.trim().is_empty())
            .ok_or_else(|| {
                SynthError::Config(format!(
                    "API key environment variable {} is not set",
                    config.api_key_env
                ))
            })?;
        let http = reqwest::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| SynthError::Config(format!("http client: {e}")))?;
        Ok(Self {
            permits: Semaphore::new(config.max_concurrency),
            limiter: RateLimiter::new(config.requests_per_second),
            config,
            api_key,
            http,
            cache,
            network_calls: AtomicU64::new(0),
            retries: AtomicU64::new(0),
            cache_hits: AtomicU64::new(0),
        })
    }

    pub fn config(&self) -> &ProviderConfig {
        &self.config
    }

    pub fn stats(&self) -> ClientStats {
        ClientStats {
            network_calls: self.network_calls.load(Ordering::SeqCst),
            retries: self.retries.load(Ordering::SeqCst),
            cache_hits: self.cache_hits.load(Ordering::SeqCst),
        }
    }

    /// Sends `messages`, answering from the cache when possible.
    pub async fn complete(&self, messages: &[ChatMessage]) -> Result<Completion, SynthError> {
        let key = ResponseCache::key(&self.config.model_name, messages);
        let cell = self.cache.cell(&key);
        let mut fetched: Option<u32> = None;
        let entry = cell
            .get_or_try_init(|| async {
                if let Some(entry) = self.cache.load(&key)? {
                    return Ok(entry);
                }
                let Fetched { entry, retries } = self.fetch(&key, messages).await?;
                fetched = Some(retries);
                self.cache.store(&entry)?;
                Ok::<_, SynthError>(entry)
            })
            .await?;
        match fetched {
            Some(retries) => Ok(Completion {
                text: entry.response.clone(),
                retries,
                from_cache: false,
                created_at: entry.created_at,
            }),
            None => {
                self.cache_hits.fetch_add(1, Ordering::SeqCst);
                Ok(Completion {
                    text: entry.response.clone(),
                    retries: 0,
                    from_cache: true,
                    created_at: entry.created_at,
                })
            }
        }
    }

    /// Renders the generation prompt for `spec` and sends it as a single
    /// user message.
    pub async fn request_generation(&self, spec: &PromptSpec) -> Result<Completion, SynthError> {
        let prompt = build_prompt(spec)?;
        self.complete(&[ChatMessage::user(prompt)]).await
    }

    /// Runs many generations with at most `max_concurrency` in flight;
    /// results come back in input order.
    pub async fn request_many(&self, specs: &[PromptSpec]) -> Vec<Result<Completion, SynthError>> {
        stream::iter(specs)
            .map(|spec| self.request_generation(spec))
            .buffered(self.config.max_concurrency)
            .collect()
            .await
    }

    async fn fetch(&self, key: &str, messages: &[ChatMessage]) -> Result<Fetched, SynthError> {
        let body = json!({
            "model": self.config.model_name,
            "messages": messages,
            "temperature": self.config.temperature,
        });
        let url = self.config.endpoint();
        let mut last_status = None;
        let mut last_error = None;
        let attempts = self.config.max_retries + 1;

        for attempt in 0..attempts {
            if attempt > 0 {
                self.retries.fetch_add(1, Ordering::SeqCst);
                tokio::time::sleep(self.config.backoff(attempt)).await;
            }
            let response = {
                let _permit = self.permits.acquire().await.expect("semaphore closed");
                self.limiter.acquire().await;
                self.network_calls.fetch_add(1, Ordering::SeqCst);
                let sent = self
                    .http
                    .post(&url)
                    .bearer_auth(&self.api_key)
                    .json(&body)
                    .send()
                    .await;
                match sent {
                    Ok(resp) => {
                        let status = resp.status();
                        resp.text().await.map(|text| (status, text))
                    }
                    Err(e) => Err(e),
                }
            };

            match response {
                Ok((status, text)) if status.is_success() => {
                    let content = extract_content(&text)?;
                    log::debug!(
                        "{} answered after {attempt} retries",
                        self.config.model_name
                    );
                    return Ok(Fetched {
                        entry: CacheEntry {
                            key: key.to_string(),
                            model: self.config.model_name.clone(),
                            response: content,
                            created_at: Utc::now(),
                        },
                        retries: attempt,
                    });
                }
                Ok((status, text)) => {
                    let code = status.as_u16();
                    if code == 429 || status.is_server_error() {
                        log::warn!(
                            "HTTP {code} from {url}; attempt {} of {attempts}",
                            attempt + 1
                        );
                        last_status = Some(code);
                        continue;
                    }
                    let body: String = text.chars().take(200).collect();
                    return Err(SynthError::Status { status: code, body });
                }
                Err(e) => {
                    log::warn!(
                        "request to {url} failed: {e}; attempt {} of {attempts}",
                        attempt + 1
                    );
                    last_error = Some(e.to_string());
                }
            }
        }
        Err(SynthError::Transport {
            attempts,
            last_status,
            last_error,
        })
    }
}

/// Pulls `choices[0].message.content` out of a completion body.
fn extract_content(body: &str) -> Result<String, SynthError> {
    let value: Value = serde_json::from_str(body).map_err(|e| {
        let head: String = body.chars().take(80).collect();
        SynthError::Protocol(format!("response is not JSON ({e}): {head:?}"))
    })?;
    value
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| SynthError::Protocol("response has no choices[0].message.content".into()))
}
