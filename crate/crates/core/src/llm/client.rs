use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use super::{build_prompt, LlmError, LlmRecord, PromptTemplate, Provenance};
use crate::corpus::Instance;

/// OpenAI-compatible chat-completions endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EndpointConfig {
    pub url: String,
    pub model: String,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    pub temperature: f64,
    pub max_retries: usize,
    pub backoff_ms: u64,
    pub timeout_secs: u64,
    pub max_in_flight: usize,
    /// Token-bucket refill rate; 0 disables rate limiting.
    pub requests_per_second: f64,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        Self {
            url: String::new(),
            model: String::new(),
            api_key_env: "LLM_API_KEY".into(),
            temperature: 0.0,
            max_retries: 3,
            backoff_ms: 500,
            timeout_secs: 120,
            max_in_flight: 4,
            requests_per_second: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransportError {
    pub message: String,
}

pub trait Transport: Send + Sync {
    fn post_json(
        &self,
        url: &str,
        api_key: Option<&str>,
        body: &str,
    ) -> Result<HttpResponse, TransportError>;
}

pub struct HttpTransport {
    client: reqwest::blocking::Client,
}

impl HttpTransport {
    pub fn new(timeout: Duration) -> Result<Self, LlmError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| LlmError::Network {
                attempts: 0,
                last: e.to_string(),
            })?;
        Ok(Self { client })
    }
}

impl Transport for HttpTransport {
    fn post_json(
        &self,
        url: &str,
        api_key: Option<&str>,
        body: &str,
    ) -> Result<HttpResponse, TransportError> {
        let mut req = self
            .client
            .post(url)
            .header(reqwest::header::CONTENT_TYPE, "application/json")
            .body(body.to_string());
        if let Some(key) = api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| TransportError {
            message: e.to_string(),
        })?;
        let status = resp.status().as_u16();
        let body = resp.text().map_err(|e| TransportError {
            message: e.to_string(),
        })?;
        Ok(HttpResponse { status, body })
    }
}

/// Content-addressed key for a (model, prompt) pair.
pub fn cache_key(model: &str, prompt: &str) -> String {
    let mut h = Sha256::new();
    h.update(model.as_bytes());
    h.update([0u8]);
    h.update(prompt.as_bytes());
    hex::encode(h.finalize())
}

/// Directory of `<key>.txt` files holding raw responses.
#[derive(Debug, Clone)]
pub struct ResponseCache {
    dir: PathBuf,
}

impl ResponseCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.txt"))
    }

    pub fn get(&self, key: &str) -> Option<String> {
        fs::read_to_string(self.path(key)).ok()
    }

    /// Write-to-temp then rename, so readers never see a partial file.
    pub fn put(&self, key: &str, value: &str) -> std::io::Result<()> {
        fs::create_dir_all(&self.dir)?;
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
        tmp.write_all(value.as_bytes())?;
        tmp.flush()?;
        tmp.persist(self.path(key)).map_err(|e| e.error)?;
        Ok(())
    }
}

/// Blocking token bucket shared by worker threads.
pub struct TokenBucket {
    rate: f64,
    capacity: f64,
    state: Mutex<(f64, Instant)>,
}

impl TokenBucket {
    pub fn new(rate_per_sec: f64, capacity: f64) -> Self {
        Self {
            rate: rate_per_sec,
            capacity,
            state: Mutex::new((capacity, Instant::now())),
        }
    }

    pub fn acquire(&self) {
        loop {
            let wait = {
                let mut s = self.state.lock().unwrap();
                let now = Instant::now();
                let refill = now.duration_since(s.1).as_secs_f64() * self.rate;
                s.0 = (s.0 + refill).min(self.capacity);
                s.1 = now;
                if s.0 >= 1.0 {
                    s.0 -= 1.0;
                    return;
                }
                Duration::from_secs_f64((1.0 - s.0) / self.rate)
            };
            thread::sleep(wait);
        }
    }
}

pub struct LlmClient {
    endpoint: Option<EndpointConfig>,
    api_key: Option<String>,
    transport: Box<dyn Transport>,
    cache: ResponseCache,
    offline: bool,
    bucket: Option<TokenBucket>,
    network_calls: AtomicUsize,
}

impl LlmClient {
    pub fn new(
        endpoint: Option<EndpointConfig>,
        transport: Box<dyn Transport>,
        cache: ResponseCache,
        offline: bool,
    ) -> Self {
        let api_key = endpoint
            .as_ref()
            .and_then(|e| std::env::var(&e.api_key_env).ok())
            .filter(|k| !k.is_empty());
        let bucket = endpoint
            .as_ref()
            .filter(|e| e.requests_per_second > 0.0)
            .map(|e| TokenBucket::new(e.requests_per_second, e.max_in_flight.max(1) as f64));
        Self {
            endpoint,
            api_key,
            transport,
            cache,
            offline,
            bucket,
            network_calls: AtomicUsize::new(0),
        }
    }

    /// Client backed by real HTTP.
    pub fn http(
        endpoint: Option<EndpointConfig>,
        cache: ResponseCache,
        offline: bool,
    ) -> Result<Self, LlmError> {
        let timeout = Duration::from_secs(endpoint.as_ref().map_or(120, |e| e.timeout_secs));
        Ok(Self::new(
            endpoint,
            Box::new(HttpTransport::new(timeout)?),
            cache,
            offline,
        ))
    }

    pub fn with_api_key(mut self, key: Option<String>) -> Self {
        self.api_key = key;
        self
    }

    pub fn network_calls(&self) -> usize {
        self.network_calls.load(Ordering::SeqCst)
    }

    fn model_id(&self) -> &str {
        self.endpoint.as_ref().map_or("", |e| e.model.as_str())
    }

    /// Raw response text for `prompt`, from the cache when possible.
    pub fn query(&self, prompt: &str) -> Result<(String, Provenance), LlmError> {
        let key = cache_key(self.model_id(), prompt);
        if let Some(hit) = self.cache.get(&key) {
            return Ok((hit, Provenance::Cache));
        }
        if self.offline {
            return Err(LlmError::OfflineMiss(key));
        }
        let Some(ep) = self.endpoint.as_ref().filter(|e| !e.url.is_empty()) else {
            return Err(LlmError::NoEndpoint(key));
        };
        let body = json!({
            "model": ep.model,
            "temperature": ep.temperature,
            "messages": [{"role": "user", "content": prompt}],
        })
        .to_string();

        let attempts = ep.max_retries + 1;
        let mut last_error = String::new();
        let mut rate_limited = false;
        for attempt in 0..attempts {
            if attempt > 0 {
                let backoff = ep.backoff_ms.saturating_mul(1 << (attempt - 1).min(16));
                thread::sleep(Duration::from_millis(backoff));
            }
            if let Some(b) = &self.bucket {
                b.acquire();
            }
            self.network_calls.fetch_add(1, Ordering::SeqCst);
            match self
                .transport
                .post_json(&ep.url, self.api_key.as_deref(), &body)
            {
                Ok(resp) if (200..300).contains(&resp.status) => {
                    let content = extract_content(&resp.body)?;
                    self.cache.put(&key, &content)?;
                    return Ok((content, Provenance::Live));
                }
                Ok(resp) if resp.status == 429 => {
                    rate_limited = true;
                    last_error = format!("status 429: {}", resp.body);
                }
                Ok(resp) if resp.status >= 500 => {
                    rate_limited = false;
                    last_error = format!("status {}: {}", resp.status, resp.body);
                }
                Ok(resp) => {
                    return Err(LlmError::Status {
                        status: resp.status,
                        body: resp.body,
                    })
                }
                Err(e) => {
                    rate_limited = false;
                    last_error = e.message;
                }
            }
            log::warn!("attempt {} of {attempts} failed: {last_error}", attempt + 1);
        }
        if rate_limited {
            Err(LlmError::RateLimited { attempts })
        } else {
            Err(LlmError::Network {
                attempts,
                last: last_error,
            })
        }
    }
}

fn extract_content(body: &str) -> Result<String, LlmError> {
    let v: serde_json::Value =
        serde_json::from_str(body).map_err(|e| LlmError::Payload(e.to_string()))?;
    v.pointer("/choices/0/message/content")
        .and_then(|c| c.as_str())
        .map(str::to_string)
        .ok_or_else(|| LlmError::Payload("missing choices[0].message.content".into()))
}

/// Queries every instance with at most `max_in_flight` concurrent requests.
/// Results come back in input order.
pub fn annotate_live(
    client: &LlmClient,
    instances: &[Instance],
    template: &PromptTemplate,
    labels: &[String],
    max_in_flight: usize,
) -> Vec<Result<LlmRecord, LlmError>> {
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Result<LlmRecord, LlmError>>>> =
        instances.iter().map(|_| Mutex::new(None)).collect();
    let workers = max_in_flight.clamp(1, instances.len().max(1));
    thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(inst) = instances.get(i) else { break };
                let result = build_prompt(template, inst, labels)
                    .and_then(|p| client.query(&p))
                    .map(|(raw, prov)| LlmRecord::from_raw(&inst.id, raw, labels, prov));
                *slots[i].lock().unwrap() = Some(result);
            });
        }
    });
    slots
        .into_iter()
        .map(|s| s.into_inner().unwrap().expect("every slot filled"))
        .collect()
}
