//! HTTP client for remote classifiers and masked LMs.
//!
//! ```text
//! POST {base}/v1/classify   {"segment_ids":null,"tokens":[..]}            -> {"probs":{..}}
//! POST {base}/v1/fill_mask  {"mask_index":i,"min_likelihood":x,"segment_ids":..,"tokens":[..],"top_k":k}
//!                                                                         -> {"candidates":[{"token","likelihood"}..]}
//! GET  {base}/v1/health                                                   -> {"status":"ok","classifier":..,"mlm":..}
//! ```
//!
//! Request bodies are canonical JSON (sorted keys, no whitespace) and double
//! as cache keys. Responses are validated before use and never repaired.

mod cache;

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use attrlab_core::types::{check_fill_mask_args, select_candidates, validate_candidates};
use attrlab_core::{ClassifierOutput, Error, MaskCandidate, MaskedLm, Result, TextClassifier, TokenSequence};
use serde::Deserialize;
use serde_json::{json, Value};

pub use cache::LruCache;

use crate::fsutil::{sha256_hex, write_atomic};

pub const CACHE_DIR_ENV: &str = "ATTRLAB_CACHE_DIR";

#[derive(Debug, Clone, PartialEq)]
pub struct RemoteEndpoint {
    pub base_url: String,
    pub timeout_ms: u64,
    pub max_retries: u32,
    pub cache_capacity: usize,
}

impl RemoteEndpoint {
    pub fn new(base_url: impl Into<String>) -> Self {
        RemoteEndpoint { base_url: base_url.into(), timeout_ms: 30_000, max_retries: 2, cache_capacity: 10_000 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.base_url.trim().is_empty() {
            return Err(Error::InvalidConfig("remote base_url is empty".into()));
        }
        if self.timeout_ms == 0 {
            return Err(Error::InvalidConfig("remote timeout_ms must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct Health {
    pub status: String,
    pub classifier: String,
    pub mlm: String,
}

/// One connection to a model server. Implements both model traits, so the
/// same value can serve as classifier and MLM when one server hosts both.
pub struct RemoteClient {
    endpoint: RemoteEndpoint,
    agent: ureq::Agent,
    cache: Mutex<LruCache>,
    spill_dir: Option<PathBuf>,
    requests: AtomicUsize,
}

impl std::fmt::Debug for RemoteClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RemoteClient").field("endpoint", &self.endpoint).finish_non_exhaustive()
    }
}

enum Attempt {
    Done(String),
    Retry(Error),
    Fail(Error),
}

impl RemoteClient {
    /// Spills the cache to `$ATTRLAB_CACHE_DIR` when that variable is set.
    pub fn new(endpoint: RemoteEndpoint) -> Result<Self> {
        let spill = std::env::var_os(CACHE_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from);
        Self::with_spill_dir(endpoint, spill)
    }

    pub fn with_spill_dir(endpoint: RemoteEndpoint, spill_dir: Option<PathBuf>) -> Result<Self> {
        endpoint.validate()?;
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(endpoint.timeout_ms)))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(RemoteClient {
            cache: Mutex::new(LruCache::new(endpoint.cache_capacity)),
            endpoint,
            agent,
            spill_dir,
            requests: AtomicUsize::new(0),
        })
    }

    pub fn endpoint(&self) -> &RemoteEndpoint {
        &self.endpoint
    }

    /// Requests that actually went over the network (retries included).
    pub fn network_requests(&self) -> usize {
        self.requests.load(Ordering::Relaxed)
    }

    fn url(&self, path: &str) -> String {
        format!("{}{path}", self.endpoint.base_url.trim_end_matches('/'))
    }

    fn attempt(&self, path: &str, body: Option<&str>) -> Attempt {
        self.requests.fetch_add(1, Ordering::Relaxed);
        let url = self.url(path);
        let sent = match body {
            Some(b) => self.agent.post(&url).header("content-type", "application/json").send(b),
            None => self.agent.get(&url).call(),
        };
        let mut resp = match sent {
            Ok(r) => r,
            Err(ureq::Error::Timeout(_)) => return Attempt::Retry(Error::Timeout),
            Err(e @ (ureq::Error::Io(_) | ureq::Error::ConnectionFailed | ureq::Error::HostNotFound)) => {
                return Attempt::Retry(Error::ModelUnavailable(format!("{url}: {e}")))
            }
            Err(e) => return Attempt::Fail(Error::Protocol(format!("{url}: {e}"))),
        };
        let status = resp.status().as_u16();
        let text = match resp.body_mut().read_to_string() {
            Ok(t) => t,
            Err(ureq::Error::Timeout(_)) => return Attempt::Retry(Error::Timeout),
            Err(e) => return Attempt::Retry(Error::ModelUnavailable(format!("{url}: {e}"))),
        };
        match status {
            200 => Attempt::Done(text),
            503 => Attempt::Retry(Error::ModelUnavailable(format!("{url}: 503 {}", error_message(&text)))),
            _ => Attempt::Fail(Error::RemoteFailure { status, message: error_message(&text) }),
        }
    }

    /// Sends with retries on transport failures and 503; protocol and other
    /// HTTP errors fail immediately.
    fn send(&self, path: &str, body: Option<&str>) -> Result<String> {
        let mut last = Error::ModelUnavailable("no attempt made".into());
        for attempt in 0..=self.endpoint.max_retries {
            if attempt > 0 {
                thread::sleep(Duration::from_millis(25 << (attempt - 1).min(6)));
            }
            match self.attempt(path, body) {
                Attempt::Done(text) => return Ok(text),
                Attempt::Retry(e) => last = e,
                Attempt::Fail(e) => return Err(e),
            }
        }
        Err(last)
    }

    fn spill_path(&self, key: &str) -> Option<PathBuf> {
        self.spill_dir.as_ref().map(|d| d.join(format!("{}.json", sha256_hex(key.as_bytes()))))
    }

    /// POSTs `body`, consulting the memory cache and then the spill directory.
    /// `check` validates the response; only valid responses are cached.
    fn post_cached<T>(&self, path: &str, body: &str, check: impl Fn(&str) -> Result<T>) -> Result<T> {
        let key = format!("{path}\n{body}");
        if let Some(hit) = self.cache.lock().expect("cache lock").get(&key) {
            return check(&hit);
        }
        if let Some(p) = self.spill_path(&key) {
            if let Ok(text) = fs::read_to_string(&p) {
                if let Ok(v) = check(&text) {
                    self.cache.lock().expect("cache lock").insert(key, text);
                    return Ok(v);
                }
            }
        }
        let text = self.send(path, Some(body))?;
        let value = check(&text)?;
        if let Some(p) = self.spill_path(&key) {
            // The spill is an optimization; a failed write only costs a refetch.
            let _ = write_atomic(&p, text.as_bytes());
        }
        self.cache.lock().expect("cache lock").insert(key, text);
        Ok(value)
    }

    pub fn health(&self) -> Result<Health> {
        let text = self.send("/v1/health", None)?;
        let h: Health = serde_json::from_str(&text).map_err(|e| Error::Protocol(format!("health: {e}")))?;
        if h.status != "ok" {
            return Err(Error::ModelUnavailable(format!("server status {:?}", h.status)));
        }
        Ok(h)
    }
}

fn error_message(text: &str) -> String {
    serde_json::from_str::<Value>(text)
        .ok()
        .and_then(|v| v.get("error").and_then(Value::as_str).map(str::to_string))
        .unwrap_or_else(|| text.chars().take(200).collect())
}

/// Compact JSON; `serde_json::Value` objects keep keys sorted.
pub fn canonical_json(value: &Value) -> String {
    value.to_string()
}

pub fn classify_body(sequence: &TokenSequence) -> String {
    canonical_json(&json!({
        "tokens": sequence.tokens(),
        "segment_ids": sequence.segment_ids(),
    }))
}

pub fn fill_mask_body(sequence: &TokenSequence, position: usize, top_k: usize, min_likelihood: f64) -> String {
    canonical_json(&json!({
        "tokens": sequence.tokens(),
        "segment_ids": sequence.segment_ids(),
        "mask_index": position,
        "top_k": top_k,
        "min_likelihood": min_likelihood,
    }))
}

#[derive(Deserialize)]
struct ClassifyResponse {
    probs: BTreeMap<String, f64>,
}

#[derive(Deserialize)]
struct FillMaskResponse {
    candidates: Vec<MaskCandidate>,
}

pub fn parse_classify_response(text: &str) -> Result<ClassifierOutput> {
    let r: ClassifyResponse =
        serde_json::from_str(text).map_err(|e| Error::Protocol(format!("classify response: {e}")))?;
    ClassifierOutput::new(r.probs).map_err(|e| Error::Protocol(e.to_string()))
}

pub fn parse_fill_mask_response(text: &str) -> Result<Vec<MaskCandidate>> {
    let r: FillMaskResponse =
        serde_json::from_str(text).map_err(|e| Error::Protocol(format!("fill_mask response: {e}")))?;
    validate_candidates(&r.candidates)?;
    Ok(r.candidates)
}

impl TextClassifier for RemoteClient {
    fn classify(&self, sequence: &TokenSequence) -> Result<ClassifierOutput> {
        sequence.validate()?;
        self.post_cached("/v1/classify", &classify_body(sequence), parse_classify_response)
    }
}

impl MaskedLm for RemoteClient {
    fn fill_mask(
        &self,
        sequence: &TokenSequence,
        position: usize,
        top_k: usize,
        min_likelihood: f64,
    ) -> Result<Vec<MaskCandidate>> {
        check_fill_mask_args(sequence, position, top_k)?;
        let body = fill_mask_body(sequence, position, top_k, min_likelihood);
        let candidates = self.post_cached("/v1/fill_mask", &body, parse_fill_mask_response)?;
        // Servers may over-return; the contract is enforced here.
        Ok(select_candidates(candidates, top_k, min_likelihood))
    }
}
