use std::collections::{BTreeSet, HashMap};
use std::io::Read;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::thread;
use std::time::Duration;

use log::{debug, warn};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use super::{canonical_json, BackendEndpoint, BackendError, CacheKey, Capability, HealthResponse, ResponseCache};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub base_delay: Duration,
    pub max_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            base_delay: Duration::from_millis(250),
            max_delay: Duration::from_secs(8),
        }
    }
}

impl RetryPolicy {
    fn delay(&self, attempt: u32) -> Duration {
        let factor = 1u32.checked_shl(attempt).unwrap_or(u32::MAX);
        self.base_delay.saturating_mul(factor).min(self.max_delay)
    }
}

#[derive(Debug, Clone)]
pub struct ClientOptions {
    pub max_in_flight: usize,
    pub timeout: Duration,
    pub max_retries: u32,
    pub retry: RetryPolicy,
    pub cache_dir: Option<std::path::PathBuf>,
    pub bearer_token: Option<String>,
    /// Serve everything from the cache, including health records, and fail
    /// on a miss instead of touching the network.
    pub offline: bool,
}

impl Default for ClientOptions {
    fn default() -> Self {
        ClientOptions {
            max_in_flight: 8,
            timeout: Duration::from_secs(60),
            max_retries: 3,
            retry: RetryPolicy::default(),
            cache_dir: None,
            bearer_token: None,
            offline: false,
        }
    }
}

type Shared = Result<String, BackendError>;

#[derive(Default)]
struct Pending {
    result: Mutex<Option<Shared>>,
    ready: Condvar,
}

struct Gate {
    limit: usize,
    used: Mutex<usize>,
    freed: Condvar,
}

struct GateGuard<'a>(&'a Gate);

impl Gate {
    fn acquire(&self) -> GateGuard<'_> {
        let mut used = self.used.lock().unwrap();
        while *used >= self.limit {
            used = self.freed.wait(used).unwrap();
        }
        *used += 1;
        GateGuard(self)
    }
}

impl Drop for GateGuard<'_> {
    fn drop(&mut self) {
        *self.0.used.lock().unwrap() -= 1;
        self.0.freed.notify_one();
    }
}

/// Thread-safe client shared by every pipeline stage.
pub struct BackendClient {
    agent: ureq::Agent,
    options: ClientOptions,
    cache: Option<ResponseCache>,
    gate: Gate,
    in_flight: Mutex<HashMap<CacheKey, Arc<Pending>>>,
    network_calls: AtomicU64,
    cache_hits: AtomicU64,
}

impl BackendClient {
    pub fn new(options: ClientOptions) -> Result<Self, BackendError> {
        let cache = match &options.cache_dir {
            Some(dir) => {
                Some(ResponseCache::open(dir).map_err(|e| BackendError::Cache(format!("{}: {e}", dir.display())))?)
            }
            None => None,
        };
        if options.offline && cache.is_none() {
            return Err(BackendError::Cache("offline mode needs a cache directory".into()));
        }
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(options.timeout))
            .build()
            .into();
        Ok(BackendClient {
            agent,
            gate: Gate {
                limit: options.max_in_flight.max(1),
                used: Mutex::new(0),
                freed: Condvar::new(),
            },
            options,
            cache,
            in_flight: Mutex::new(HashMap::new()),
            network_calls: AtomicU64::new(0),
            cache_hits: AtomicU64::new(0),
        })
    }

    pub fn options(&self) -> &ClientOptions {
        &self.options
    }

    pub fn max_in_flight(&self) -> usize {
        self.gate.limit
    }

    /// Worker threads worth running for a batch of calls. Offline calls are
    /// local reads, so more workers than cores only adds spawn cost.
    pub fn workers(&self) -> usize {
        if self.options.offline {
            let cores = thread::available_parallelism().map_or(1, |n| n.get());
            self.gate.limit.min(cores)
        } else {
            self.gate.limit
        }
    }

    /// Network requests issued so far (health checks included).
    pub fn network_calls(&self) -> u64 {
        self.network_calls.load(Ordering::Relaxed)
    }

    pub fn cache_hits(&self) -> u64 {
        self.cache_hits.load(Ordering::Relaxed)
    }

    fn health_record_name(base_url: &str) -> String {
        format!(
            "health-{}.json",
            hex::encode(Sha256::digest(base_url.trim_end_matches('/').as_bytes()))
        )
    }

    /// Queries `GET /v1/health` and checks that every `required` capability is
    /// advertised. In offline mode the last recorded health response is used.
    pub fn health_check(&self, base_url: &str, required: &[Capability]) -> Result<BackendEndpoint, BackendError> {
        let base = base_url.trim_end_matches('/').to_string();
        let body = if self.options.offline {
            let cache = self.cache.as_ref().expect("offline implies cache");
            cache
                .load_named(&Self::health_record_name(&base))
                .map_err(|e| BackendError::Cache(e.to_string()))?
                .ok_or_else(|| BackendError::Unavailable {
                    url: base.clone(),
                    reason: "offline and no recorded health check".into(),
                })?
        } else {
            let url = format!("{base}/v1/health");
            let body = self.with_retries(&url, self.options.max_retries, || {
                let mut req = self.agent.get(&url);
                if let Some(token) = &self.options.bearer_token {
                    req = req.header("Authorization", format!("Bearer {token}"));
                }
                req.call()
            })?;
            if let Some(cache) = &self.cache {
                if let Err(e) = cache.store_named(&Self::health_record_name(&base), &body) {
                    warn!("could not record health response for {base}: {e}");
                }
            }
            body
        };
        let health: HealthResponse = serde_json::from_str(&body).map_err(|e| BackendError::Protocol {
            url: base.clone(),
            reason: format!("bad health response: {e}"),
        })?;
        if health.status != "ok" {
            return Err(BackendError::Unavailable {
                url: base,
                reason: format!("health status `{}`", health.status),
            });
        }
        if health.model_id.is_empty() || health.capabilities.is_empty() {
            return Err(BackendError::Protocol {
                url: base,
                reason: "health response lacks model_id or capabilities".into(),
            });
        }
        let endpoint = BackendEndpoint {
            base_url: base,
            capabilities: health.capabilities.into_iter().collect::<BTreeSet<_>>(),
            model_id: health.model_id,
            timeout: self.options.timeout,
            max_retries: self.options.max_retries,
        };
        for r in required {
            endpoint.require(*r)?;
        }
        Ok(endpoint)
    }

    /// Typed request: serializes `request`, resolves it through the cache and
    /// deserializes the response. Responses that do not match `R` are never cached.
    pub fn call<Req: Serialize, R: DeserializeOwned>(
        &self,
        endpoint: &BackendEndpoint,
        capability: Capability,
        request: &Req,
    ) -> Result<R, BackendError> {
        endpoint.require(capability)?;
        let body = serde_json::to_value(request).map_err(|e| BackendError::Protocol {
            url: endpoint.base_url.clone(),
            reason: e.to_string(),
        })?;
        let url = endpoint.url(capability.path());
        let raw = self.call_with_cache_checked(endpoint, capability.path(), &body, |text| {
            serde_json::from_str::<R>(text).map(|_| ()).map_err(|e| e.to_string())
        })?;
        serde_json::from_str(&raw).map_err(|e| BackendError::Protocol {
            url,
            reason: e.to_string(),
        })
    }

    /// Returns the verbatim response body for `POST {path}` with `body`.
    pub fn call_with_cache(
        &self,
        endpoint: &BackendEndpoint,
        path: &str,
        body: &Value,
    ) -> Result<String, BackendError> {
        self.call_with_cache_checked(endpoint, path, body, |text| {
            serde_json::from_str::<Value>(text)
                .map_err(|e| e.to_string())
                .and_then(|v| {
                    if v.is_object() {
                        Ok(())
                    } else {
                        Err("response is not a JSON object".into())
                    }
                })
        })
    }

    fn call_with_cache_checked(
        &self,
        endpoint: &BackendEndpoint,
        path: &str,
        body: &Value,
        check: impl Fn(&str) -> Result<(), String>,
    ) -> Result<String, BackendError> {
        let canonical = canonical_json(body);
        let key = CacheKey::new(path, &endpoint.model_id, &canonical);
        let url = endpoint.url(path);

        if let Some(hit) = self.cache_lookup(&key)? {
            self.cache_hits.fetch_add(1, Ordering::Relaxed);
            return Ok(hit);
        }
        if self.options.offline {
            return Err(BackendError::Unavailable {
                url,
                reason: format!("offline cache miss for {key}"),
            });
        }

        let (pending, leader) = {
            let mut map = self.in_flight.lock().unwrap();
            match map.get(&key) {
                Some(p) => (p.clone(), false),
                None => {
                    let p = Arc::new(Pending::default());
                    map.insert(key, p.clone());
                    (p, true)
                }
            }
        };

        if !leader {
            let mut slot = pending.result.lock().unwrap();
            while slot.is_none() {
                slot = pending.ready.wait(slot).unwrap();
            }
            return slot.clone().unwrap();
        }

        // A previous leader may have stored the response after our first lookup.
        let fetched = match self.cache_lookup(&key) {
            Ok(Some(hit)) => {
                self.cache_hits.fetch_add(1, Ordering::Relaxed);
                Ok(hit)
            }
            Ok(None) => self.fetch(endpoint, &url, &canonical, &check),
            Err(e) => Err(e),
        };
        let result = fetched.and_then(|text| {
            if let Some(cache) = &self.cache {
                cache
                    .store(&key, &text)
                    .map_err(|e| BackendError::Cache(format!("store {key}: {e}")))?;
            }
            Ok(text)
        });
        *pending.result.lock().unwrap() = Some(result.clone());
        pending.ready.notify_all();
        self.in_flight.lock().unwrap().remove(&key);
        result
    }

    fn cache_lookup(&self, key: &CacheKey) -> Result<Option<String>, BackendError> {
        match &self.cache {
            None => Ok(None),
            Some(c) => c
                .load(key)
                .map(|e| e.map(|e| e.value))
                .map_err(|e| BackendError::Cache(format!("load {key}: {e}"))),
        }
    }

    fn fetch(
        &self,
        endpoint: &BackendEndpoint,
        url: &str,
        canonical: &str,
        check: &impl Fn(&str) -> Result<(), String>,
    ) -> Result<String, BackendError> {
        let text = self.with_retries(url, endpoint.max_retries, || {
            let mut req = self
                .agent
                .post(url)
                .header("Content-Type", "application/json")
                .config()
                .timeout_global(Some(endpoint.timeout))
                .build();
            if let Some(token) = &self.options.bearer_token {
                req = req.header("Authorization", format!("Bearer {token}"));
            }
            req.send(canonical.as_bytes())
        })?;
        check(&text).map_err(|reason| BackendError::Protocol {
            url: url.to_string(),
            reason,
        })?;
        Ok(text)
    }

    /// Runs `send` until it yields a 2xx body. Transport failures and 5xx
    /// statuses are retried with exponential backoff; 4xx is final.
    fn with_retries(
        &self,
        url: &str,
        max_retries: u32,
        send: impl Fn() -> Result<http_response::Response, ureq::Error>,
    ) -> Result<String, BackendError> {
        let mut last = String::new();
        for attempt in 0..=max_retries {
            if attempt > 0 {
                let delay = self.options.retry.delay(attempt - 1);
                debug!("retrying {url} in {delay:?} (attempt {attempt})");
                thread::sleep(delay);
            }
            let outcome = {
                let _slot = self.gate.acquire();
                self.network_calls.fetch_add(1, Ordering::Relaxed);
                send().and_then(|mut resp| {
                    let status = resp.status().as_u16();
                    let mut text = String::new();
                    resp.body_mut()
                        .as_reader()
                        .read_to_string(&mut text)
                        .map_err(ureq::Error::Io)?;
                    Ok((status, text))
                })
            };
            match outcome {
                Ok((status, text)) if (200..300).contains(&status) => return Ok(text),
                Ok((status, text)) if status >= 500 => {
                    last = format!("HTTP {status}: {}", truncate(&text));
                }
                Ok((status, text)) => {
                    return Err(BackendError::Protocol {
                        url: url.to_string(),
                        reason: format!("HTTP {status}: {}", truncate(&text)),
                    })
                }
                Err(e) => last = e.to_string(),
            }
        }
        Err(BackendError::Unavailable {
            url: url.to_string(),
            reason: format!("{} attempts failed, last: {last}", max_retries + 1),
        })
    }
}

mod http_response {
    pub type Response = ureq::http::Response<ureq::Body>;
}

fn truncate(s: &str) -> &str {
    match s.char_indices().nth(200) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}
