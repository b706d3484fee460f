//! Client for the remote review-embedding service.
//!
//! Wire protocol: `POST /embed` with `{"model", "texts"}` returns
//! `{"model", "dim", "vectors"}`, one row per input text in input order;
//! `GET /health` returns `{"status", "model", "dim"}`. Vectors are cached by
//! `(model, sha256(text))`, in memory and in an append-only JSON-lines file,
//! so a text is fetched from the service at most once.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Condvar, Mutex, RwLock};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{Backend, FeatureError, FeatureVector};
use crate::http::{self, HttpFailure};
use crate::util::sha256_hex;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingBackendConfig {
    pub base_url: String,
    pub model: String,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_timeout_s")]
    pub timeout_s: f64,
    #[serde(default)]
    pub cache_path: Option<PathBuf>,
    /// Concurrent requests allowed across threads sharing one client.
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
}

fn default_batch_size() -> usize {
    32
}
fn default_timeout_s() -> f64 {
    60.0
}
fn default_in_flight() -> usize {
    2
}

impl EmbeddingBackendConfig {
    pub fn new(base_url: impl Into<String>, model: impl Into<String>) -> Self {
        EmbeddingBackendConfig {
            base_url: base_url.into(),
            model: model.into(),
            batch_size: default_batch_size(),
            timeout_s: default_timeout_s(),
            cache_path: None,
            max_in_flight: default_in_flight(),
        }
    }

    pub fn validate(&self) -> Result<(), FeatureError> {
        if self.batch_size == 0 {
            return Err(FeatureError::Config("embedding batch_size must be >= 1".into()));
        }
        if self.timeout_s.is_nan() || self.timeout_s <= 0.0 {
            return Err(FeatureError::Config("embedding timeout_s must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbedRequest {
    pub model: String,
    pub texts: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbedResponse {
    pub model: String,
    pub dim: usize,
    pub vectors: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HealthResponse {
    pub status: String,
    pub model: String,
    pub dim: usize,
}

/// Carries embedding requests to a service.
pub trait EmbeddingTransport: Send + Sync {
    fn embed(&self, request: &EmbedRequest) -> Result<EmbedResponse, FeatureError>;
    fn health(&self) -> Result<HealthResponse, FeatureError>;
}

pub struct HttpEmbeddingTransport {
    base_url: String,
    agent: ureq::Agent,
}

impl HttpEmbeddingTransport {
    pub fn new(base_url: &str, timeout: Duration) -> Self {
        HttpEmbeddingTransport { base_url: base_url.trim_end_matches('/').to_owned(), agent: http::agent(timeout) }
    }

    fn decode<T: for<'de> Deserialize<'de>>(result: Result<(u16, String), HttpFailure>) -> Result<T, FeatureError> {
        match result {
            Err(HttpFailure::Timeout) => Err(FeatureError::Timeout),
            Err(HttpFailure::Unreachable(msg)) => Err(FeatureError::Transport(msg)),
            Ok((200, body)) => serde_json::from_str(&body).map_err(|e| FeatureError::BadResponse(e.to_string())),
            Ok((status, body)) => Err(FeatureError::ServiceStatus { status, body }),
        }
    }
}

impl EmbeddingTransport for HttpEmbeddingTransport {
    fn embed(&self, request: &EmbedRequest) -> Result<EmbedResponse, FeatureError> {
        Self::decode(http::post_json(&self.agent, &format!("{}/embed", self.base_url), None, request))
    }

    fn health(&self) -> Result<HealthResponse, FeatureError> {
        Self::decode(http::get(&self.agent, &format!("{}/health", self.base_url)))
    }
}

/// One record of the on-disk cache.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CacheRecord {
    pub hash: String,
    pub model: String,
    pub dim: usize,
    pub vector: Vec<f64>,
}

type CacheKey = (String, String);

struct EmbeddingCache {
    entries: RwLock<HashMap<CacheKey, Arc<Vec<f64>>>>,
    file: Option<Mutex<File>>,
}

impl EmbeddingCache {
    fn open(path: Option<&Path>) -> Result<Self, FeatureError> {
        let mut entries = HashMap::new();
        let file = match path {
            None => None,
            Some(path) => {
                let io_err = |source| FeatureError::Cache { path: path.to_owned(), source };
                if path.exists() {
                    let reader = BufReader::new(File::open(path).map_err(io_err)?);
                    for line in reader.lines() {
                        let line = line.map_err(io_err)?;
                        match serde_json::from_str::<CacheRecord>(&line) {
                            Ok(rec) if rec.vector.len() == rec.dim => {
                                entries.insert((rec.model, rec.hash), Arc::new(rec.vector));
                            }
                            // an interrupted append leaves a torn last line
                            _ => log::warn!("{}: skipping unreadable cache line", path.display()),
                        }
                    }
                }
                if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                    std::fs::create_dir_all(parent).map_err(io_err)?;
                }
                Some(Mutex::new(OpenOptions::new().create(true).append(true).open(path).map_err(io_err)?))
            }
        };
        Ok(EmbeddingCache { entries: RwLock::new(entries), file })
    }

    fn get(&self, key: &CacheKey) -> Option<Arc<Vec<f64>>> {
        self.entries.read().unwrap().get(key).cloned()
    }

    fn dim_for(&self, model: &str) -> Option<usize> {
        self.entries.read().unwrap().iter().find(|((m, _), _)| m == model).map(|(_, v)| v.len())
    }

    fn insert(&self, records: Vec<CacheRecord>, path: Option<&Path>) -> Result<(), FeatureError> {
        if let (Some(file), Some(path)) = (&self.file, path) {
            let mut buf = Vec::new();
            for rec in &records {
                serde_json::to_writer(&mut buf, rec).expect("cache record serializes");
                buf.push(b'\n');
            }
            let mut f = file.lock().unwrap();
            f.write_all(&buf)
                .and_then(|_| f.flush())
                .map_err(|source| FeatureError::Cache { path: path.to_owned(), source })?;
        }
        let mut entries = self.entries.write().unwrap();
        for rec in records {
            entries.insert((rec.model, rec.hash), Arc::new(rec.vector));
        }
        Ok(())
    }
}

/// Counting semaphore bounding concurrent service requests.
struct InFlight {
    limit: usize,
    active: Mutex<usize>,
    freed: Condvar,
}

impl InFlight {
    fn acquire(&self) -> InFlightGuard<'_> {
        let mut active = self.active.lock().unwrap();
        while *active >= self.limit {
            active = self.freed.wait(active).unwrap();
        }
        *active += 1;
        InFlightGuard(self)
    }
}

struct InFlightGuard<'a>(&'a InFlight);

impl Drop for InFlightGuard<'_> {
    fn drop(&mut self) {
        *self.0.active.lock().unwrap() -= 1;
        self.0.freed.notify_one();
    }
}

/// Caching embedding client. Safe to share across threads.
pub struct EmbeddingClient {
    config: EmbeddingBackendConfig,
    transport: Box<dyn EmbeddingTransport>,
    cache: EmbeddingCache,
    dim: Mutex<Option<usize>>,
    in_flight: InFlight,
    network_calls: AtomicUsize,
}

impl std::fmt::Debug for EmbeddingClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EmbeddingClient").field("config", &self.config).finish_non_exhaustive()
    }
}

impl EmbeddingClient {
    /// Client speaking HTTP to `config.base_url`.
    pub fn new(config: EmbeddingBackendConfig) -> Result<Self, FeatureError> {
        let transport =
            HttpEmbeddingTransport::new(&config.base_url, Duration::from_secs_f64(config.timeout_s.max(1e-3)));
        Self::with_transport(config, Box::new(transport))
    }

    pub fn with_transport(
        config: EmbeddingBackendConfig,
        transport: Box<dyn EmbeddingTransport>,
    ) -> Result<Self, FeatureError> {
        config.validate()?;
        let cache = EmbeddingCache::open(config.cache_path.as_deref())?;
        let dim = cache.dim_for(&config.model);
        let in_flight = InFlight { limit: config.max_in_flight.max(1), active: Mutex::new(0), freed: Condvar::new() };
        Ok(EmbeddingClient {
            config,
            transport,
            cache,
            dim: Mutex::new(dim),
            in_flight,
            network_calls: AtomicUsize::new(0),
        })
    }

    pub fn config(&self) -> &EmbeddingBackendConfig {
        &self.config
    }

    /// Vector dimension, once known from the cache or a first response.
    pub fn dim(&self) -> Option<usize> {
        *self.dim.lock().unwrap()
    }

    /// Number of `/embed` requests sent so far.
    pub fn network_calls(&self) -> usize {
        self.network_calls.load(Ordering::SeqCst)
    }

    pub fn health(&self) -> Result<HealthResponse, FeatureError> {
        self.transport.health()
    }

    /// Embeds `texts`, returning one vector per text in order. Texts already
    /// cached (including duplicates within this call) never reach the service.
    pub fn embed<S: AsRef<str>>(&self, texts: &[S]) -> Result<Vec<FeatureVector>, FeatureError> {
        let model = &self.config.model;
        let keys: Vec<CacheKey> = texts.iter().map(|t| (model.clone(), sha256_hex(t.as_ref().as_bytes()))).collect();

        let mut missing: Vec<usize> = Vec::new();
        let mut queued = std::collections::HashSet::new();
        for (i, key) in keys.iter().enumerate() {
            if self.cache.get(key).is_none() && queued.insert(&key.1) {
                missing.push(i);
            }
        }

        for chunk in missing.chunks(self.config.batch_size) {
            let request = EmbedRequest {
                model: model.clone(),
                texts: chunk.iter().map(|&i| texts[i].as_ref().to_owned()).collect(),
            };
            let response = {
                let _slot = self.in_flight.acquire();
                self.network_calls.fetch_add(1, Ordering::SeqCst);
                self.transport.embed(&request)?
            };
            self.check_response(&request, &response)?;
            let records = chunk
                .iter()
                .zip(response.vectors)
                .map(|(&i, vector)| CacheRecord {
                    hash: keys[i].1.clone(),
                    model: model.clone(),
                    dim: response.dim,
                    vector,
                })
                .collect();
            self.cache.insert(records, self.config.cache_path.as_deref())?;
        }

        keys.iter()
            .map(|key| {
                let v = self
                    .cache
                    .get(key)
                    .ok_or_else(|| FeatureError::BadResponse("vector missing after fetch".into()))?;
                Ok(FeatureVector::new(v.as_ref().clone(), Backend::Embedding))
            })
            .collect()
    }

    fn check_response(&self, request: &EmbedRequest, response: &EmbedResponse) -> Result<(), FeatureError> {
        if response.vectors.len() != request.texts.len() {
            return Err(FeatureError::CountMismatch { expected: request.texts.len(), got: response.vectors.len() });
        }
        if let Some(bad) = response.vectors.iter().find(|v| v.len() != response.dim) {
            return Err(FeatureError::DimensionMismatch { expected: response.dim, got: bad.len() });
        }
        if response.vectors.iter().flatten().any(|x| !x.is_finite()) {
            return Err(FeatureError::BadResponse("non-finite embedding component".into()));
        }
        let mut dim = self.dim.lock().unwrap();
        match *dim {
            Some(expected) if expected != response.dim => {
                Err(FeatureError::DimensionMismatch { expected, got: response.dim })
            }
            _ => {
                *dim = Some(response.dim);
                Ok(())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testing::{StubResponse, StubServer};

    /// Deterministic per-text vectors; counts calls and can switch dimension.
    struct FakeService {
        dim_after_first: Option<usize>,
        calls: AtomicUsize,
        dim: usize,
    }

    fn vector_for(text: &str, dim: usize) -> Vec<f64> {
        let h = sha256_hex(text.as_bytes());
        let seed = u64::from_str_radix(&h[..12], 16).unwrap() as f64;
        (0..dim).map(|j| ((seed + j as f64) * 0.618).sin()).collect()
    }

    impl EmbeddingTransport for FakeService {
        fn embed(&self, request: &EmbedRequest) -> Result<EmbedResponse, FeatureError> {
            let call = self.calls.fetch_add(1, Ordering::SeqCst);
            let dim = match (call, self.dim_after_first) {
                (c, Some(d)) if c > 0 => d,
                _ => self.dim,
            };
            Ok(EmbedResponse {
                model: request.model.clone(),
                dim,
                vectors: request.texts.iter().map(|t| vector_for(t, dim)).collect(),
            })
        }
        fn health(&self) -> Result<HealthResponse, FeatureError> {
            Ok(HealthResponse { status: "ok".into(), model: "m".into(), dim: self.dim })
        }
    }

    fn fake(dim_after_first: Option<usize>) -> Box<FakeService> {
        Box::new(FakeService { dim_after_first, calls: AtomicUsize::new(0), dim: 768 })
    }

    #[test]
    fn three_texts_three_vectors() {
        let client = EmbeddingClient::with_transport(EmbeddingBackendConfig::new("x", "m"), fake(None)).unwrap();
        let out = client.embed(&["good", "bad", "fine"]).unwrap();
        assert_eq!(out.len(), 3);
        assert!(out.iter().all(|v| v.dim() == 768 && v.backend == Backend::Embedding));
        assert_eq!(out[1].values, vector_for("bad", 768));
        assert_eq!(client.dim(), Some(768));
    }

    #[test]
    fn repeated_text_is_a_cache_hit() {
        let client = EmbeddingClient::with_transport(EmbeddingBackendConfig::new("x", "m"), fake(None)).unwrap();
        let first = client.embed(&["same", "same"]).unwrap();
        assert_eq!(client.network_calls(), 1);
        assert_eq!(first[0], first[1]);
        client.embed(&["same"]).unwrap();
        assert_eq!(client.network_calls(), 1);
    }

    #[test]
    fn batches_are_chunked() {
        let mut cfg = EmbeddingBackendConfig::new("x", "m");
        cfg.batch_size = 2;
        let client = EmbeddingClient::with_transport(cfg, fake(None)).unwrap();
        let texts: Vec<String> = (0..5).map(|i| format!("t{i}")).collect();
        let out = client.embed(&texts).unwrap();
        assert_eq!(client.network_calls(), 3);
        for (t, v) in texts.iter().zip(&out) {
            assert_eq!(v.values, vector_for(t, 768));
        }
    }

    #[test]
    fn dimension_change_is_an_error() {
        let client = EmbeddingClient::with_transport(EmbeddingBackendConfig::new("x", "m"), fake(Some(512))).unwrap();
        client.embed(&["a"]).unwrap();
        assert!(matches!(client.embed(&["b"]), Err(FeatureError::DimensionMismatch { expected: 768, got: 512 })));
    }

    #[test]
    fn cache_file_round_trip_is_bit_identical() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = EmbeddingBackendConfig::new("x", "m");
        cfg.cache_path = Some(dir.path().join("cache").join("emb.jsonl"));
        let texts = ["alpha", "beta", "gamma"];
        let first = EmbeddingClient::with_transport(cfg.clone(), fake(None)).unwrap().embed(&texts).unwrap();

        let reloaded = EmbeddingClient::with_transport(cfg, fake(None)).unwrap();
        assert_eq!(reloaded.dim(), Some(768));
        let second = reloaded.embed(&texts).unwrap();
        assert_eq!(reloaded.network_calls(), 0);
        for (a, b) in first.iter().zip(&second) {
            let bits = |v: &FeatureVector| v.values.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(a), bits(b));
        }
    }

    #[test]
    fn torn_cache_line_is_skipped() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("emb.jsonl");
        let rec = CacheRecord { hash: sha256_hex(b"a"), model: "m".into(), dim: 2, vector: vec![0.5, 0.25] };
        std::fs::write(&path, format!("{}\n{{\"hash\":\"trunc", serde_json::to_string(&rec).unwrap())).unwrap();
        let mut cfg = EmbeddingBackendConfig::new("x", "m");
        cfg.cache_path = Some(path);
        let client = EmbeddingClient::with_transport(cfg, fake(None)).unwrap();
        assert_eq!(client.embed(&["a"]).unwrap()[0].values, vec![0.5, 0.25]);
        assert_eq!(client.network_calls(), 0);
    }

    #[test]
    fn zero_batch_size_rejected() {
        let mut cfg = EmbeddingBackendConfig::new("x", "m");
        cfg.batch_size = 0;
        assert!(matches!(EmbeddingClient::with_transport(cfg, fake(None)), Err(FeatureError::Config(_))));
    }

    #[test]
    fn http_wire_format() {
        let server = StubServer::start(|req| match (req.method.as_str(), req.path.as_str()) {
            ("POST", "/embed") => {
                let body: EmbedRequest = serde_json::from_str(&req.body).unwrap();
                let vectors: Vec<Vec<f64>> = body.texts.iter().map(|t| vec![t.len() as f64, 1.0, -1.0]).collect();
                StubResponse::json(
                    200,
                    serde_json::json!({"model": body.model, "dim": 3, "vectors": vectors}).to_string(),
                )
            }
            ("GET", "/health") => StubResponse::json(200, r#"{"status":"ok","model":"urslm-roberta","dim":3}"#),
            _ => StubResponse::json(404, "{}"),
        });
        let client =
            EmbeddingClient::new(EmbeddingBackendConfig::new(format!("{}/", server.base_url), "urslm-roberta"))
                .unwrap();
        assert_eq!(client.health().unwrap().dim, 3);
        let out = client.embed(&["ab", "abcd"]).unwrap();
        assert_eq!(out[0].values, vec![2.0, 1.0, -1.0]);
        assert_eq!(out[1].values, vec![4.0, 1.0, -1.0]);
        let sent: serde_json::Value = serde_json::from_str(&server.requests()[1].body).unwrap();
        assert_eq!(sent, serde_json::json!({"model": "urslm-roberta", "texts": ["ab", "abcd"]}));
    }

    #[test]
    fn http_error_status() {
        let server = StubServer::start(|_| StubResponse::json(413, r#"{"error":"batch too large"}"#));
        let client = EmbeddingClient::new(EmbeddingBackendConfig::new(server.base_url.clone(), "m")).unwrap();
        match client.embed(&["x"]) {
            Err(FeatureError::ServiceStatus { status: 413, body }) => assert!(body.contains("too large")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn http_timeout() {
        let server = StubServer::start(|_| {
            std::thread::sleep(Duration::from_millis(800));
            StubResponse::json(200, "{}")
        });
        let mut cfg = EmbeddingBackendConfig::new(server.base_url.clone(), "m");
        cfg.timeout_s = 0.1;
        let client = EmbeddingClient::new(cfg).unwrap();
        assert!(matches!(client.embed(&["x"]), Err(FeatureError::Timeout)));
    }

    #[test]
    fn unreachable_service() {
        let client = EmbeddingClient::new(EmbeddingBackendConfig::new("http://127.0.0.1:1", "m")).unwrap();
        assert!(matches!(client.embed(&["x"]), Err(FeatureError::Transport(_))));
    }
}
