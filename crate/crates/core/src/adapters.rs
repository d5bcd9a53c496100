//! Pluggable embedder and reranker adapters.
//!
//! The built-ins (signed feature hashing, lexical overlap) are fully
//! deterministic and touch neither the network nor any model file, so the
//! default configuration runs with networking disabled. The remote variants
//! speak a small JSON-over-HTTP protocol.

use std::collections::{BTreeSet, HashMap};
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::tokenize;

/// Embedder selection, as it appears in configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum EmbedderSpec {
    HashFeature { dim: usize },
    Precomputed { dim: usize, path: String },
    Remote { dim: usize, endpoint: String },
}

impl EmbedderSpec {
    pub fn dim(&self) -> usize {
        match self {
            EmbedderSpec::HashFeature { dim }
            | EmbedderSpec::Precomputed { dim, .. }
            | EmbedderSpec::Remote { dim, .. } => *dim,
        }
    }
}

/// Reranker selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RerankerSpec {
    LexicalOverlap,
    Remote { endpoint: String },
    Disabled,
}

/// A ready-to-call embedder.
pub enum Embedder {
    HashFeature {
        dim: usize,
    },
    Precomputed {
        dim: usize,
        table: HashMap<String, Vec<f64>>,
    },
    Remote(RemoteClient),
}

impl Embedder {
    pub fn hash_feature(dim: usize) -> Self {
        Embedder::HashFeature { dim }
    }

    pub fn precomputed(dim: usize, table: HashMap<String, Vec<f64>>) -> Self {
        Embedder::Precomputed { dim, table }
    }

    pub fn dim(&self) -> usize {
        match self {
            Embedder::HashFeature { dim } | Embedder::Precomputed { dim, .. } => *dim,
            Embedder::Remote(c) => c.dim,
        }
    }

    pub fn embed(&self, text: &str) -> Result<Vec<f64>> {
        match self {
            Embedder::HashFeature { dim } => hash_embed(text, *dim),
            Embedder::Precomputed { table, dim } => {
                let v = table
                    .get(text)
                    .ok_or_else(|| Error::PrecomputedMiss(text.to_string()))?;
                check_vector(v, *dim)?;
                Ok(v.clone())
            }
            Embedder::Remote(client) => {
                let mut vs = client.embed_batch(&[text.to_string()])?;
                vs.pop()
                    .ok_or_else(|| Error::Remote("empty vector batch in response".into()))
            }
        }
    }
}

fn check_vector(v: &[f64], dim: usize) -> Result<()> {
    if v.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: v.len(),
        });
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Remote("non-finite embedding component".into()));
    }
    Ok(())
}

/// FNV-1a, fixed here so hashed buckets never move across platforms or
/// std releases.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Signed feature hashing: each token lands in bucket `h % dim` with sign
/// from one hash bit, accumulated by term frequency and L2-normalized.
pub fn hash_embed(text: &str, dim: usize) -> Result<Vec<f64>> {
    if dim == 0 {
        return Err(Error::InvalidArgument("embedder dimension is zero".into()));
    }
    let tokens = tokenize(text);
    if tokens.is_empty() {
        return Err(Error::ZeroVector);
    }
    let mut v = vec![0.0f64; dim];
    for t in &tokens {
        let h = fnv1a(t.as_bytes());
        let bucket = (h % dim as u64) as usize;
        let sign = if (h >> 63) & 1 == 1 { -1.0 } else { 1.0 };
        v[bucket] += sign;
    }
    let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        // opposing signs cancelled every bucket; fall back to unsigned counts
        for t in &tokens {
            let h = fnv1a(t.as_bytes());
            v[(h % dim as u64) as usize] += 1.0;
        }
    }
    let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in v.iter_mut() {
        *x /= norm;
    }
    Ok(v)
}

/// A ready-to-call reranker producing raw (pre-logistic) scores.
pub enum Reranker {
    LexicalOverlap,
    Remote(RemoteClient),
    Disabled,
}

impl Reranker {
    pub fn is_disabled(&self) -> bool {
        matches!(self, Reranker::Disabled)
    }

    /// Raw relevance score; `logistic(score)` is the blendable quantity.
    pub fn score(&self, query: &str, doc: &str) -> Result<f64> {
        match self {
            Reranker::LexicalOverlap => Ok(lexical_overlap_score(query, doc)),
            Reranker::Remote(client) => {
                let mut scores = client.rerank_batch(query, &[doc.to_string()])?;
                scores
                    .pop()
                    .ok_or_else(|| Error::Remote("empty score batch in response".into()))
            }
            Reranker::Disabled => Err(Error::InvalidArgument(
                "reranker is disabled".into(),
            )),
        }
    }
}

/// logit(clamp(overlap, 1e−6, 1−1e−6)) where overlap is the fraction of
/// query tokens present in the document, so logistic(score) recovers the
/// overlap fraction.
pub fn lexical_overlap_score(query: &str, doc: &str) -> f64 {
    let q: BTreeSet<String> = tokenize(query).into_iter().collect();
    if q.is_empty() {
        return logit(1e-6);
    }
    let d: BTreeSet<String> = tokenize(doc).into_iter().collect();
    let overlap = q.intersection(&d).count() as f64 / q.len() as f64;
    logit(overlap.clamp(1e-6, 1.0 - 1e-6))
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

pub fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

// ---------------------------------------------------------------------------
// Remote JSON-over-HTTP protocol
// ---------------------------------------------------------------------------

/// Wire contract: POST `{"texts": [..]}` yielding `{"vectors": [[..]..]}`
/// for embeddings, POST `{"query": .., "docs": [..]}` yielding
/// `{"scores": [..]}` for reranking. Two retries with exponential backoff;
/// credentials only ever live in process configuration.
pub struct RemoteClient {
    pub endpoint: String,
    pub dim: usize,
    pub timeout: Duration,
    pub retries: u32,
    pub backoff: Duration,
    pub bearer_token: Option<String>,
    inflight: InflightGate,
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [String],
}

#[derive(Deserialize)]
struct EmbedResponse {
    vectors: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct RerankRequest<'a> {
    query: &'a str,
    docs: &'a [String],
}

#[derive(Deserialize)]
struct RerankResponse {
    scores: Vec<f64>,
}

impl RemoteClient {
    pub fn new(endpoint: &str, dim: usize) -> Self {
        Self {
            endpoint: endpoint.to_string(),
            dim,
            timeout: Duration::from_secs(10),
            retries: 2,
            backoff: Duration::from_millis(100),
            bearer_token: None,
            inflight: InflightGate::new(4),
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn with_backoff(mut self, backoff: Duration) -> Self {
        self.backoff = backoff;
        self
    }

    pub fn with_bearer_token(mut self, token: Option<String>) -> Self {
        self.bearer_token = token;
        self
    }

    fn post(&self, body: serde_json::Value) -> Result<serde_json::Value> {
        let _slot = self.inflight.acquire();
        let mut last_err = Error::Remote("no attempts made".into());
        for attempt in 0..=self.retries {
            if attempt > 0 {
                std::thread::sleep(self.backoff * 2u32.pow(attempt - 1));
            }
            let mut req = ureq::post(&self.endpoint).timeout(self.timeout);
            if let Some(token) = &self.bearer_token {
                req = req.set("authorization", &format!("Bearer {token}"));
            }
            match req.send_json(body.clone()) {
                Ok(resp) => match resp.into_json::<serde_json::Value>() {
                    Ok(v) => return Ok(v),
                    Err(e) => last_err = Error::Remote(format!("malformed response: {e}")),
                },
                Err(ureq::Error::Status(code, resp)) => {
                    let text = resp.into_string().unwrap_or_default();
                    last_err = Error::Remote(format!("http {code}: {text}"));
                }
                Err(e) => last_err = Error::Remote(format!("transport: {e}")),
            }
        }
        Err(last_err)
    }

    pub fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vec<f64>>> {
        let body = serde_json::to_value(EmbedRequest { texts })
            .map_err(|e| Error::Remote(e.to_string()))?;
        let value = self.post(body)?;
        let parsed: EmbedResponse =
            serde_json::from_value(value).map_err(|e| Error::Remote(format!("bad payload: {e}")))?;
        if parsed.vectors.len() != texts.len() {
            return Err(Error::Remote(format!(
                "expected {} vectors, got {}",
                texts.len(),
                parsed.vectors.len()
            )));
        }
        for v in &parsed.vectors {
            check_vector(v, self.dim)?;
        }
        Ok(parsed.vectors)
    }

    pub fn rerank_batch(&self, query: &str, docs: &[String]) -> Result<Vec<f64>> {
        let body = serde_json::to_value(RerankRequest { query, docs })
            .map_err(|e| Error::Remote(e.to_string()))?;
        let value = self.post(body)?;
        let parsed: RerankResponse =
            serde_json::from_value(value).map_err(|e| Error::Remote(format!("bad payload: {e}")))?;
        if parsed.scores.len() != docs.len() {
            return Err(Error::Remote(format!(
                "expected {} scores, got {}",
                docs.len(),
                parsed.scores.len()
            )));
        }
        if parsed.scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::Remote("non-finite score in response".into()));
        }
        Ok(parsed.scores)
    }
}

/// Counting gate bounding concurrent in-flight requests.
struct InflightGate {
    state: Mutex<u32>,
    cv: Condvar,
    limit: u32,
}

struct InflightSlot<'a>(&'a InflightGate);

impl InflightGate {
    fn new(limit: u32) -> Self {
        Self {
            state: Mutex::new(0),
            cv: Condvar::new(),
            limit,
        }
    }

    fn acquire(&self) -> InflightSlot<'_> {
        let mut n = self.state.lock().unwrap();
        while *n >= self.limit {
            n = self.cv.wait(n).unwrap();
        }
        *n += 1;
        InflightSlot(self)
    }
}

impl Drop for InflightSlot<'_> {
    fn drop(&mut self) {
        let mut n = self.0.state.lock().unwrap();
        *n -= 1;
        self.0.cv.notify_one();
    }
}
