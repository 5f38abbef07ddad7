use std::thread;
use std::time::Duration;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::EmbeddingError;

/// Environment variable holding the provider bearer token.
pub const API_KEY_ENV: &str = "EMBEDDER_API_KEY";

/// Source of text embeddings.
pub trait EmbeddingProvider: Send + Sync {
    /// Name stamped on cache records and on the resulting corpus.
    fn name(&self) -> &str;

    /// One vector per input text, in input order.
    fn fetch_embeddings(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, EmbeddingError>;
}

impl<P: EmbeddingProvider + ?Sized> EmbeddingProvider for &P {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn fetch_embeddings(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, EmbeddingError> {
        (**self).fetch_embeddings(texts)
    }
}

impl<P: EmbeddingProvider + ?Sized> EmbeddingProvider for Box<P> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn fetch_embeddings(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, EmbeddingError> {
        (**self).fetch_embeddings(texts)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    /// Retries after the first attempt.
    pub max_retries: u32,
    /// Delay before the first retry; doubles on each subsequent one.
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_retries: 3,
            base_delay: Duration::from_millis(500),
        }
    }
}

impl RetryPolicy {
    pub fn delay_for(&self, retry: u32) -> Duration {
        self.base_delay * 2u32.saturating_pow(retry)
    }

    /// Runs `op`, retrying transient failures with exponential backoff.
    pub fn run<T>(
        &self,
        mut op: impl FnMut() -> Result<T, EmbeddingError>,
    ) -> Result<T, EmbeddingError> {
        let mut retry = 0;
        loop {
            match op() {
                Err(e) if e.is_transient() && retry < self.max_retries => {
                    log::warn!("embedding request failed ({e}); retry {} of {}", retry + 1, self.max_retries);
                    thread::sleep(self.delay_for(retry));
                    retry += 1;
                }
                other => return other,
            }
        }
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [&'a str],
}

#[derive(Deserialize)]
struct EmbedResponse {
    embeddings: Vec<Vec<f64>>,
}

/// Client for the JSON embedding endpoint:
/// `POST {endpoint}` with `{"texts": [...]}` answered by `{"embeddings": [[...], ...]}`.
pub struct HttpProvider {
    client: reqwest::blocking::Client,
    endpoint: String,
    name: String,
    api_key: Option<String>,
    retry: RetryPolicy,
}

impl HttpProvider {
    /// Builds a client; the bearer token is read from `EMBEDDER_API_KEY` when set.
    pub fn new(endpoint: impl Into<String>, name: impl Into<String>) -> Result<Self, EmbeddingError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(120))
            .build()
            .map_err(|e| EmbeddingError::Transport(e.to_string()))?;
        Ok(Self {
            client,
            endpoint: endpoint.into(),
            name: name.into(),
            api_key: std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty()),
            retry: RetryPolicy::default(),
        })
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn with_api_key(mut self, key: Option<String>) -> Self {
        self.api_key = key;
        self
    }

    fn attempt(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, EmbeddingError> {
        let mut request = self.client.post(&self.endpoint).json(&EmbedRequest { texts });
        if let Some(key) = &self.api_key {
            request = request.bearer_auth(key);
        }
        let response = request
            .send()
            .map_err(|e| EmbeddingError::Transport(e.to_string()))?;
        let status = response.status();
        if !status.is_success() {
            let body = response.text().unwrap_or_default();
            return Err(EmbeddingError::Http {
                status: status.as_u16(),
                body,
            });
        }
        let bytes = response
            .bytes()
            .map_err(|e| EmbeddingError::Transport(e.to_string()))?;
        let parsed: EmbedResponse = serde_json::from_slice(&bytes)
            .map_err(|e| EmbeddingError::Decode(e.to_string()))?;
        Ok(parsed.embeddings)
    }
}

impl EmbeddingProvider for HttpProvider {
    fn name(&self) -> &str {
        &self.name
    }

    fn fetch_embeddings(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, EmbeddingError> {
        if texts.is_empty() {
            return Ok(Vec::new());
        }
        let vectors = self.retry.run(|| self.attempt(texts))?;
        if vectors.len() != texts.len() {
            return Err(EmbeddingError::CountMismatch {
                expected: texts.len(),
                got: vectors.len(),
            });
        }
        Ok(vectors)
    }
}

/// Deterministic offline embedder: every lowercase alphabetic token maps to
/// a seeded Gaussian vector and a text embeds as the sum of its tokens'
/// vectors. Texts sharing vocabulary land close together, which is enough
/// structure for tests and demos.
#[derive(Debug, Clone)]
pub struct HashingProvider {
    name: String,
    dim: usize,
    seed: u64,
}

impl HashingProvider {
    pub fn new(name: impl Into<String>, dim: usize, seed: u64) -> Self {
        assert!(dim >= 2, "embedding dimension must be at least 2");
        Self {
            name: name.into(),
            dim,
            seed,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn token_vector(&self, token: &str, out: &mut [f64]) {
        let mut rng = ChaCha8Rng::seed_from_u64(fnv1a(token.as_bytes()) ^ self.seed);
        for v in out.iter_mut() {
            *v += Distribution::<f64>::sample(&StandardNormal, &mut rng);
        }
    }

    pub fn embed_one(&self, text: &str) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        let mut any = false;
        for token in text
            .split(|c: char| !c.is_alphabetic())
            .filter(|t| !t.is_empty())
        {
            self.token_vector(&token.to_lowercase(), &mut v);
            any = true;
        }
        if !any {
            self.token_vector(text, &mut v);
        }
        v
    }
}

impl EmbeddingProvider for HashingProvider {
    fn name(&self) -> &str {
        &self.name
    }

    fn fetch_embeddings(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, EmbeddingError> {
        Ok(texts.iter().map(|t| self.embed_one(t)).collect())
    }
}

/// Provider for fully cached runs; any lookup that reaches it is an error.
#[derive(Debug, Clone)]
pub struct CacheOnlyProvider {
    name: String,
}

impl CacheOnlyProvider {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into() }
    }
}

impl EmbeddingProvider for CacheOnlyProvider {
    fn name(&self) -> &str {
        &self.name
    }

    fn fetch_embeddings(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, EmbeddingError> {
        Err(EmbeddingError::CacheMiss {
            embedder: self.name.clone(),
            missing: texts.len(),
        })
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0100_0000_01b3);
    }
    hash
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::cell::Cell;

    #[test]
    fn backoff_doubles_from_base() {
        let p = RetryPolicy::default();
        assert_eq!(p.delay_for(0), Duration::from_millis(500));
        assert_eq!(p.delay_for(1), Duration::from_millis(1000));
        assert_eq!(p.delay_for(2), Duration::from_millis(2000));
    }

    #[test]
    fn retry_recovers_from_transient() {
        let p = RetryPolicy {
            max_retries: 3,
            base_delay: Duration::from_millis(1),
        };
        let calls = Cell::new(0);
        let out = p.run(|| {
            calls.set(calls.get() + 1);
            if calls.get() == 1 {
                Err(EmbeddingError::Http {
                    status: 503,
                    body: String::new(),
                })
            } else {
                Ok(7)
            }
        });
        assert_eq!(out.unwrap(), 7);
        assert_eq!(calls.get(), 2);
    }

    #[test]
    fn retry_gives_up_after_three_retries() {
        let p = RetryPolicy {
            max_retries: 3,
            base_delay: Duration::from_millis(1),
        };
        let calls = Cell::new(0);
        let out: Result<(), _> = p.run(|| {
            calls.set(calls.get() + 1);
            Err(EmbeddingError::Transport("refused".into()))
        });
        assert!(out.is_err());
        assert_eq!(calls.get(), 4);
    }

    #[test]
    fn non_retryable_status_fails_fast() {
        let p = RetryPolicy {
            max_retries: 3,
            base_delay: Duration::from_millis(1),
        };
        let calls = Cell::new(0);
        let out: Result<(), _> = p.run(|| {
            calls.set(calls.get() + 1);
            Err(EmbeddingError::Http {
                status: 400,
                body: "bad".into(),
            })
        });
        assert!(out.is_err());
        assert_eq!(calls.get(), 1);
    }

    #[test]
    fn hashing_provider_is_deterministic() {
        let p = HashingProvider::new("hash", 16, 3);
        let a = p.fetch_embeddings(&["a b", "c"]).unwrap();
        let b = p.fetch_embeddings(&["a b", "c"]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[0].len(), 16);
        let other = HashingProvider::new("hash", 16, 4).embed_one("a b");
        assert_ne!(a[0], other);
    }

    #[test]
    fn hashing_provider_single_text() {
        let p = HashingProvider::new("hash", 8, 0);
        let v = p.fetch_embeddings(&["a"]).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].len(), 8);
    }
}
