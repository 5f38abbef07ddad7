//! Document embeddings from a remote service, backed by a JSONL cache.

mod cache;
mod provider;

use std::path::{Path, PathBuf};
use std::sync::Mutex;

pub use cache::{write_cache, CacheRecord, EmbeddingCache};
pub use provider::{
    CacheOnlyProvider, EmbeddingProvider, HashingProvider, HttpProvider, RetryPolicy, API_KEY_ENV,
};

use crate::corpus::Corpus;

#[derive(Debug, thiserror::Error)]
pub enum EmbeddingError {
    #[error("embedding service returned HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("embedding request failed: {0}")]
    Transport(String),
    #[error("cannot decode embedding response: {0}")]
    Decode(String),
    #[error("count mismatch: sent {expected} texts, received {got} embeddings")]
    CountMismatch { expected: usize, got: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("embedding dimension {0} is below the minimum of 2")]
    DimensionTooSmall(usize),
    #[error("vector for `{id}` has a non-finite component")]
    NonFinite { id: String },
    #[error("{missing} document(s) missing from the `{embedder}` cache and no provider configured")]
    CacheMiss { embedder: String, missing: usize },
    #[error("cache {path}: {source}")]
    CacheIo {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cache {path}:{line}: {reason}")]
    CacheParse {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("{vectors} vectors for {documents} documents")]
    Misaligned { documents: usize, vectors: usize },
}

impl EmbeddingError {
    fn cache_io(path: &Path, source: std::io::Error) -> Self {
        Self::CacheIo {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Failures worth retrying: transport errors, 408, 429 and 5xx.
    pub fn is_transient(&self) -> bool {
        match self {
            Self::Transport(_) => true,
            Self::Http { status, .. } => matches!(status, 408 | 429 | 500..=599),
            _ => false,
        }
    }
}

/// A corpus together with one embedding vector per document.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedCorpus {
    corpus: Corpus,
    vectors: Vec<Vec<f64>>,
    embedder_name: String,
    /// Always `false` for provider output: vectors are stored as returned.
    pub normalized: bool,
}

impl EmbeddedCorpus {
    /// Checks alignment, a shared dimension of at least 2 and finiteness.
    pub fn new(
        corpus: Corpus,
        vectors: Vec<Vec<f64>>,
        embedder_name: impl Into<String>,
    ) -> Result<Self, EmbeddingError> {
        if vectors.len() != corpus.len() {
            return Err(EmbeddingError::Misaligned {
                documents: corpus.len(),
                vectors: vectors.len(),
            });
        }
        if let Some(first) = vectors.first() {
            let dim = first.len();
            if dim < 2 {
                return Err(EmbeddingError::DimensionTooSmall(dim));
            }
            for (doc, v) in corpus.documents().iter().zip(&vectors) {
                if v.len() != dim {
                    return Err(EmbeddingError::DimensionMismatch {
                        expected: dim,
                        got: v.len(),
                    });
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(EmbeddingError::NonFinite { id: doc.id.clone() });
                }
            }
        }
        Ok(Self {
            corpus,
            vectors,
            embedder_name: embedder_name.into(),
            normalized: false,
        })
    }

    pub fn corpus(&self) -> &Corpus {
        &self.corpus
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn embedder_name(&self) -> &str {
        &self.embedder_name
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Embedding dimension; 0 for an empty corpus.
    pub fn dimension(&self) -> usize {
        self.vectors.first().map_or(0, Vec::len)
    }
}

#[derive(Debug, Clone)]
pub struct EmbedOptions {
    pub batch_size: usize,
    pub max_concurrent_batches: usize,
    pub cache_path: Option<PathBuf>,
}

impl Default for EmbedOptions {
    fn default() -> Self {
        Self {
            batch_size: 64,
            max_concurrent_batches: 4,
            cache_path: None,
        }
    }
}

type BatchResult = Result<Vec<Vec<f64>>, EmbeddingError>;

/// Embeds every document, consulting the cache first.
///
/// Cache misses are fetched in batches of `batch_size`, with up to
/// `max_concurrent_batches` requests in flight. Completed batches are appended
/// to the cache in batch order, so a failure leaves every earlier batch
/// cached.
pub fn embed_corpus<P: EmbeddingProvider + ?Sized>(
    corpus: &Corpus,
    provider: &P,
    options: &EmbedOptions,
) -> Result<EmbeddedCorpus, EmbeddingError> {
    let name = provider.name().to_string();
    let mut cache = match &options.cache_path {
        Some(path) => Some(EmbeddingCache::open(path, &name)?),
        None => None,
    };

    let mut vectors: Vec<Option<Vec<f64>>> = corpus
        .ids()
        .map(|id| cache.as_ref().and_then(|c| c.get(id).cloned()))
        .collect();
    let misses: Vec<usize> = (0..vectors.len()).filter(|&i| vectors[i].is_none()).collect();
    let mut dim = cache.as_ref().and_then(EmbeddingCache::dimension);

    let batch_size = options.batch_size.max(1);
    let batches: Vec<&[usize]> = misses.chunks(batch_size).collect();
    let docs = corpus.documents();

    for wave in batches.chunks(options.max_concurrent_batches.max(1)) {
        let results: Vec<Mutex<Option<BatchResult>>> = wave.iter().map(|_| Mutex::new(None)).collect();
        std::thread::scope(|scope| {
            for (batch, slot) in wave.iter().zip(&results) {
                scope.spawn(move || {
                    let texts: Vec<&str> = batch.iter().map(|&i| docs[i].text.as_str()).collect();
                    let out = provider.fetch_embeddings(&texts).and_then(|v| {
                        if v.len() == texts.len() {
                            Ok(v)
                        } else {
                            Err(EmbeddingError::CountMismatch {
                                expected: texts.len(),
                                got: v.len(),
                            })
                        }
                    });
                    *slot.lock().unwrap_or_else(|p| p.into_inner()) = Some(out);
                });
            }
        });

        for (batch, slot) in wave.iter().zip(results) {
            let fetched = slot
                .into_inner()
                .unwrap_or_else(|p| p.into_inner())
                .expect("batch thread finished")?;
            for v in &fetched {
                match dim {
                    Some(d) if d != v.len() => {
                        return Err(EmbeddingError::DimensionMismatch {
                            expected: d,
                            got: v.len(),
                        })
                    }
                    _ => dim = Some(v.len()),
                }
            }
            if let Some(cache) = cache.as_mut() {
                cache.append(
                    batch
                        .iter()
                        .zip(&fetched)
                        .map(|(&i, v)| (docs[i].id.as_str(), v.as_slice())),
                )?;
            }
            for (&i, v) in batch.iter().zip(fetched) {
                vectors[i] = Some(v);
            }
        }
    }

    let vectors = vectors
        .into_iter()
        .map(|v| v.expect("every document embedded"))
        .collect();
    EmbeddedCorpus::new(corpus.clone(), vectors, name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    struct Counting<P> {
        inner: P,
        calls: AtomicUsize,
        sizes: Mutex<Vec<usize>>,
    }

    impl<P: EmbeddingProvider> Counting<P> {
        fn new(inner: P) -> Self {
            Self {
                inner,
                calls: AtomicUsize::new(0),
                sizes: Mutex::new(Vec::new()),
            }
        }
    }

    impl<P: EmbeddingProvider> EmbeddingProvider for Counting<P> {
        fn name(&self) -> &str {
            self.inner.name()
        }
        fn fetch_embeddings(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, EmbeddingError> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            self.sizes.lock().unwrap().push(texts.len());
            self.inner.fetch_embeddings(texts)
        }
    }

    fn corpus(n: usize) -> Corpus {
        Corpus::from_texts((0..n).map(|i| format!("document number {i}"))).unwrap()
    }

    #[test]
    fn batches_follow_ceiling_rule() {
        let provider = Counting::new(HashingProvider::new("h", 8, 1));
        let opts = EmbedOptions {
            batch_size: 64,
            ..Default::default()
        };
        let ec = embed_corpus(&corpus(130), &provider, &opts).unwrap();
        assert_eq!(ec.len(), 130);
        assert_eq!(provider.calls.load(Ordering::SeqCst), 3);
        let mut sizes = provider.sizes.lock().unwrap().clone();
        sizes.sort_unstable();
        assert_eq!(sizes, [2, 64, 64]);
    }

    #[test]
    fn empty_corpus_makes_no_calls() {
        let provider = Counting::new(HashingProvider::new("h", 8, 1));
        let ec = embed_corpus(&corpus(0), &provider, &EmbedOptions::default()).unwrap();
        assert!(ec.is_empty());
        assert_eq!(provider.calls.load(Ordering::SeqCst), 0);
    }

    #[test]
    fn warm_cache_needs_no_provider() {
        let dir = tempfile::tempdir().unwrap();
        let opts = EmbedOptions {
            batch_size: 7,
            cache_path: Some(dir.path().join("cache.jsonl")),
            ..Default::default()
        };
        let c = corpus(20);
        let cold = embed_corpus(&c, &HashingProvider::new("h", 8, 1), &opts).unwrap();
        let counting = Counting::new(CacheOnlyProvider::new("h"));
        let warm = embed_corpus(&c, &counting, &opts).unwrap();
        assert_eq!(counting.calls.load(Ordering::SeqCst), 0);
        for (a, b) in cold.vectors().iter().zip(warm.vectors()) {
            let a: Vec<u64> = a.iter().map(|x| x.to_bits()).collect();
            let b: Vec<u64> = b.iter().map(|x| x.to_bits()).collect();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn partial_cache_fetches_only_misses() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.jsonl");
        let c = corpus(10);
        let provider = HashingProvider::new("h", 8, 1);
        let first: Vec<&str> = c.ids().take(6).collect();
        let vecs: Vec<Vec<f64>> = c.texts().take(6).map(|t| provider.embed_one(t)).collect();
        write_cache(&path, "h", first.iter().copied().zip(vecs.iter().map(Vec::as_slice))).unwrap();

        let counting = Counting::new(provider);
        let opts = EmbedOptions {
            batch_size: 64,
            cache_path: Some(path.clone()),
            ..Default::default()
        };
        embed_corpus(&c, &counting, &opts).unwrap();
        assert_eq!(*counting.sizes.lock().unwrap(), [4]);
        assert_eq!(EmbeddingCache::open(&path, "h").unwrap().len(), 10);
    }

    #[test]
    fn cache_provider_dimension_mismatch_aborts() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.jsonl");
        write_cache(&path, "h", [("000000", &[1.0, 2.0, 3.0][..])]).unwrap();
        let opts = EmbedOptions {
            cache_path: Some(path),
            ..Default::default()
        };
        let err = embed_corpus(&corpus(3), &HashingProvider::new("h", 8, 1), &opts).unwrap_err();
        assert!(matches!(err, EmbeddingError::DimensionMismatch { expected: 3, got: 8 }));
    }

    struct Flaky {
        calls: AtomicUsize,
    }

    impl EmbeddingProvider for Flaky {
        fn name(&self) -> &str {
            "flaky"
        }
        fn fetch_embeddings(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, EmbeddingError> {
            if self.calls.fetch_add(1, Ordering::SeqCst) >= 2 {
                return Err(EmbeddingError::Http {
                    status: 400,
                    body: "boom".into(),
                });
            }
            Ok(texts.iter().map(|_| vec![1.0, 2.0]).collect())
        }
    }

    #[test]
    fn failure_keeps_partial_cache() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.jsonl");
        let opts = EmbedOptions {
            batch_size: 5,
            max_concurrent_batches: 1,
            cache_path: Some(path.clone()),
        };
        let provider = Flaky {
            calls: AtomicUsize::new(0),
        };
        assert!(embed_corpus(&corpus(20), &provider, &opts).is_err());
        assert_eq!(EmbeddingCache::open(&path, "flaky").unwrap().len(), 10);
    }

    #[test]
    fn count_mismatch_is_reported() {
        struct Short;
        impl EmbeddingProvider for Short {
            fn name(&self) -> &str {
                "short"
            }
            fn fetch_embeddings(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, EmbeddingError> {
                Ok(vec![vec![0.0, 1.0]; texts.len() - 1])
            }
        }
        let err = embed_corpus(&corpus(3), &Short, &EmbedOptions::default()).unwrap_err();
        assert!(matches!(err, EmbeddingError::CountMismatch { expected: 3, got: 2 }));
    }

    #[test]
    fn rejects_non_finite_and_tiny_vectors() {
        let c = corpus(1);
        assert!(matches!(
            EmbeddedCorpus::new(c.clone(), vec![vec![f64::NAN, 1.0]], "x"),
            Err(EmbeddingError::NonFinite { .. })
        ));
        assert!(matches!(
            EmbeddedCorpus::new(c, vec![vec![1.0]], "x"),
            Err(EmbeddingError::DimensionTooSmall(1))
        ));
    }
}
