use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::EmbeddingError;

/// One line of the cache file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheRecord {
    pub id: String,
    pub embedder: String,
    pub vector: Vec<f64>,
}

/// Append-only JSONL embedding cache keyed by `(embedder, id)`.
#[derive(Debug)]
pub struct EmbeddingCache {
    path: PathBuf,
    embedder: String,
    entries: HashMap<String, Vec<f64>>,
}

impl EmbeddingCache {
    /// Reads every record of `path` stamped with `embedder`. A missing file
    /// is an empty cache. Later records override earlier ones.
    pub fn open(path: &Path, embedder: &str) -> Result<Self, EmbeddingError> {
        let mut entries = HashMap::new();
        match File::open(path) {
            Ok(file) => {
                for (i, line) in BufReader::new(file).lines().enumerate() {
                    let line = line.map_err(|e| EmbeddingError::cache_io(path, e))?;
                    if line.trim().is_empty() {
                        continue;
                    }
                    let record: CacheRecord =
                        serde_json::from_str(&line).map_err(|e| EmbeddingError::CacheParse {
                            path: path.to_path_buf(),
                            line: i + 1,
                            reason: e.to_string(),
                        })?;
                    if record.embedder == embedder {
                        entries.insert(record.id, record.vector);
                    }
                }
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
            Err(e) => return Err(EmbeddingError::cache_io(path, e)),
        }
        Ok(Self {
            path: path.to_path_buf(),
            embedder: embedder.to_string(),
            entries,
        })
    }

    pub fn get(&self, id: &str) -> Option<&Vec<f64>> {
        self.entries.get(id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Dimension shared by the cached vectors, if any are present.
    pub fn dimension(&self) -> Option<usize> {
        self.entries.values().next().map(Vec::len)
    }

    /// Appends records to the file and to the in-memory view.
    pub fn append<'a, I>(&mut self, items: I) -> Result<(), EmbeddingError>
    where
        I: IntoIterator<Item = (&'a str, &'a [f64])>,
    {
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)
            .map_err(|e| EmbeddingError::cache_io(&self.path, e))?;
        let mut out = BufWriter::new(file);
        for (id, vector) in items {
            let record = CacheRecord {
                id: id.to_string(),
                embedder: self.embedder.clone(),
                vector: vector.to_vec(),
            };
            serde_json::to_writer(&mut out, &record)
                .map_err(|e| EmbeddingError::cache_io(&self.path, e.into()))?;
            out.write_all(b"\n")
                .map_err(|e| EmbeddingError::cache_io(&self.path, e))?;
            self.entries.insert(record.id, record.vector);
        }
        out.flush().map_err(|e| EmbeddingError::cache_io(&self.path, e))
    }
}

/// Writes a complete cache file (overwriting) for an embedder.
pub fn write_cache<'a, I>(path: &Path, embedder: &str, items: I) -> Result<(), EmbeddingError>
where
    I: IntoIterator<Item = (&'a str, &'a [f64])>,
{
    if path.exists() {
        std::fs::remove_file(path).map_err(|e| EmbeddingError::cache_io(path, e))?;
    }
    let mut cache = EmbeddingCache::open(path, embedder)?;
    cache.append(items)
}
