//! Turning `--embedder-url` / `--embedder-name` / `--cache` into a provider.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use anyhow::Context;
use cartograph::corpus::Corpus;
use cartograph::embedding::{
    embed_corpus, CacheOnlyProvider, CacheRecord, EmbedOptions, EmbeddedCorpus, EmbeddingProvider, HashingProvider,
    HttpProvider,
};

use crate::UsageError;

pub const HASH_SCHEME: &str = "hash://";

/// Parses `hash://<dim>` or `hash://<dim>?seed=<n>`.
pub fn parse_hash_url(url: &str) -> Result<(usize, u64), UsageError> {
    let bad = || UsageError(format!("expected hash://<dim>[?seed=<n>], got {url:?}"));
    let rest = url.strip_prefix(HASH_SCHEME).ok_or_else(bad)?;
    let (dim, query) = match rest.split_once('?') {
        Some((d, q)) => (d, Some(q)),
        None => (rest, None),
    };
    let dim: usize = dim.trim_end_matches('/').parse().map_err(|_| bad())?;
    let seed = match query {
        None => 0,
        Some(q) => q.strip_prefix("seed=").and_then(|s| s.parse().ok()).ok_or_else(bad)?,
    };
    Ok((dim, seed))
}

/// A provider for `url`. `hash://` selects the offline hashing embedder and
/// `http://`/`https://` the JSON endpoint client. Without a URL only the
/// cache can answer, which requires an explicit embedder name.
pub fn build_provider(url: Option<&str>, name: Option<&str>) -> Result<Box<dyn EmbeddingProvider>, anyhow::Error> {
    match url {
        Some(url) if url.starts_with(HASH_SCHEME) => {
            let (dim, seed) = parse_hash_url(url)?;
            Ok(Box::new(HashingProvider::new(name.unwrap_or(url), dim, seed)))
        }
        Some(url) if url.starts_with("http://") || url.starts_with("https://") => {
            Ok(Box::new(HttpProvider::new(url, name.unwrap_or(url))?))
        }
        Some(url) => Err(UsageError(format!("unsupported embedder URL {url:?}")).into()),
        None => match name {
            Some(name) => Ok(Box::new(CacheOnlyProvider::new(name))),
            None => Err(UsageError("pass --embedder-url, or --embedder-name with --cache".into()).into()),
        },
    }
}

/// Embedder names stamped on the records of a cache file, sorted.
pub fn cache_embedders(path: &Path) -> anyhow::Result<BTreeSet<String>> {
    let file = File::open(path).with_context(|| format!("opening cache {}", path.display()))?;
    let mut names = BTreeSet::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.with_context(|| format!("reading cache {}", path.display()))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: CacheRecord = serde_json::from_str(&line)
            .with_context(|| format!("cache {} line {}", path.display(), i + 1))?;
        names.insert(record.embedder);
    }
    Ok(names)
}

/// The single embedder a cache file was written by.
pub fn sole_cache_embedder(path: &Path) -> anyhow::Result<String> {
    let names = cache_embedders(path)?;
    match names.len() {
        1 => Ok(names.into_iter().next().expect("one name")),
        0 => Err(UsageError(format!("cache {} holds no records", path.display())).into()),
        _ => Err(UsageError(format!(
            "cache {} mixes embedders ({}); split it into one file per embedder",
            path.display(),
            names.into_iter().collect::<Vec<_>>().join(", ")
        ))
        .into()),
    }
}

pub fn embed(corpus: &Corpus, provider: &dyn EmbeddingProvider, options: &EmbedOptions) -> anyhow::Result<EmbeddedCorpus> {
    embed_corpus(corpus, provider, options).with_context(|| format!("embedding with {}", provider.name()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_urls() {
        assert_eq!(parse_hash_url("hash://64").unwrap(), (64, 0));
        assert_eq!(parse_hash_url("hash://32?seed=7").unwrap(), (32, 7));
        assert!(parse_hash_url("hash://x").is_err());
        assert!(parse_hash_url("hash://8?salt=1").is_err());
    }

    #[test]
    fn provider_selection() {
        let p = build_provider(Some("hash://16"), None).unwrap();
        assert_eq!(p.name(), "hash://16");
        assert_eq!(p.fetch_embeddings(&["a b"]).unwrap()[0].len(), 16);
        let p = build_provider(None, Some("cached")).unwrap();
        assert!(p.fetch_embeddings(&["a"]).is_err());
        assert!(build_provider(None, None).err().unwrap().is::<UsageError>());
        assert!(build_provider(Some("ftp://x"), None).err().unwrap().is::<UsageError>());
    }
}
