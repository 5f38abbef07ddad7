//! Text ingestion: loading JSONL/CSV datasets into a [`Corpus`], exact
//! deduplication and candidate-term extraction.

mod stopwords;
mod terms;

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

pub use stopwords::{default_stopwords, load_stopwords};
pub use terms::{tokenize_terms, HeuristicExtractor, TermExtractor};

/// Width of generated ids (`000000`, `000001`, ...).
pub const GENERATED_ID_WIDTH: usize = 6;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("cannot open {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: malformed record: {reason}")]
    Malformed {
        path: PathBuf,
        line: u64,
        reason: String,
    },
    #[error("unknown corpus format `{0}` (expected jsonl or csv)")]
    UnknownFormat(String),
}

/// On-disk layout of an input dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Jsonl,
    Csv,
}

impl FromStr for Format {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" | "ndjson" => Ok(Format::Jsonl),
            "csv" => Ok(Format::Csv),
            other => Err(CorpusError::UnknownFormat(other.to_string())),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Jsonl => "jsonl",
            Format::Csv => "csv",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, String>,
    /// Whitespace-delimited token count.
    pub token_count: usize,
}

impl Document {
    /// Builds a document, returning `None` when the text is blank.
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Option<Self> {
        let text = text.into();
        let token_count = text.split_whitespace().count();
        if token_count == 0 {
            return None;
        }
        Some(Self {
            id: id.into(),
            text,
            metadata: BTreeMap::new(),
            token_count,
        })
    }
}

/// An ordered, immutable collection of documents. Ingestion order is kept
/// and drives every downstream stage.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    documents: Vec<Document>,
    source_path: String,
    format: Format,
}

impl Corpus {
    /// Assembles a corpus from in-memory documents. Fails if ids repeat or are empty.
    pub fn from_documents(
        documents: Vec<Document>,
        source_path: impl Into<String>,
        format: Format,
    ) -> Result<Self, CorpusError> {
        let source_path = source_path.into();
        let mut seen = HashSet::with_capacity(documents.len());
        for (i, doc) in documents.iter().enumerate() {
            if doc.id.is_empty() || !seen.insert(doc.id.as_str()) {
                return Err(CorpusError::Malformed {
                    path: PathBuf::from(&source_path),
                    line: i as u64 + 1,
                    reason: format!("empty or duplicate id `{}`", doc.id),
                });
            }
            if doc.text.trim().is_empty() {
                return Err(CorpusError::Malformed {
                    path: PathBuf::from(&source_path),
                    line: i as u64 + 1,
                    reason: format!("empty text for id `{}`", doc.id),
                });
            }
        }
        Ok(Self {
            documents,
            source_path,
            format,
        })
    }

    /// Convenience constructor from plain texts with generated ids.
    pub fn from_texts<I, S>(texts: I) -> Result<Self, CorpusError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let documents = texts
            .into_iter()
            .enumerate()
            .filter_map(|(i, t)| Document::new(generated_id(i), t))
            .collect();
        Self::from_documents(documents, "<memory>", Format::Jsonl)
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn source_path(&self) -> &str {
        &self.source_path
    }

    pub fn format(&self) -> Format {
        self.format
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.documents.iter().map(|d| d.id.as_str())
    }

    pub fn texts(&self) -> impl Iterator<Item = &str> {
        self.documents.iter().map(|d| d.text.as_str())
    }
}

/// Counters written to `ingest_report.json`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub loaded: usize,
    pub skipped: usize,
    pub deduplicated: usize,
}

pub fn generated_id(index: usize) -> String {
    format!("{index:0width$}", width = GENERATED_ID_WIDTH)
}

/// Loads a dataset. Records with blank text are skipped and counted in the
/// returned report; any other malformed record aborts the load.
pub fn load_corpus(
    path: &Path,
    format: Format,
    text_field: &str,
    id_field: Option<&str>,
) -> Result<(Corpus, IngestReport), CorpusError> {
    let file = File::open(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut builder = Builder::new(path);
    match format {
        Format::Jsonl => read_jsonl(BufReader::new(file), text_field, id_field, &mut builder)?,
        Format::Csv => read_csv(file, text_field, id_field, &mut builder)?,
    }
    let report = IngestReport {
        loaded: builder.documents.len(),
        skipped: builder.skipped,
        deduplicated: 0,
    };
    let corpus = Corpus {
        documents: builder.documents,
        source_path: path.display().to_string(),
        format,
    };
    Ok((corpus, report))
}

struct Builder<'a> {
    path: &'a Path,
    documents: Vec<Document>,
    seen: HashSet<String>,
    skipped: usize,
    records: usize,
}

impl<'a> Builder<'a> {
    fn new(path: &'a Path) -> Self {
        Self {
            path,
            documents: Vec::new(),
            seen: HashSet::new(),
            skipped: 0,
            records: 0,
        }
    }

    fn malformed(&self, line: u64, reason: impl Into<String>) -> CorpusError {
        CorpusError::Malformed {
            path: self.path.to_path_buf(),
            line,
            reason: reason.into(),
        }
    }

    fn push(
        &mut self,
        line: u64,
        id: Option<String>,
        text: String,
        metadata: BTreeMap<String, String>,
    ) -> Result<(), CorpusError> {
        let index = self.records;
        self.records += 1;
        let id = id.unwrap_or_else(|| generated_id(index));
        if id.is_empty() {
            return Err(self.malformed(line, "empty id"));
        }
        let Some(mut doc) = Document::new(id, text) else {
            self.skipped += 1;
            return Ok(());
        };
        if !self.seen.insert(doc.id.clone()) {
            return Err(self.malformed(line, format!("duplicate id `{}`", doc.id)));
        }
        doc.metadata = metadata;
        self.documents.push(doc);
        Ok(())
    }
}

fn value_to_string(value: &Value) -> String {
    match value {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn read_jsonl<R: BufRead>(
    reader: R,
    text_field: &str,
    id_field: Option<&str>,
    builder: &mut Builder<'_>,
) -> Result<(), CorpusError> {
    for (i, line) in reader.lines().enumerate() {
        let lineno = i as u64 + 1;
        let line = line.map_err(|source| CorpusError::Io {
            path: builder.path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: serde_json::Map<String, Value> = serde_json::from_str(&line)
            .map_err(|e| builder.malformed(lineno, format!("invalid JSON object: {e}")))?;
        let text = match record.get(text_field) {
            Some(Value::String(s)) => s.clone(),
            Some(Value::Null) => String::new(),
            Some(_) => {
                return Err(builder.malformed(lineno, format!("field `{text_field}` is not a string")))
            }
            None => return Err(builder.malformed(lineno, format!("missing field `{text_field}`"))),
        };
        let id = match id_field {
            Some(field) => match record.get(field) {
                Some(Value::Null) | None => {
                    return Err(builder.malformed(lineno, format!("missing id field `{field}`")))
                }
                Some(v) => Some(value_to_string(v)),
            },
            None => None,
        };
        let metadata = record
            .iter()
            .filter(|(k, _)| k.as_str() != text_field && Some(k.as_str()) != id_field)
            .map(|(k, v)| (k.clone(), value_to_string(v)))
            .collect();
        builder.push(lineno, id, text, metadata)?;
    }
    Ok(())
}

fn read_csv<R: std::io::Read>(
    reader: R,
    text_field: &str,
    id_field: Option<&str>,
    builder: &mut Builder<'_>,
) -> Result<(), CorpusError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| builder.malformed(1, format!("invalid header: {e}")))?
        .clone();
    let text_col = headers
        .iter()
        .position(|h| h == text_field)
        .ok_or_else(|| builder.malformed(1, format!("missing column `{text_field}`")))?;
    let id_col = match id_field {
        Some(field) => Some(
            headers
                .iter()
                .position(|h| h == field)
                .ok_or_else(|| builder.malformed(1, format!("missing id column `{field}`")))?,
        ),
        None => None,
    };
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            builder.malformed(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let text = record.get(text_col).unwrap_or_default().to_string();
        let id = id_col.map(|c| record.get(c).unwrap_or_default().to_string());
        let metadata = headers
            .iter()
            .zip(record.iter())
            .enumerate()
            .filter(|(c, _)| *c != text_col && Some(*c) != id_col)
            .map(|(_, (h, v))| (h.to_string(), v.to_string()))
            .collect();
        builder.push(line, id, text, metadata)?;
    }
    Ok(())
}

fn normalize_for_dedup(text: &str) -> String {
    text.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Exact-match deduplication on lowercased, whitespace-collapsed text. The
/// first occurrence wins and order is preserved.
pub fn deduplicate(corpus: &Corpus) -> (Corpus, usize) {
    let mut seen = HashSet::with_capacity(corpus.len());
    let documents: Vec<Document> = corpus
        .documents
        .iter()
        .filter(|d| seen.insert(normalize_for_dedup(&d.text)))
        .cloned()
        .collect();
    let removed = corpus.len() - documents.len();
    let deduped = Corpus {
        documents,
        source_path: corpus.source_path.clone(),
        format: corpus.format,
    };
    (deduped, removed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(contents: &str, suffix: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::Builder::new().suffix(suffix).tempfile().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn jsonl_generated_ids() {
        let f = write_tmp(
            "{\"prompt\":\"first one\"}\n{\"prompt\":\"second\"}\n{\"prompt\":\"third thing here\"}\n",
            ".jsonl",
        );
        let (corpus, report) = load_corpus(f.path(), Format::Jsonl, "prompt", None).unwrap();
        let ids: Vec<_> = corpus.ids().collect();
        assert_eq!(ids, ["000000", "000001", "000002"]);
        assert_eq!(corpus.documents()[2].token_count, 3);
        assert_eq!(report.loaded, 3);
        assert_eq!(report.skipped, 0);
    }

    #[test]
    fn empty_text_is_skipped() {
        let f = write_tmp(
            "{\"prompt\":\"keep me\"}\n{\"prompt\":\"   \"}\n{\"prompt\":\"\"}\n",
            ".jsonl",
        );
        let (corpus, report) = load_corpus(f.path(), Format::Jsonl, "prompt", None).unwrap();
        assert_eq!(corpus.len(), 1);
        assert_eq!(report.skipped, 2);
    }

    #[test]
    fn single_empty_prompt_counts_once() {
        let f = write_tmp("{\"prompt\":\"a\"}\n{\"prompt\":\"\"}\n", ".jsonl");
        let (_, report) = load_corpus(f.path(), Format::Jsonl, "prompt", None).unwrap();
        assert_eq!(report.skipped, 1);
    }

    #[test]
    fn malformed_record_reports_line() {
        let f = write_tmp("{\"prompt\":\"ok\"}\n{not json}\n", ".jsonl");
        let err = load_corpus(f.path(), Format::Jsonl, "prompt", None).unwrap_err();
        match err {
            CorpusError::Malformed { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_text_field_is_an_error() {
        let f = write_tmp("{\"prompt\":\"ok\"}\n{\"other\":\"x\"}\n", ".jsonl");
        assert!(matches!(
            load_corpus(f.path(), Format::Jsonl, "prompt", None),
            Err(CorpusError::Malformed { line: 2, .. })
        ));
    }

    #[test]
    fn missing_file() {
        let err = load_corpus(Path::new("/nonexistent/x.jsonl"), Format::Jsonl, "t", None);
        assert!(matches!(err, Err(CorpusError::Io { .. })));
    }

    #[test]
    fn id_field_and_metadata() {
        let f = write_tmp(
            "{\"id\":7,\"text\":\"hello world\",\"lang\":\"en\"}\n{\"id\":\"b\",\"text\":\"x\"}\n",
            ".jsonl",
        );
        let (corpus, _) = load_corpus(f.path(), Format::Jsonl, "text", Some("id")).unwrap();
        assert_eq!(corpus.documents()[0].id, "7");
        assert_eq!(corpus.documents()[0].metadata["lang"], "en");
        assert_eq!(corpus.documents()[1].id, "b");
    }

    #[test]
    fn duplicate_ids_rejected() {
        let f = write_tmp("{\"id\":\"a\",\"t\":\"x\"}\n{\"id\":\"a\",\"t\":\"y\"}\n", ".jsonl");
        assert!(load_corpus(f.path(), Format::Jsonl, "t", Some("id")).is_err());
    }

    #[test]
    fn csv_with_quoting() {
        let f = write_tmp(
            "id,text,source\n1,\"hello, world\",web\n2,\"multi\nline \"\"quoted\"\"\",book\n3,,x\n",
            ".csv",
        );
        let (corpus, report) = load_corpus(f.path(), Format::Csv, "text", Some("id")).unwrap();
        assert_eq!(corpus.len(), 2);
        assert_eq!(report.skipped, 1);
        assert_eq!(corpus.documents()[0].text, "hello, world");
        assert_eq!(corpus.documents()[1].text, "multi\nline \"quoted\"");
        assert_eq!(corpus.documents()[1].metadata["source"], "book");
    }

    #[test]
    fn reload_is_identical() {
        let f = write_tmp("{\"p\":\"a b\"}\n{\"p\":\"c\"}\n", ".jsonl");
        let a = load_corpus(f.path(), Format::Jsonl, "p", None).unwrap();
        let b = load_corpus(f.path(), Format::Jsonl, "p", None).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn dedup_normalizes_case_and_whitespace() {
        let corpus = Corpus::from_texts(["a b", "A  b", "c"]).unwrap();
        let (deduped, removed) = deduplicate(&corpus);
        assert_eq!(deduped.texts().collect::<Vec<_>>(), ["a b", "c"]);
        assert_eq!(removed, 1);
    }

    #[test]
    fn dedup_unique_and_repeated() {
        let corpus = Corpus::from_texts(["x", "y", "z"]).unwrap();
        let (deduped, removed) = deduplicate(&corpus);
        assert_eq!(deduped, corpus);
        assert_eq!(removed, 0);

        let corpus = Corpus::from_texts(std::iter::repeat_n("same doc", 100)).unwrap();
        let (deduped, removed) = deduplicate(&corpus);
        assert_eq!(deduped.len(), 1);
        assert_eq!(removed, 99);
    }

    proptest::proptest! {
        #[test]
        fn dedup_is_idempotent(texts in proptest::collection::vec("[a-cA-C ]{1,6}", 0..30)) {
            let texts: Vec<String> = texts.into_iter().filter(|t| !t.trim().is_empty()).collect();
            let corpus = Corpus::from_texts(texts).unwrap();
            let (once, _) = deduplicate(&corpus);
            let (twice, removed) = deduplicate(&once);
            proptest::prop_assert_eq!(once, twice);
            proptest::prop_assert_eq!(removed, 0);
        }
    }
}
