//! Preference-set filtering: cluster chosen and rejected answers separately,
//! find chosen-side topics with no counterpart among rejected topics, and
//! keep the triples whose chosen answer falls in one of them.

use std::collections::{BTreeSet, HashSet};
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::corpus::{generated_id, Corpus, CorpusError, Document, Format, TermExtractor};
use crate::embedding::EmbeddedCorpus;
use crate::geometry::MapModel;
use crate::pipeline::{run_pipeline, PipelineError, PipelineOptions, PipelineOutput};
use crate::topics::Topic;

pub const DEFAULT_SHARED_THRESHOLD: usize = 2;
pub const DEFAULT_TOP_N: usize = 10;

#[derive(Debug, thiserror::Error)]
pub enum DpoError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path} line {line}: {reason}")]
    Malformed { path: String, line: usize, reason: String },
    #[error("{triples} triples but {chosen} chosen and {rejected} rejected embeddings")]
    Misaligned {
        triples: usize,
        chosen: usize,
        rejected: usize,
    },
    #[error("embedding for triple {index} has id {got}, expected {expected}")]
    IdMismatch {
        index: usize,
        expected: String,
        got: String,
    },
    #[error("topic {0} does not exist")]
    UnknownTopic(usize),
    #[error("{0}")]
    Corpus(#[from] CorpusError),
    #[error("{side} pipeline: {source}")]
    Pipeline {
        side: &'static str,
        #[source]
        source: PipelineError,
    },
}

/// One preference example. `source` is the original JSON line, written back
/// unchanged when the triple is retained.
#[derive(Debug, Clone, PartialEq)]
pub struct PreferenceTriple {
    pub id: String,
    pub prompt: String,
    pub chosen: String,
    pub rejected: String,
    pub source: String,
}

/// Text of a field that is either a plain string or a chat transcript
/// (`[{"role": ..., "content": ...}]`). For transcripts the assistant turns
/// are used, or every turn when there is no assistant turn.
fn field_text(value: &Value) -> Option<String> {
    match value {
        Value::String(s) => Some(s.clone()),
        Value::Array(turns) => {
            let content = |t: &Value| t.get("content").and_then(Value::as_str).map(str::to_string);
            let assistant: Vec<String> = turns
                .iter()
                .filter(|t| t.get("role").and_then(Value::as_str) == Some("assistant"))
                .filter_map(content)
                .collect();
            let parts = if assistant.is_empty() {
                turns.iter().filter_map(content).collect()
            } else {
                assistant
            };
            (!parts.is_empty()).then(|| parts.join("\n"))
        }
        _ => None,
    }
}

/// Reads `{prompt, chosen, rejected}` JSON lines. An `id` field is used when
/// present, otherwise the record index is.
pub fn load_triples(path: &Path) -> Result<Vec<PreferenceTriple>, DpoError> {
    let p = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|source| DpoError::Io {
        path: p.clone(),
        source,
    })?;
    let mut triples = Vec::new();
    let mut seen = HashSet::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |reason: String| DpoError::Malformed {
            path: p.clone(),
            line: lineno + 1,
            reason,
        };
        let record: Value = serde_json::from_str(line).map_err(|e| bad(e.to_string()))?;
        let field = |name: &str| -> Result<String, DpoError> {
            record
                .get(name)
                .and_then(field_text)
                .filter(|s| !s.trim().is_empty())
                .ok_or_else(|| bad(format!("missing or empty `{name}`")))
        };
        let id = match record.get("id") {
            Some(Value::String(s)) => s.clone(),
            Some(Value::Number(n)) => n.to_string(),
            _ => generated_id(triples.len()),
        };
        if !seen.insert(id.clone()) {
            return Err(bad(format!("duplicate id {id}")));
        }
        triples.push(PreferenceTriple {
            id,
            prompt: field("prompt")?,
            chosen: field("chosen")?,
            rejected: field("rejected")?,
            source: line.to_string(),
        });
    }
    Ok(triples)
}

/// Writes the original lines of `triples` as JSONL.
pub fn write_triples<'a>(
    path: &Path,
    triples: impl IntoIterator<Item = &'a PreferenceTriple>,
) -> Result<(), DpoError> {
    let io = |source| DpoError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut out = std::io::BufWriter::new(fs::File::create(path).map_err(io)?);
    for t in triples {
        writeln!(out, "{}", t.source).map_err(io)?;
    }
    out.flush().map_err(io)
}

/// Corpora of chosen and rejected answers, ids taken from the triples.
pub fn answer_corpora(triples: &[PreferenceTriple]) -> Result<(Corpus, Corpus), DpoError> {
    let side = |text: fn(&PreferenceTriple) -> &str| {
        let docs = triples
            .iter()
            .map(|t| Document::new(t.id.clone(), text(t)).expect("non-empty by construction"))
            .collect();
        Corpus::from_documents(docs, "<triples>", Format::Jsonl)
    };
    Ok((side(|t| &t.chosen)?, side(|t| &t.rejected)?))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverlapPair {
    pub chosen_topic: usize,
    pub rejected_topic: usize,
    /// Shared terms in the chosen topic's rank order.
    pub shared_terms: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapReport {
    pub shared_threshold: usize,
    pub top_n: usize,
    pub topics_chosen: Vec<Topic>,
    pub topics_rejected: Vec<Topic>,
    pub overlapping_pairs: Vec<OverlapPair>,
    pub unique_chosen_topic_ids: BTreeSet<usize>,
    /// In input order.
    pub retained_triple_ids: Vec<String>,
}

impl OverlapReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Two topics overlap when their top-`top_n` term lists share at least
/// `shared_threshold` exact terms. A chosen topic is unique when it overlaps
/// no rejected topic.
pub fn topic_diff(
    chosen: &[Topic],
    rejected: &[Topic],
    shared_threshold: usize,
    top_n: usize,
) -> OverlapReport {
    let rejected_sets: Vec<HashSet<&str>> = rejected.iter().map(|t| t.top_terms(top_n).collect()).collect();
    let mut overlapping_pairs = Vec::new();
    let mut unique = BTreeSet::new();
    for a in chosen {
        let mut overlaps = false;
        for (b, set) in rejected.iter().zip(&rejected_sets) {
            let shared: Vec<String> = a
                .top_terms(top_n)
                .filter(|t| set.contains(t))
                .map(str::to_string)
                .collect();
            if shared.len() >= shared_threshold {
                overlaps = true;
                overlapping_pairs.push(OverlapPair {
                    chosen_topic: a.cluster_id,
                    rejected_topic: b.cluster_id,
                    shared_terms: shared,
                });
            }
        }
        if !overlaps {
            unique.insert(a.cluster_id);
        }
    }
    OverlapReport {
        shared_threshold,
        top_n,
        topics_chosen: chosen.to_vec(),
        topics_rejected: rejected.to_vec(),
        overlapping_pairs,
        unique_chosen_topic_ids: unique,
        retained_triple_ids: Vec::new(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DpoOptions {
    /// Used identically on both sides.
    pub pipeline: PipelineOptions,
    pub shared_threshold: usize,
    pub top_n: usize,
}

impl Default for DpoOptions {
    fn default() -> Self {
        Self {
            pipeline: PipelineOptions {
                k: crate::clustering::DEFAULT_DPO_K,
                ..Default::default()
            },
            shared_threshold: DEFAULT_SHARED_THRESHOLD,
            top_n: DEFAULT_TOP_N,
        }
    }
}

pub struct DpoOutcome {
    pub report: OverlapReport,
    /// Indices into the input triples, ascending.
    pub retained: Vec<usize>,
    pub chosen: PipelineOutput,
    pub rejected: PipelineOutput,
}

fn check_alignment(triples: &[PreferenceTriple], ec: &EmbeddedCorpus) -> Result<(), DpoError> {
    for (index, (t, id)) in triples.iter().zip(ec.corpus().ids()).enumerate() {
        if t.id != id {
            return Err(DpoError::IdMismatch {
                index,
                expected: t.id.clone(),
                got: id.to_string(),
            });
        }
    }
    Ok(())
}

/// Runs the topic pipeline on both answer sides (concurrently), diffs the
/// topics and keeps triples whose chosen answer lies in a unique topic.
pub fn filter_preference_dataset(
    triples: &[PreferenceTriple],
    ec_chosen: &EmbeddedCorpus,
    ec_rejected: &EmbeddedCorpus,
    extractor: &dyn TermExtractor,
    options: &DpoOptions,
) -> Result<DpoOutcome, DpoError> {
    if ec_chosen.len() != triples.len() || ec_rejected.len() != triples.len() {
        return Err(DpoError::Misaligned {
            triples: triples.len(),
            chosen: ec_chosen.len(),
            rejected: ec_rejected.len(),
        });
    }
    check_alignment(triples, ec_chosen)?;
    check_alignment(triples, ec_rejected)?;

    let (chosen, rejected) = rayon::join(
        || run_pipeline(ec_chosen, extractor, &options.pipeline),
        || run_pipeline(ec_rejected, extractor, &options.pipeline),
    );
    let chosen = chosen.map_err(|source| DpoError::Pipeline { side: "chosen", source })?;
    let rejected = rejected.map_err(|source| DpoError::Pipeline { side: "rejected", source })?;

    let mut report = topic_diff(&chosen.topics, &rejected.topics, options.shared_threshold, options.top_n);
    let retained: Vec<usize> = chosen
        .clustering
        .labels
        .iter()
        .enumerate()
        .filter(|(_, l)| report.unique_chosen_topic_ids.contains(l))
        .map(|(i, _)| i)
        .collect();
    report.retained_triple_ids = retained.iter().map(|&i| triples[i].id.clone()).collect();
    log::info!(
        "{} of {} chosen topics are unique; keeping {} of {} triples",
        report.unique_chosen_topic_ids.len(),
        chosen.topics.len(),
        retained.len(),
        triples.len()
    );
    Ok(DpoOutcome {
        report,
        retained,
        chosen,
        rejected,
    })
}

/// Ids of the map's documents that belong to any of `keep` topics, in map
/// order.
pub fn select_by_topics(map: &MapModel, keep: &[usize]) -> Result<Vec<String>, DpoError> {
    if let Some(&bad) = keep.iter().find(|&&c| map.topic(c).is_none()) {
        return Err(DpoError::UnknownTopic(bad));
    }
    let keep: HashSet<usize> = keep.iter().copied().collect();
    Ok(map
        .points
        .iter()
        .filter(|p| keep.contains(&p.cluster))
        .map(|p| p.id.clone())
        .collect())
}
