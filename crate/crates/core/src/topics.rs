//! Topic representation: candidate-term table, chi-square specificity per
//! cluster, topic names and per-cluster document ranking.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::clustering::Clustering;
use crate::corpus::{Corpus, TermExtractor};

pub const DEFAULT_CUTOFF_FRACTION: f64 = 0.10;
pub const DEFAULT_NAME_TERMS: usize = 10;
pub const DEFAULT_RANK_TERMS: usize = 20;
pub const NAME_SEPARATOR: &str = " | ";

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum TopicsError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("cutoff fraction {0} is outside (0, 1]")]
    InvalidCutoff(f64),
    #[error("no candidate terms survived the cutoff")]
    NoKeptTerms,
    #[error("clustering covers {labels} documents but the corpus has {documents}")]
    LengthMismatch { labels: usize, documents: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TopicOptions {
    pub cutoff_fraction: f64,
    /// Terms used for the topic name.
    pub name_terms: usize,
    /// Terms used to rank documents inside a cluster.
    pub rank_terms: usize,
}

impl Default for TopicOptions {
    fn default() -> Self {
        Self {
            cutoff_fraction: DEFAULT_CUTOFF_FRACTION,
            name_terms: DEFAULT_NAME_TERMS,
            rank_terms: DEFAULT_RANK_TERMS,
        }
    }
}

/// Distinct candidate terms of every document, in corpus order.
#[derive(Debug, Clone)]
pub struct TermIndex {
    doc_terms: Vec<Vec<String>>,
}

impl TermIndex {
    pub fn build(corpus: &Corpus, extractor: &dyn TermExtractor) -> Self {
        let doc_terms = corpus
            .texts()
            .map(|t| {
                let mut seen = HashSet::new();
                extractor
                    .extract(t)
                    .into_iter()
                    .filter(|term| seen.insert(term.clone()))
                    .collect()
            })
            .collect();
        Self { doc_terms }
    }

    pub fn from_terms(doc_terms: Vec<Vec<String>>) -> Self {
        Self { doc_terms }
    }

    pub fn len(&self) -> usize {
        self.doc_terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.doc_terms.is_empty()
    }

    pub fn terms_of(&self, doc: usize) -> &[String] {
        &self.doc_terms[doc]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermEntry {
    pub term: String,
    pub doc_frequency: usize,
    pub kept: bool,
}

/// Corpus-wide document frequencies, sorted by frequency (descending) then
/// term. `kept` marks the top `cutoff_fraction` of terms, with every term
/// tied at the boundary frequency also kept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermTable {
    pub terms: Vec<TermEntry>,
    pub cutoff_fraction: f64,
}

impl TermTable {
    pub fn kept(&self) -> impl Iterator<Item = &TermEntry> {
        self.terms.iter().filter(|t| t.kept)
    }

    pub fn doc_frequency(&self, term: &str) -> Option<usize> {
        self.terms
            .iter()
            .find(|t| t.term == term)
            .map(|t| t.doc_frequency)
    }
}

pub fn build_term_table(index: &TermIndex, cutoff_fraction: f64) -> Result<TermTable, TopicsError> {
    if !(cutoff_fraction > 0.0 && cutoff_fraction <= 1.0) {
        return Err(TopicsError::InvalidCutoff(cutoff_fraction));
    }
    if index.is_empty() {
        return Err(TopicsError::EmptyCorpus);
    }
    let mut df: HashMap<&str, usize> = HashMap::new();
    for terms in &index.doc_terms {
        for t in terms {
            *df.entry(t.as_str()).or_insert(0) += 1;
        }
    }
    let mut terms: Vec<TermEntry> = df
        .into_iter()
        .map(|(term, doc_frequency)| TermEntry {
            term: term.to_string(),
            doc_frequency,
            kept: false,
        })
        .collect();
    terms.sort_by(|a, b| {
        b.doc_frequency
            .cmp(&a.doc_frequency)
            .then_with(|| a.term.cmp(&b.term))
    });
    if !terms.is_empty() {
        // Small epsilon so that e.g. 0.1 * 30 does not round up to 4.
        let quota = ((cutoff_fraction * terms.len() as f64) - 1e-9).ceil().max(1.0) as usize;
        let boundary = terms[quota.min(terms.len()) - 1].doc_frequency;
        for t in &mut terms {
            t.kept = t.doc_frequency >= boundary;
        }
    }
    Ok(TermTable {
        terms,
        cutoff_fraction,
    })
}

/// Chi-square statistic of a 2×2 table without continuity correction.
///
/// `a`: in cluster, has term; `b`: in cluster, lacks term; `c`: outside,
/// has term; `d`: outside, lacks term. Zero when any margin is empty.
pub fn chi2_2x2(a: usize, b: usize, c: usize, d: usize) -> f64 {
    let (a, b, c, d) = (a as f64, b as f64, c as f64, d as f64);
    let n = a + b + c + d;
    let denom = (a + b) * (c + d) * (a + c) * (b + d);
    if denom == 0.0 {
        return 0.0;
    }
    let cross = a * d - b * c;
    n * cross * cross / denom
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredTerm {
    pub term: String,
    pub chi2: f64,
    pub doc_frequency: usize,
}

fn rank_order(a: &ScoredTerm, b: &ScoredTerm) -> Ordering {
    b.chi2
        .total_cmp(&a.chi2)
        .then_with(|| b.doc_frequency.cmp(&a.doc_frequency))
        .then_with(|| a.term.cmp(&b.term))
}

/// Kept terms per cluster, ranked by chi-square. Only terms over-represented
/// in the cluster (in-cluster rate strictly above the out-of-cluster rate)
/// are listed.
pub fn score_specificity(
    table: &TermTable,
    index: &TermIndex,
    clustering: &Clustering,
) -> Result<Vec<Vec<ScoredTerm>>, TopicsError> {
    if clustering.labels.len() != index.len() {
        return Err(TopicsError::LengthMismatch {
            labels: clustering.labels.len(),
            documents: index.len(),
        });
    }
    let kept: HashMap<&str, usize> = table
        .kept()
        .map(|t| (t.term.as_str(), t.doc_frequency))
        .collect();
    if kept.is_empty() {
        return Err(TopicsError::NoKeptTerms);
    }

    let n = index.len();
    let sizes = clustering.sizes();
    let mut in_cluster: Vec<HashMap<&str, usize>> = vec![HashMap::new(); clustering.k];
    for (doc, &label) in clustering.labels.iter().enumerate() {
        for t in &index.doc_terms[doc] {
            if kept.contains_key(t.as_str()) {
                *in_cluster[label].entry(t.as_str()).or_insert(0) += 1;
            }
        }
    }

    Ok(in_cluster
        .into_iter()
        .enumerate()
        .map(|(c, counts)| {
            let size = sizes[c];
            let outside = n - size;
            let mut scored: Vec<(ScoredTerm, Option<u128>, u128)> = counts
                .into_iter()
                .filter_map(|(term, a)| {
                    let df = kept[term];
                    let b = size - a;
                    let c_out = df - a;
                    let d = outside - c_out;
                    // a/size > c_out/outside, in integers.
                    let lhs = (a as u128) * (outside as u128);
                    let rhs = (c_out as u128) * (size as u128);
                    if lhs <= rhs {
                        return None;
                    }
                    let cross = lhs - rhs;
                    let margins = (df as u128) * ((n - df) as u128);
                    let term = ScoredTerm {
                        term: term.to_string(),
                        chi2: chi2_2x2(a, b, c_out, d),
                        doc_frequency: df,
                    };
                    Some((term, cross.checked_mul(cross), margins))
                })
                .collect();
            scored.sort_by(|x, y| exact_order(x, y).then_with(|| rank_order(&x.0, &y.0)));
            scored.into_iter().map(|(t, _, _)| t).collect()
        })
        .collect())
}

/// Within one cluster, chi2 is proportional to `(a·d − b·c)² / (df·(n − df))`
/// because the cluster-size margins are shared. Comparing that ratio by
/// integer cross-multiplication orders mathematically tied terms as equal,
/// so the tie-break rules apply instead of rounding noise. Falls back to the
/// float comparison in `rank_order` on overflow.
fn exact_order(
    (_, x_sq, x_margins): &(ScoredTerm, Option<u128>, u128),
    (_, y_sq, y_margins): &(ScoredTerm, Option<u128>, u128),
) -> Ordering {
    let (Some(x_sq), Some(y_sq)) = (x_sq, y_sq) else {
        return Ordering::Equal;
    };
    match (x_sq.checked_mul(*y_margins), y_sq.checked_mul(*x_margins)) {
        (Some(x), Some(y)) => y.cmp(&x),
        _ => Ordering::Equal,
    }
}

/// Joins the top `n` terms with `" | "`, dropping any unigram that appears
/// as a word of a multi-word term in the same selection.
pub fn name_topic<S: AsRef<str>>(ranked_terms: &[S], n: usize) -> String {
    let selected: Vec<&str> = ranked_terms.iter().take(n).map(AsRef::as_ref).collect();
    let constituents: HashSet<&str> = selected
        .iter()
        .filter(|t| t.contains(' '))
        .flat_map(|t| t.split_whitespace())
        .collect();
    selected
        .into_iter()
        .filter(|t| t.contains(' ') || !constituents.contains(t))
        .collect::<Vec<_>>()
        .join(NAME_SEPARATOR)
}

/// Orders documents by how many distinct top-`top_terms` specific terms they
/// contain (descending), ties by id ascending.
pub fn rank_documents(
    members: &[usize],
    specific_terms: &[ScoredTerm],
    index: &TermIndex,
    corpus: &Corpus,
    top_terms: usize,
) -> Vec<String> {
    let top: HashSet<&str> = specific_terms
        .iter()
        .take(top_terms)
        .map(|t| t.term.as_str())
        .collect();
    let docs = corpus.documents();
    let mut scored: Vec<(usize, &str)> = members
        .iter()
        .map(|&i| {
            let hits = index.doc_terms[i]
                .iter()
                .filter(|t| top.contains(t.as_str()))
                .count();
            (hits, docs[i].id.as_str())
        })
        .collect();
    scored.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(b.1)));
    scored.into_iter().map(|(_, id)| id.to_string()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topic {
    pub cluster_id: usize,
    /// `(term, chi2)` by decreasing specificity.
    pub specific_terms: Vec<(String, f64)>,
    pub name: String,
    pub size: usize,
    /// Every document of the cluster, in rank order.
    pub top_documents: Vec<String>,
}

impl Topic {
    pub fn top_terms(&self, n: usize) -> impl Iterator<Item = &str> {
        self.specific_terms.iter().take(n).map(|(t, _)| t.as_str())
    }
}

/// Full topic stage: term table, specificity, names and document ranking.
pub fn build_topics(
    corpus: &Corpus,
    clustering: &Clustering,
    extractor: &dyn TermExtractor,
    options: &TopicOptions,
) -> Result<Vec<Topic>, TopicsError> {
    let index = TermIndex::build(corpus, extractor);
    let table = build_term_table(&index, options.cutoff_fraction)?;
    let scores = score_specificity(&table, &index, clustering)?;
    let keep = options.name_terms.max(options.rank_terms);
    Ok(scores
        .into_iter()
        .enumerate()
        .map(|(c, mut ranked)| {
            let members = clustering.members(c);
            let top_documents = rank_documents(&members, &ranked, &index, corpus, options.rank_terms);
            ranked.truncate(keep);
            let terms: Vec<&str> = ranked.iter().map(|t| t.term.as_str()).collect();
            Topic {
                cluster_id: c,
                name: name_topic(&terms, options.name_terms),
                size: members.len(),
                top_documents,
                specific_terms: ranked.into_iter().map(|t| (t.term, t.chi2)).collect(),
            }
        })
        .collect())
}
