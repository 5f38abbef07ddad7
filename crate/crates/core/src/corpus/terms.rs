use std::collections::HashSet;

use super::{default_stopwords, Document};

/// Produces the candidate terms (unigrams and bigrams) of a text. The topic
/// stage only sees this interface, so a part-of-speech based extractor can
/// replace the heuristic one.
pub trait TermExtractor: Send + Sync {
    /// Distinct candidate terms of `text`, in first-occurrence order.
    fn extract(&self, text: &str) -> Vec<String>;
}

/// Lowercased alphabetic unigrams and bigrams with stopwords removed.
#[derive(Debug, Clone)]
pub struct HeuristicExtractor {
    stopwords: HashSet<String>,
}

impl HeuristicExtractor {
    pub fn new(stopwords: HashSet<String>) -> Self {
        Self { stopwords }
    }
}

impl Default for HeuristicExtractor {
    fn default() -> Self {
        Self::new(default_stopwords())
    }
}

impl TermExtractor for HeuristicExtractor {
    fn extract(&self, text: &str) -> Vec<String> {
        extract_terms(text, &self.stopwords)
    }
}

/// Candidate terms of one document. Unigrams come first, then bigrams; a
/// bigram is dropped when either constituent is a stopword.
pub fn tokenize_terms(doc: &Document, stopwords: &HashSet<String>) -> Vec<String> {
    extract_terms(&doc.text, stopwords)
}

fn extract_terms(text: &str, stopwords: &HashSet<String>) -> Vec<String> {
    let tokens: Vec<String> = text
        .split(|c: char| !c.is_alphabetic())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect();
    let keep: Vec<bool> = tokens.iter().map(|t| !stopwords.contains(t)).collect();

    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (tok, &ok) in tokens.iter().zip(&keep) {
        if ok && seen.insert(tok.clone()) {
            out.push(tok.clone());
        }
    }
    for i in 1..tokens.len() {
        if keep[i - 1] && keep[i] {
            let bigram = format!("{} {}", tokens[i - 1], tokens[i]);
            if seen.insert(bigram.clone()) {
                out.push(bigram);
            }
        }
    }
    out
}
