//! Cross-embedder agreement: the same corpus clustered under several
//! embedders, compared pairwise with the adjusted Rand index.

use std::path::Path;

use anyhow::{bail, Context};
use cartograph::clustering::ari_matrix;
use cartograph::corpus::TermExtractor;
use cartograph::embedding::EmbeddedCorpus;
use cartograph::pipeline::{run_pipeline, PipelineOptions};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub embedders: Vec<String>,
    pub documents: usize,
    pub k: usize,
    pub seed: u64,
    /// `ari[i][j]` compares the clusterings under embedders `i` and `j`.
    pub ari: Vec<Vec<f64>>,
}

impl CompareReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("compare report serializes")
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let report: Self = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let n = report.embedders.len();
        if report.ari.len() != n || report.ari.iter().any(|row| row.len() != n) {
            bail!("{}: ARI matrix is not {n}x{n}", path.display());
        }
        Ok(report)
    }
}

/// Runs the map pipeline once per embedding of the same corpus.
pub fn compare_embedders(
    corpora: &[EmbeddedCorpus],
    extractor: &dyn TermExtractor,
    options: &PipelineOptions,
) -> anyhow::Result<CompareReport> {
    if corpora.len() < 2 {
        bail!("comparison needs at least two embedders, got {}", corpora.len());
    }
    let ids: Vec<&str> = corpora[0].corpus().ids().collect();
    for ec in &corpora[1..] {
        if !ec.corpus().ids().eq(ids.iter().copied()) {
            bail!("embedder {} covers different documents", ec.embedder_name());
        }
    }
    let mut clusterings = Vec::with_capacity(corpora.len());
    for ec in corpora {
        let out = run_pipeline(ec, extractor, options).with_context(|| format!("pipeline for {}", ec.embedder_name()))?;
        clusterings.push(out.clustering);
    }
    Ok(CompareReport {
        embedders: corpora.iter().map(|ec| ec.embedder_name().to_string()).collect(),
        documents: ids.len(),
        k: options.k,
        seed: options.seed,
        ari: ari_matrix(&clusterings)?,
    })
}
