//! Seeded reduction of document embeddings to 2D map coordinates.

mod pca;
mod trustworthiness;
mod tsne;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use pca::pca;
pub use trustworthiness::{trustworthiness, trustworthiness_of};
pub use tsne::TsneParams;

use crate::embedding::EmbeddedCorpus;
use crate::point::Point;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ProjectionError {
    #[error("projection needs at least 3 documents, got {0}")]
    TooFewDocuments(usize),
    #[error("embedding dimension {0} is below 2")]
    DimensionTooSmall(usize),
    #[error("k={k} is too large for {n} points")]
    InvalidNeighbors { k: usize, n: usize },
    #[error("{high} high-dimensional points but {low} projected points")]
    LengthMismatch { high: usize, low: usize },
}

/// 2D coordinates, one per document, in corpus order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projection2D {
    pub points: Vec<Point>,
    pub method_tag: String,
    pub seed: u64,
    pub params: BTreeMap<String, f64>,
}

impl Projection2D {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Dimension reduction to the plane. Implementations must be pure functions
/// of `(vectors, seed)` and return mean-centred coordinates.
pub trait Projector: Send + Sync {
    fn method_tag(&self) -> &str;

    fn project(&self, vectors: &[Vec<f64>], seed: u64) -> Result<Projection2D, ProjectionError>;
}

#[derive(Debug, Clone, Default)]
pub struct TsneProjector {
    pub params: TsneParams,
}

impl TsneProjector {
    pub fn new(params: TsneParams) -> Self {
        Self { params }
    }
}

impl Projector for TsneProjector {
    fn method_tag(&self) -> &str {
        "tsne-exact"
    }

    fn project(&self, vectors: &[Vec<f64>], seed: u64) -> Result<Projection2D, ProjectionError> {
        let n = vectors.len();
        if n < 3 {
            return Err(ProjectionError::TooFewDocuments(n));
        }
        let dim = vectors[0].len();
        if dim < 2 {
            return Err(ProjectionError::DimensionTooSmall(dim));
        }

        let p = &self.params;
        let mut params = BTreeMap::from([
            ("perplexity".to_string(), p.effective_perplexity(n)),
            ("iterations".to_string(), p.iterations as f64),
            ("learning_rate".to_string(), p.learning_rate),
            ("early_exaggeration".to_string(), p.early_exaggeration),
            ("exaggeration_iterations".to_string(), p.exaggeration_iterations as f64),
        ]);

        if vectors.iter().all(|v| v == &vectors[0]) {
            log::warn!("all {n} embedding vectors are identical; placing every point at the origin");
            return Ok(Projection2D {
                points: vec![Point::ORIGIN; n],
                method_tag: self.method_tag().to_string(),
                seed,
                params,
            });
        }

        let reduced;
        let input = if dim > p.pca_dimensions {
            reduced = pca(vectors, p.pca_dimensions);
            params.insert("pca_dimensions".to_string(), p.pca_dimensions as f64);
            &reduced
        } else {
            vectors
        };
        let (points, kl) = tsne::embed(input, p, seed);
        params.insert("kl_divergence".to_string(), kl);
        Ok(Projection2D {
            points,
            method_tag: self.method_tag().to_string(),
            seed,
            params,
        })
    }
}

/// Projects an embedded corpus with exact t-SNE.
pub fn project_2d(
    ec: &EmbeddedCorpus,
    seed: u64,
    params: &TsneParams,
) -> Result<Projection2D, ProjectionError> {
    TsneProjector::new(params.clone()).project(ec.vectors(), seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fast() -> TsneParams {
        TsneParams {
            iterations: 300,
            ..Default::default()
        }
    }

    #[test]
    fn rejects_tiny_inputs() {
        let proj = TsneProjector::new(fast());
        assert_eq!(
            proj.project(&[vec![0.0, 1.0], vec![1.0, 0.0]], 0),
            Err(ProjectionError::TooFewDocuments(2))
        );
    }

    #[test]
    fn identical_vectors_collapse_to_origin() {
        let proj = TsneProjector::new(fast());
        let out = proj.project(&vec![vec![0.5, 0.25, 1.0]; 5], 1).unwrap();
        assert!(out.points.iter().all(|p| *p == Point::ORIGIN));
    }

    #[test]
    fn same_seed_same_bits_and_centred() {
        let rows: Vec<Vec<f64>> = (0..25)
            .map(|i| vec![(i % 5) as f64 * 4.0, (i / 5) as f64, ((i * 7) % 3) as f64])
            .collect();
        let proj = TsneProjector::new(fast());
        let a = proj.project(&rows, 42).unwrap();
        let b = proj.project(&rows, 42).unwrap();
        let bits = |p: &Projection2D| -> Vec<u64> {
            p.points.iter().flat_map(|q| [q.x.to_bits(), q.y.to_bits()]).collect()
        };
        assert_eq!(bits(&a), bits(&b));
        let n = a.len() as f64;
        let mx = a.points.iter().map(|p| p.x).sum::<f64>() / n;
        let my = a.points.iter().map(|p| p.y).sum::<f64>() / n;
        assert!(mx.abs() < 1e-9 && my.abs() < 1e-9);
        assert!(a.points.iter().all(|p| p.x.is_finite() && p.y.is_finite()));
        assert_eq!(a.params["perplexity"], 8.0);
    }
}
