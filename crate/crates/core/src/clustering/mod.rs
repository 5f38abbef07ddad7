//! k-means partitioning of 2D points and partition comparison.

mod ari;
mod kmeans;

use serde::{Deserialize, Serialize};

pub use ari::{adjusted_rand_index, adjusted_rand_index_labels, ari_matrix};
pub use kmeans::{kmeans, kmeans_with, KMeansOptions, DEFAULT_RESTARTS, MAX_ITERATIONS};

use crate::point::Point;

/// Default cluster count for topic maps.
pub const DEFAULT_MAP_K: usize = 15;
/// Default cluster count for the preference-set topic diff.
pub const DEFAULT_DPO_K: usize = 30;
/// Default cluster count in frame space.
pub const DEFAULT_FRAME_K: usize = 5;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ClusteringError {
    #[error("k must be at least 1")]
    ZeroClusters,
    #[error("k={k} exceeds the number of distinct points ({distinct})")]
    TooFewDistinctPoints { k: usize, distinct: usize },
    #[error("partitions cover {left} and {right} documents")]
    LengthMismatch { left: usize, right: usize },
    #[error("invalid clustering: {0}")]
    Invalid(String),
}

/// A partition of documents into `k` non-empty clusters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clustering {
    pub labels: Vec<usize>,
    pub k: usize,
    pub centroids: Vec<Point>,
    pub inertia: f64,
    pub seed: u64,
}

impl Clustering {
    /// Checks label range, non-empty clusters and centroid count.
    pub fn validate(&self, n: usize) -> Result<(), ClusteringError> {
        if self.labels.len() != n {
            return Err(ClusteringError::Invalid(format!(
                "{} labels for {n} documents",
                self.labels.len()
            )));
        }
        if self.centroids.len() != self.k {
            return Err(ClusteringError::Invalid(format!(
                "{} centroids for k={}",
                self.centroids.len(),
                self.k
            )));
        }
        let sizes = self.sizes();
        if let Some(&bad) = self.labels.iter().find(|&&l| l >= self.k) {
            return Err(ClusteringError::Invalid(format!("label {bad} out of range")));
        }
        if let Some(c) = sizes.iter().position(|&s| s == 0) {
            return Err(ClusteringError::Invalid(format!("cluster {c} is empty")));
        }
        Ok(())
    }

    /// Number of documents per cluster.
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.labels {
            if l < self.k {
                sizes[l] += 1;
            }
        }
        sizes
    }

    /// Document indices of cluster `c`, ascending.
    pub fn members(&self, c: usize) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|&(_, &l)| l == c)
            .map(|(i, _)| i)
            .collect()
    }
}
