use std::collections::HashSet;

use rayon::prelude::*;

use super::{Projection2D, ProjectionError};
use crate::embedding::EmbeddedCorpus;
use crate::point::Point;

/// Neighbour order of every point except `i`, by distance then index.
fn neighbour_order(dist: impl Fn(usize) -> f64, i: usize, n: usize) -> Vec<usize> {
    let d: Vec<f64> = (0..n).map(&dist).collect();
    let mut order: Vec<usize> = (0..n).filter(|&j| j != i).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]).then(a.cmp(&b)));
    order
}

/// Rank-based trustworthiness of a 2D layout:
///
/// `T(k) = 1 - 2 / (n k (2n - 3k - 1)) * Σ_i Σ_{j ∈ U_k(i)} (r(i, j) - k)`
///
/// where `U_k(i)` are the low-dimensional k nearest neighbours of `i` that are
/// not among its high-dimensional k nearest, and `r(i, j)` is the 1-based
/// rank of `j` among `i`'s high-dimensional neighbours. Distance ties are
/// broken by index.
pub fn trustworthiness(high: &[Vec<f64>], low: &[Point], k: usize) -> Result<f64, ProjectionError> {
    let n = high.len();
    if low.len() != n {
        return Err(ProjectionError::LengthMismatch {
            high: n,
            low: low.len(),
        });
    }
    if k == 0 || k >= n || 2 * n <= 3 * k + 1 {
        return Err(ProjectionError::InvalidNeighbors { k, n });
    }

    let penalty: f64 = (0..n)
        .into_par_iter()
        .map(|i| {
            let high_order = neighbour_order(
                |j| high[i].iter().zip(&high[j]).map(|(a, b)| (a - b) * (a - b)).sum(),
                i,
                n,
            );
            let mut rank = vec![0usize; n];
            for (r, &j) in high_order.iter().enumerate() {
                rank[j] = r + 1;
            }
            let high_knn: HashSet<usize> = high_order[..k].iter().copied().collect();
            let low_order = neighbour_order(|j| low[i].dist2(low[j]), i, n);
            low_order[..k]
                .iter()
                .filter(|j| !high_knn.contains(j))
                .map(|&j| (rank[j] - k) as f64)
                .sum::<f64>()
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum();

    let (n, kf) = (n as f64, k as f64);
    Ok(1.0 - 2.0 / (n * kf * (2.0 * n - 3.0 * kf - 1.0)) * penalty)
}

pub fn trustworthiness_of(
    high: &EmbeddedCorpus,
    low: &Projection2D,
    k: usize,
) -> Result<f64, ProjectionError> {
    trustworthiness(high.vectors(), &low.points, k)
}
