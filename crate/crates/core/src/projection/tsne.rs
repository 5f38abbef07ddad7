//! Exact t-SNE: dense affinities, full O(n²) gradient each iteration.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::point::Point;

/// Floor applied to joint probabilities.
const P_FLOOR: f64 = 1e-12;
const ENTROPY_TOLERANCE: f64 = 1e-5;
const MAX_BISECTION_STEPS: usize = 200;
const MIN_GAIN: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct TsneParams {
    pub perplexity: f64,
    pub iterations: usize,
    pub learning_rate: f64,
    pub early_exaggeration: f64,
    pub exaggeration_iterations: usize,
    /// Inputs wider than this are reduced with PCA first.
    pub pca_dimensions: usize,
    /// Standard deviation of the seeded Gaussian initial layout.
    pub init_std: f64,
    pub initial_momentum: f64,
    pub final_momentum: f64,
}

impl Default for TsneParams {
    fn default() -> Self {
        Self {
            perplexity: 30.0,
            iterations: 1000,
            learning_rate: 200.0,
            early_exaggeration: 12.0,
            exaggeration_iterations: 250,
            pca_dimensions: 50,
            init_std: 1e-4,
            initial_momentum: 0.5,
            final_momentum: 0.8,
        }
    }
}

impl TsneParams {
    /// Perplexity clamped to `(n - 1) / 3` for small inputs.
    pub fn effective_perplexity(&self, n: usize) -> f64 {
        self.perplexity.min((n as f64 - 1.0) / 3.0)
    }
}

pub(crate) fn squared_distances(rows: &[Vec<f64>]) -> Vec<f64> {
    let n = rows.len();
    let mut d = vec![0.0; n * n];
    d.par_chunks_mut(n).enumerate().for_each(|(i, out)| {
        for (j, slot) in out.iter_mut().enumerate() {
            if i != j {
                *slot = rows[i]
                    .iter()
                    .zip(&rows[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
            }
        }
    });
    d
}

/// Conditional affinities of row `i`, bisecting the Gaussian precision until
/// the row entropy equals `ln(perplexity)`.
fn conditional_row(dist: &[f64], i: usize, target_entropy: f64, out: &mut [f64]) {
    let n = dist.len();
    let min_d = dist
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, &d)| d)
        .fold(f64::INFINITY, f64::min);

    let mut beta = 1.0;
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for _ in 0..MAX_BISECTION_STEPS {
        let mut sum = 0.0;
        let mut weighted = 0.0;
        for j in 0..n {
            if j == i {
                out[j] = 0.0;
                continue;
            }
            let shifted = dist[j] - min_d;
            let p = (-shifted * beta).exp();
            out[j] = p;
            sum += p;
            weighted += shifted * p;
        }
        let entropy = sum.ln() + beta * weighted / sum;
        let diff = entropy - target_entropy;
        if diff.abs() < ENTROPY_TOLERANCE {
            break;
        }
        if diff > 0.0 {
            lo = beta;
            beta = if hi.is_finite() { (beta + hi) / 2.0 } else { beta * 2.0 };
        } else {
            hi = beta;
            beta = if lo.is_finite() { (beta + lo) / 2.0 } else { beta / 2.0 };
        }
    }
    let sum: f64 = out.iter().sum();
    out.iter_mut().for_each(|p| *p /= sum);
}

/// Symmetrized joint probabilities `(P + Pᵀ) / 2n`, floored at 1e-12.
pub(crate) fn joint_probabilities(dist: &[f64], n: usize, perplexity: f64) -> Vec<f64> {
    let target = perplexity.ln();
    let mut cond = vec![0.0; n * n];
    cond.par_chunks_mut(n)
        .enumerate()
        .for_each(|(i, row)| conditional_row(&dist[i * n..(i + 1) * n], i, target, row));

    let mut joint = vec![0.0; n * n];
    let denom = 2.0 * n as f64;
    joint.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        for (j, slot) in row.iter_mut().enumerate() {
            if i != j {
                *slot = ((cond[i * n + j] + cond[j * n + i]) / denom).max(P_FLOOR);
            }
        }
    });
    joint
}

/// Runs the optimisation and returns mean-centred coordinates plus the final
/// KL divergence.
pub(crate) fn embed(rows: &[Vec<f64>], params: &TsneParams, seed: u64) -> (Vec<Point>, f64) {
    let n = rows.len();
    let dist = squared_distances(rows);
    let p = joint_probabilities(&dist, n, params.effective_perplexity(n));
    drop(dist);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, params.init_std).expect("finite init_std");
    let mut y: Vec<[f64; 2]> = (0..n)
        .map(|_| [normal.sample(&mut rng), normal.sample(&mut rng)])
        .collect();
    let mut update = vec![[0.0f64; 2]; n];
    let mut gains = vec![[1.0f64; 2]; n];

    for iter in 0..params.iterations {
        let exaggerating = iter < params.exaggeration_iterations;
        let exaggeration = if exaggerating { params.early_exaggeration } else { 1.0 };
        let momentum = if exaggerating {
            params.initial_momentum
        } else {
            params.final_momentum
        };
        let grad = gradient(&p, &y, exaggeration);

        for i in 0..n {
            for c in 0..2 {
                let g = grad[i][c];
                let same_sign = (g > 0.0) == (update[i][c] > 0.0);
                let gain = if same_sign { gains[i][c] * 0.8 } else { gains[i][c] + 0.2 };
                gains[i][c] = gain.max(MIN_GAIN);
                update[i][c] = momentum * update[i][c] - params.learning_rate * gains[i][c] * g;
                y[i][c] += update[i][c];
            }
        }
        recenter(&mut y);
    }

    let kl = kl_divergence(&p, &y);
    (y.into_iter().map(|[a, b]| Point::new(a, b)).collect(), kl)
}

fn student_kernel(a: [f64; 2], b: [f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    1.0 / (1.0 + dx * dx + dy * dy)
}

/// Normalisation constant Z = Σ_{i≠j} (1 + |yi - yj|²)⁻¹, summed row by row
/// in index order.
fn normalizer(y: &[[f64; 2]]) -> f64 {
    let rows: Vec<f64> = (0..y.len())
        .into_par_iter()
        .map(|i| {
            let mut s = 0.0;
            for j in 0..y.len() {
                if i != j {
                    s += student_kernel(y[i], y[j]);
                }
            }
            s
        })
        .collect();
    rows.iter().sum()
}

fn gradient(p: &[f64], y: &[[f64; 2]], exaggeration: f64) -> Vec<[f64; 2]> {
    let n = y.len();
    let z = normalizer(y);
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut g = [0.0; 2];
            let prow = &p[i * n..(i + 1) * n];
            for j in 0..n {
                if i == j {
                    continue;
                }
                let num = student_kernel(y[i], y[j]);
                let coeff = (exaggeration * prow[j] - num / z) * num;
                g[0] += coeff * (y[i][0] - y[j][0]);
                g[1] += coeff * (y[i][1] - y[j][1]);
            }
            [4.0 * g[0], 4.0 * g[1]]
        })
        .collect()
}

fn kl_divergence(p: &[f64], y: &[[f64; 2]]) -> f64 {
    let n = y.len();
    let z = normalizer(y);
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut s = 0.0;
            for j in 0..n {
                if i != j {
                    let pij = p[i * n + j];
                    let qij = (student_kernel(y[i], y[j]) / z).max(P_FLOOR);
                    s += pij * (pij / qij).ln();
                }
            }
            s
        })
        .collect();
    rows.iter().sum()
}

pub(crate) fn recenter(y: &mut [[f64; 2]]) {
    let n = y.len() as f64;
    let mx = y.iter().map(|p| p[0]).sum::<f64>() / n;
    let my = y.iter().map(|p| p[1]).sum::<f64>() / n;
    for p in y.iter_mut() {
        p[0] -= mx;
        p[1] -= my;
    }
}
