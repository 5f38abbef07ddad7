use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Clustering, ClusteringError};
use crate::point::Point;

pub const MAX_ITERATIONS: usize = 300;
pub const DEFAULT_RESTARTS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KMeansOptions {
    /// Lloyd iteration cap.
    pub max_iterations: usize,
    /// Independent seeded runs (seeds `seed..seed+restarts`); the lowest
    /// inertia wins, ties go to the lowest seed.
    pub restarts: usize,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        Self {
            max_iterations: MAX_ITERATIONS,
            restarts: DEFAULT_RESTARTS,
        }
    }
}

/// Seeded k-means with the default restart count.
pub fn kmeans(points: &[Point], k: usize, seed: u64) -> Result<Clustering, ClusteringError> {
    kmeans_with(points, k, seed, &KMeansOptions::default())
}

pub fn kmeans_with(
    points: &[Point],
    k: usize,
    seed: u64,
    options: &KMeansOptions,
) -> Result<Clustering, ClusteringError> {
    if k == 0 {
        return Err(ClusteringError::ZeroClusters);
    }
    let distinct = count_distinct(points);
    if k > distinct {
        return Err(ClusteringError::TooFewDistinctPoints { k, distinct });
    }
    let mut best: Option<Clustering> = None;
    for offset in 0..options.restarts.max(1) as u64 {
        let run = single_run(points, k, seed.wrapping_add(offset), options.max_iterations);
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one run"))
}

fn count_distinct(points: &[Point]) -> usize {
    let mut keys: Vec<(u64, u64)> = points
        .iter()
        .map(|p| ((p.x + 0.0).to_bits(), (p.y + 0.0).to_bits()))
        .collect();
    keys.sort_unstable();
    keys.dedup();
    keys.len()
}

fn single_run(points: &[Point], k: usize, seed: u64, max_iterations: usize) -> Clustering {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = plus_plus_init(points, k, &mut rng);
    let mut labels = assign(points, &centroids);
    repair_empty(points, &mut labels, &mut centroids, k);

    // Lloyd to a fixpoint, then single-point transfers (which can escape
    // Lloyd-stable local optima), repeated until neither changes anything.
    let mut iterations = 0;
    loop {
        let mut previous = inertia(points, &labels, &centroids);
        while iterations < max_iterations {
            iterations += 1;
            centroids = means(points, &labels, k);
            let next = assign(points, &centroids);
            let changed = next != labels;
            labels = next;
            repair_empty(points, &mut labels, &mut centroids, k);
            let current = inertia(points, &labels, &means(points, &labels, k));
            debug_assert!(
                current <= previous * (1.0 + 1e-12) + 1e-12,
                "inertia increased: {previous} -> {current}"
            );
            previous = current;
            if !changed {
                break;
            }
        }
        centroids = means(points, &labels, k);
        if transfer_pass(points, &mut labels, k) == 0 || iterations >= max_iterations {
            break;
        }
    }

    let centroids = means(points, &labels, k);
    let inertia = inertia(points, &labels, &centroids);
    Clustering {
        labels,
        k,
        centroids,
        inertia,
        seed,
    }
}

/// Greedy k-means++ seeding: the first centre is uniform; each later step
/// draws `2 + ln k` candidates with probability proportional to squared
/// distance to the nearest chosen centre and keeps the candidate that
/// lowers the total squared distance the most.
fn plus_plus_init(points: &[Point], k: usize, rng: &mut ChaCha8Rng) -> Vec<Point> {
    let n = points.len();
    let trials = 2 + (k as f64).ln().floor() as usize;
    let mut centroids = Vec::with_capacity(k);
    centroids.push(points[rng.random_range(0..n)]);
    let mut d2: Vec<f64> = points.iter().map(|p| p.dist2(centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let mut best: Option<(f64, Point, Vec<f64>)> = None;
        for _ in 0..trials {
            let c = points[sample_index(&d2, rng.random::<f64>() * total)];
            let next: Vec<f64> = d2.iter().zip(points).map(|(d, p)| d.min(p.dist2(c))).collect();
            let potential: f64 = next.iter().sum();
            if best.as_ref().is_none_or(|(b, _, _)| potential < *b) {
                best = Some((potential, c, next));
            }
        }
        let (_, c, next) = best.expect("at least one trial");
        centroids.push(c);
        d2 = next;
    }
    centroids
}

/// Index whose cumulative weight first exceeds `target`, skipping zero
/// weights.
fn sample_index(weights: &[f64], target: f64) -> usize {
    let mut acc = 0.0;
    let mut chosen = None;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        acc += w;
        chosen = Some(i);
        if acc > target {
            break;
        }
    }
    chosen.expect("a point at positive distance exists")
}

fn nearest(p: Point, centroids: &[Point]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, &q) in centroids.iter().enumerate() {
        let d = p.dist2(q);
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    best
}

fn assign(points: &[Point], centroids: &[Point]) -> Vec<usize> {
    points.iter().map(|&p| nearest(p, centroids)).collect()
}

fn means(points: &[Point], labels: &[usize], k: usize) -> Vec<Point> {
    let mut sums = vec![(0.0, 0.0, 0usize); k];
    for (p, &l) in points.iter().zip(labels) {
        sums[l].0 += p.x;
        sums[l].1 += p.y;
        sums[l].2 += 1;
    }
    sums.into_iter()
        .map(|(sx, sy, c)| {
            if c == 0 {
                Point::new(f64::NAN, f64::NAN)
            } else {
                Point::new(sx / c as f64, sy / c as f64)
            }
        })
        .collect()
}

fn inertia(points: &[Point], labels: &[usize], centroids: &[Point]) -> f64 {
    points
        .iter()
        .zip(labels)
        .map(|(p, &l)| p.dist2(centroids[l]))
        .sum()
}

/// Reseeds each empty cluster at the point farthest from its own centroid.
fn repair_empty(points: &[Point], labels: &mut [usize], centroids: &mut Vec<Point>, k: usize) {
    loop {
        let mut sizes = vec![0usize; k];
        for &l in labels.iter() {
            sizes[l] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return;
        };
        let current = means(points, labels, k);
        let mut far = None;
        let mut far_d = -1.0;
        for (i, p) in points.iter().enumerate() {
            if sizes[labels[i]] < 2 {
                continue;
            }
            let d = p.dist2(current[labels[i]]);
            if d > far_d {
                far_d = d;
                far = Some(i);
            }
        }
        let i = far.expect("k <= n guarantees a donor cluster");
        labels[i] = empty;
        *centroids = means(points, labels, k);
    }
}

/// One pass of single-point transfers: move a point to another cluster when
/// that strictly lowers the total within-cluster sum of squares. Returns the
/// number of moves.
fn transfer_pass(points: &[Point], labels: &mut [usize], k: usize) -> usize {
    let mut sizes = vec![0usize; k];
    for &l in labels.iter() {
        sizes[l] += 1;
    }
    let mut centroids = means(points, labels, k);
    let mut moves = 0;
    for (i, &p) in points.iter().enumerate() {
        let from = labels[i];
        if sizes[from] < 2 {
            continue;
        }
        let n_from = sizes[from] as f64;
        let removal_gain = n_from / (n_from - 1.0) * p.dist2(centroids[from]);
        let mut best = None;
        let mut best_cost = removal_gain;
        for to in (0..k).filter(|&c| c != from) {
            let n_to = sizes[to] as f64;
            let cost = n_to / (n_to + 1.0) * p.dist2(centroids[to]);
            if cost < best_cost {
                best_cost = cost;
                best = Some(to);
            }
        }
        let Some(to) = best else { continue };
        if removal_gain - best_cost <= 1e-12 * removal_gain.max(1e-300) {
            continue;
        }
        let (nf, nt) = (sizes[from] as f64, sizes[to] as f64);
        centroids[from] = Point::new(
            (centroids[from].x * nf - p.x) / (nf - 1.0),
            (centroids[from].y * nf - p.y) / (nf - 1.0),
        );
        centroids[to] = Point::new(
            (centroids[to].x * nt + p.x) / (nt + 1.0),
            (centroids[to].y * nt + p.y) / (nt + 1.0),
        );
        sizes[from] -= 1;
        sizes[to] += 1;
        labels[i] = to;
        moves += 1;
    }
    moves
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Vec<Point> {
        vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(0.0, 1.0),
            Point::new(1.0, 1.0),
        ]
    }

    /// Smallest 2-partition inertia by enumerating every labelling.
    fn brute_force_two_partition(points: &[Point]) -> f64 {
        let n = points.len();
        let mut best = f64::INFINITY;
        for mask in 1..(1u32 << n) - 1 {
            let labels: Vec<usize> = (0..n).map(|i| ((mask >> i) & 1) as usize).collect();
            let c = means(points, &labels, 2);
            best = best.min(inertia(points, &labels, &c));
        }
        best
    }

    #[test]
    fn unit_square_k2_is_optimal_for_every_seed() {
        let pts = square();
        let oracle = brute_force_two_partition(&pts);
        assert!((oracle - 1.0).abs() < 1e-12);
        for seed in 0..200 {
            let c = kmeans(&pts, 2, seed).unwrap();
            assert!((c.inertia - oracle).abs() < 1e-12, "seed {seed}: {}", c.inertia);
        }
    }

    #[test]
    fn k1_is_the_mean() {
        let pts = vec![Point::new(0.0, 0.0), Point::new(2.0, 0.0), Point::new(1.0, 3.0)];
        let c = kmeans(&pts, 1, 9).unwrap();
        assert_eq!(c.labels, [0, 0, 0]);
        assert!((c.centroids[0].x - 1.0).abs() < 1e-12);
        assert!((c.centroids[0].y - 1.0).abs() < 1e-12);
        assert!((c.inertia - 8.0).abs() < 1e-12);
    }

    #[test]
    fn k_equals_n_gives_singletons() {
        let pts = vec![
            Point::new(0.0, 0.0),
            Point::new(5.0, 1.0),
            Point::new(-3.0, 2.0),
            Point::new(1.0, 1.0),
        ];
        let c = kmeans(&pts, 4, 3).unwrap();
        let mut labels = c.labels.clone();
        labels.sort_unstable();
        assert_eq!(labels, [0, 1, 2, 3]);
        assert_eq!(c.inertia, 0.0);
    }

    #[test]
    fn too_many_clusters() {
        let pts = vec![Point::new(1.0, 1.0); 5];
        assert_eq!(
            kmeans(&pts, 2, 0),
            Err(ClusteringError::TooFewDistinctPoints { k: 2, distinct: 1 })
        );
        assert_eq!(kmeans(&pts, 0, 0), Err(ClusteringError::ZeroClusters));
    }

    #[test]
    fn duplicates_with_enough_distinct_points() {
        let mut pts = vec![Point::new(0.0, 0.0); 10];
        pts.push(Point::new(1.0, 0.0));
        pts.push(Point::new(2.0, 0.0));
        let c = kmeans(&pts, 3, 5).unwrap();
        c.validate(pts.len()).unwrap();
        assert_eq!(c.inertia, 0.0);
    }

    #[test]
    fn restarts_pick_lowest_inertia() {
        let pts: Vec<Point> = (0..60)
            .map(|i| {
                let blob = (i % 4) as f64;
                Point::new(blob * 10.0 + (i as f64 * 0.37).sin(), (blob % 2.0) * 7.0 + (i as f64 * 0.91).cos())
            })
            .collect();
        let many = kmeans_with(&pts, 4, 0, &KMeansOptions { restarts: 8, ..Default::default() }).unwrap();
        let single = KMeansOptions { restarts: 1, ..Default::default() };
        for seed in 0..8 {
            assert!(many.inertia <= kmeans_with(&pts, 4, seed, &single).unwrap().inertia);
        }
    }
}
