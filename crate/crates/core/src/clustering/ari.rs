use std::collections::HashMap;

use super::{Clustering, ClusteringError};

fn comb2(n: usize) -> i128 {
    let n = n as i128;
    n * (n - 1) / 2
}

/// Adjusted Rand Index of two labellings of the same documents.
///
/// Uses the pair-counting contingency formulation. The pair counts are
/// combined in integers, scaled by twice the number of pairs, so the result
/// is rounded once at the final division. When the expected and maximum
/// index coincide (both partitions trivial) the index is 1.
pub fn adjusted_rand_index_labels(left: &[usize], right: &[usize]) -> Result<f64, ClusteringError> {
    if left.len() != right.len() {
        return Err(ClusteringError::LengthMismatch {
            left: left.len(),
            right: right.len(),
        });
    }
    let n = left.len();
    if n < 2 {
        return Ok(1.0);
    }
    let mut a = HashMap::new();
    let mut b = HashMap::new();
    let mut cells = HashMap::new();
    for (&l, &r) in left.iter().zip(right) {
        *a.entry(l).or_insert(0usize) += 1;
        *b.entry(r).or_insert(0usize) += 1;
        *cells.entry((l, r)).or_insert(0usize) += 1;
    }
    let index: i128 = cells.values().map(|&c| comb2(c)).sum();
    let sum_a: i128 = a.values().map(|&c| comb2(c)).sum();
    let sum_b: i128 = b.values().map(|&c| comb2(c)).sum();
    let pairs = comb2(n);
    let numerator = 2 * pairs * index - 2 * sum_a * sum_b;
    let denominator = pairs * (sum_a + sum_b) - 2 * sum_a * sum_b;
    if denominator == 0 {
        return Ok(1.0);
    }
    Ok(numerator as f64 / denominator as f64)
}

pub fn adjusted_rand_index(a: &Clustering, b: &Clustering) -> Result<f64, ClusteringError> {
    adjusted_rand_index_labels(&a.labels, &b.labels)
}

/// Pairwise ARI of several partitions of the same documents. The result is
/// symmetric with a unit diagonal.
pub fn ari_matrix(partitions: &[Clustering]) -> Result<Vec<Vec<f64>>, ClusteringError> {
    let m = partitions.len();
    let mut matrix = vec![vec![1.0; m]; m];
    for i in 0..m {
        for j in i + 1..m {
            let v = adjusted_rand_index(&partitions[i], &partitions[j])?;
            matrix[i][j] = v;
            matrix[j][i] = v;
        }
    }
    Ok(matrix)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identical_up_to_permutation() {
        let a = [0, 0, 1, 1, 2, 2, 2];
        let b = [5, 5, 3, 3, 9, 9, 9];
        assert_eq!(adjusted_rand_index_labels(&a, &b).unwrap(), 1.0);
    }

    #[test]
    fn three_document_case() {
        // {d1,d2},{d3} vs {d1},{d2,d3}
        let v = adjusted_rand_index_labels(&[0, 0, 1], &[0, 1, 1]).unwrap();
        assert!((v + 0.5).abs() < 1e-12, "{v}");
    }

    #[test]
    fn length_mismatch() {
        assert!(adjusted_rand_index_labels(&[0, 1], &[0]).is_err());
    }

    proptest! {
        #[test]
        fn symmetric_and_self_one(
            pair in (2usize..40).prop_flat_map(|n| (
                proptest::collection::vec(0usize..5, n),
                proptest::collection::vec(0usize..5, n),
            ))
        ) {
            let (a, b) = pair;
            let ab = adjusted_rand_index_labels(&a, &b).unwrap();
            let ba = adjusted_rand_index_labels(&b, &a).unwrap();
            prop_assert!((ab - ba).abs() < 1e-12);
            prop_assert_eq!(adjusted_rand_index_labels(&a, &a).unwrap(), 1.0);
            prop_assert!(ab <= 1.0 + 1e-12);
        }

        #[test]
        fn relabelling_invariant(
            labels in proptest::collection::vec(0usize..4, 2..30),
            other in proptest::collection::vec(0usize..4, 30),
            perm in Just([3usize, 0, 2, 1]).prop_shuffle(),
        ) {
            let other = &other[..labels.len()];
            let relabelled: Vec<usize> = labels.iter().map(|&l| perm[l] + 10).collect();
            let x = adjusted_rand_index_labels(&labels, other).unwrap();
            let y = adjusted_rand_index_labels(&relabelled, other).unwrap();
            prop_assert!((x - y).abs() < 1e-12);
        }
    }
}
