use nalgebra::{DMatrix, SymmetricEigen};

/// Projects row vectors onto their top `components` principal axes.
///
/// Uses the covariance matrix when `n > d` and the Gram matrix otherwise so
/// the eigenproblem is never larger than `min(n, d)`. Each component's sign
/// is fixed so that its largest-magnitude loading is positive.
pub fn pca(rows: &[Vec<f64>], components: usize) -> Vec<Vec<f64>> {
    let n = rows.len();
    let d = rows.first().map_or(0, Vec::len);
    let k = components.min(n).min(d);
    if n == 0 || k == 0 {
        return vec![Vec::new(); n];
    }

    let mut mean = vec![0.0; d];
    for row in rows {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let centered = DMatrix::from_fn(n, d, |i, j| rows[i][j] - mean[j]);

    let scores = if n > d {
        covariance_route(&centered, k)
    } else {
        gram_route(&centered, k)
    };

    (0..n)
        .map(|i| (0..k).map(|c| scores[(i, c)]).collect())
        .collect()
}

fn covariance_route(centered: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let d = centered.ncols();
    let cov = centered.transpose() * centered;
    let (vals, vecs) = sorted_eigen(cov);
    let mut basis = DMatrix::zeros(d, k);
    for (c, &(_, idx)) in vals.iter().take(k).enumerate() {
        let mut col = vecs.column(idx).into_owned();
        fix_sign(col.as_mut_slice());
        basis.set_column(c, &col);
    }
    centered * basis
}

fn gram_route(centered: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let n = centered.nrows();
    let gram = centered * centered.transpose();
    let (vals, vecs) = sorted_eigen(gram);
    let mut scores = DMatrix::zeros(n, k);
    for (c, &(lambda, idx)) in vals.iter().take(k).enumerate() {
        let mut col = vecs.column(idx).into_owned();
        // Orient by the implied loading vector so both routes agree on sign.
        let loading = centered.transpose() * &col;
        if dominant_is_negative(loading.as_slice()) {
            col.neg_mut();
        }
        scores.set_column(c, &(col * lambda.max(0.0).sqrt()));
    }
    scores
}

fn sorted_eigen(m: DMatrix<f64>) -> (Vec<(f64, usize)>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m);
    let mut vals: Vec<(f64, usize)> = eig
        .eigenvalues
        .iter()
        .copied()
        .enumerate()
        .map(|(i, v)| (v, i))
        .collect();
    vals.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    (vals, eig.eigenvectors)
}

fn dominant_is_negative(v: &[f64]) -> bool {
    v.iter()
        .copied()
        .fold(0.0_f64, |best, x| if x.abs() > best.abs() { x } else { best })
        < 0.0
}

fn fix_sign(v: &mut [f64]) {
    if dominant_is_negative(v) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}
