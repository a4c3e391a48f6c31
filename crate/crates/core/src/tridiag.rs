//! Small helpers for symmetric tridiagonal matrices given by their diagonal
//! `alphas` and off-diagonal `betas` (`betas.len() == alphas.len() - 1`).

use nalgebra::DMatrix;

pub fn to_dense(alphas: &[f64], betas: &[f64]) -> DMatrix<f64> {
    let k = alphas.len();
    debug_assert!(betas.len() + 1 >= k);
    let mut t = DMatrix::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alphas[i];
        if i + 1 < k {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    t
}

/// All eigenvalues, ascending.
pub fn eigenvalues(alphas: &[f64], betas: &[f64]) -> Vec<f64> {
    if alphas.is_empty() {
        return Vec::new();
    }
    let mut ev: Vec<f64> = to_dense(alphas, betas).symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Number of eigenvalues strictly below `x` (Sturm sequence count).
fn count_below(alphas: &[f64], betas: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for (i, &a) in alphas.iter().enumerate() {
        let b2 = if i == 0 { 0.0 } else { betas[i - 1] * betas[i - 1] };
        q = a - x - if i == 0 { 0.0 } else { b2 / q };
        if q == 0.0 {
            q = -f64::EPSILON * (a.abs() + x.abs()).max(f64::MIN_POSITIVE);
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Largest eigenvalue by bisection on the Sturm count, O(k) per probe.
pub fn max_eigenvalue(alphas: &[f64], betas: &[f64]) -> f64 {
    let k = alphas.len();
    assert!(k > 0, "empty tridiagonal matrix");
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..k {
        let r = if i > 0 { betas[i - 1].abs() } else { 0.0 } + if i + 1 < k { betas[i].abs() } else { 0.0 };
        lo = lo.min(alphas[i] - r);
        hi = hi.max(alphas[i] + r);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if count_below(alphas, betas, mid) == k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Residual norm `|beta_next * s_k|` of the Ritz pair for the largest Ritz
/// value, where `s_k` is the last component of its unit eigenvector.
pub fn ritz_residual_max(alphas: &[f64], betas: &[f64], beta_next: f64) -> f64 {
    let eig = to_dense(alphas, betas).symmetric_eigen();
    let (idx, _) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty");
    let last = eig.eigenvectors[(alphas.len() - 1, idx)];
    (beta_next * last).abs()
}
