//! Conjugate gradient (the comparison baseline) and ground-truth solves.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::operator::{AdjustedLaplacianOperator, KatzOperator, LinearOperator};
use crate::{dot, norm2};

/// Largest graph for which dense reference factorizations are built.
pub const DENSE_LIMIT: usize = 2000;

/// Relative residual the iterative reference solve must reach.
pub const REFERENCE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub solution: Vec<f64>,
    pub iterations: usize,
    pub matvecs: usize,
    /// `||b - Z x_k||` as tracked by the recurrence, starting with `k = 0`.
    pub residual_history: Vec<f64>,
    /// Probe value after each iteration, when a probe was supplied.
    pub probe_history: Vec<f64>,
    pub converged: bool,
}

/// A scalar functional of a CG iterate.
pub type Probe<'a> = &'a dyn Fn(&[f64]) -> f64;

/// Textbook conjugate gradient from `x0 = 0`.
///
/// Without a probe it stops when `||r_k|| <= tol ||b||`. With a probe `p`
/// (a scalar functional of the iterate, such as one entry of the solution) it
/// also stops once `|p(x_k) - p(x_{k-1})| < tol |p(x_k)|`, whichever comes
/// first.
pub fn conjugate_gradient(
    op: &dyn LinearOperator,
    b: &[f64],
    tol: f64,
    max_iter: usize,
    probe: Option<Probe<'_>>,
) -> Result<SolveReport> {
    let n = op.dim();
    assert_eq!(b.len(), n, "right-hand side length");
    let start = op.matvecs();
    let bnorm = norm2(b);
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut zp = vec![0.0; n];
    let mut rr = dot(&r, &r);
    let mut history = vec![rr.sqrt()];
    let mut probes = Vec::new();
    let mut prev_probe = probe.map(|f| f(&x));
    let mut converged = bnorm == 0.0;
    let mut iterations = 0;
    while !converged && iterations < max_iter {
        op.apply(&p, &mut zp);
        let pzp = dot(&p, &zp);
        if !(pzp > 0.0) {
            return Err(Error::NotPositiveDefinite {
                step: iterations + 1,
                pivot: pzp,
            });
        }
        let step = rr / pzp;
        for i in 0..n {
            x[i] += step * p[i];
            r[i] -= step * zp[i];
        }
        iterations += 1;
        let rr_new = dot(&r, &r);
        history.push(rr_new.sqrt());
        if rr_new.sqrt() <= tol * bnorm {
            converged = true;
        }
        if let Some(f) = probe {
            let v = f(&x);
            probes.push(v);
            if let Some(pv) = prev_probe {
                if v != 0.0 && (v - pv).abs() < tol * v.abs() {
                    converged = true;
                }
            }
            prev_probe = Some(v);
        }
        let ratio = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + ratio * p[i];
        }
    }
    Ok(SolveReport {
        solution: x,
        iterations,
        matvecs: op.matvecs() - start,
        residual_history: history,
        probe_history: probes,
        converged,
    })
}

/// Dense Cholesky solve of an SPD operator.
pub fn dense_solve(op: &dyn LinearOperator, b: &[f64]) -> Result<Vec<f64>> {
    let m = op.to_dense();
    let chol = m.cholesky().ok_or(Error::NotPositiveDefinite { step: 0, pivot: 0.0 })?;
    Ok(chol.solve(&DVector::from_column_slice(b)).as_slice().to_vec())
}

/// CG to relative residual [`REFERENCE_TOL`] with at most `4n` iterations.
/// Fails rather than return an unconverged answer.
pub fn iterative_reference_solve(op: &dyn LinearOperator, b: &[f64]) -> Result<Vec<f64>> {
    let rep = conjugate_gradient(op, b, REFERENCE_TOL, 4 * op.dim(), None)?;
    if !rep.converged {
        let bn = norm2(b);
        return Err(Error::ReferenceFailed {
            residual: rep.residual_history.last().copied().unwrap_or(f64::NAN) / bn,
        });
    }
    Ok(rep.solution)
}

/// Ground-truth solve: dense factorization up to [`DENSE_LIMIT`] unknowns,
/// tightly converged CG beyond that.
pub fn reference_solve(op: &dyn LinearOperator, b: &[f64]) -> Result<Vec<f64>> {
    if op.dim() <= DENSE_LIMIT {
        dense_solve(op, b)
    } else {
        iterative_reference_solve(op, b)
    }
}

/// Dense Katz and commute-time matrices of a small graph.
#[derive(Debug, Clone)]
pub struct DenseReference {
    /// `(I - alpha A)^{-1}`, present when a damping value was given.
    pub katz_resolvent: Option<DMatrix<f64>>,
    /// `L^+ = (L + ee'/n)^{-1} - ee'/n`.
    pub pinv: DMatrix<f64>,
    /// `C_ij = vol (L^+_ii - 2 L^+_ij + L^+_jj)`.
    pub commute: DMatrix<f64>,
    pub volume: f64,
}

impl DenseReference {
    pub fn new(g: &Graph, alpha: Option<f64>) -> Result<Self> {
        let n = g.n();
        if n > DENSE_LIMIT {
            return Err(Error::TooLarge { n, limit: DENSE_LIMIT });
        }
        let katz_resolvent = match alpha {
            Some(a) => {
                let z = KatzOperator::new(g, a)?.to_dense();
                let chol = z
                    .cholesky()
                    .ok_or(Error::NotPositiveDefinite { step: 0, pivot: 0.0 })?;
                Some(chol.inverse())
            }
            None => None,
        };
        let lt = AdjustedLaplacianOperator::new(g).to_dense();
        let chol = lt
            .cholesky()
            .ok_or(Error::NotPositiveDefinite { step: 0, pivot: 0.0 })?;
        let mut pinv = chol.inverse();
        let shift = 1.0 / n as f64;
        pinv.iter_mut().for_each(|v| *v -= shift);
        let vol = g.volume() as f64;
        let commute = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                0.0
            } else {
                let (a, b) = (i.min(j), i.max(j));
                vol * (pinv[(a, a)] - 2.0 * pinv[(a, b)] + pinv[(b, b)])
            }
        });
        Ok(Self {
            katz_resolvent,
            pinv,
            commute,
            volume: vol,
        })
    }

    /// `K = (I - alpha A)^{-1} - I`.
    pub fn katz_matrix(&self) -> Option<DMatrix<f64>> {
        self.katz_resolvent.as_ref().map(|r| {
            let n = r.nrows();
            r - DMatrix::identity(n, n)
        })
    }

    pub fn katz_score(&self, i: usize, j: usize) -> f64 {
        let r = self.katz_resolvent.as_ref().expect("built without alpha");
        r[(i, j)] - if i == j { 1.0 } else { 0.0 }
    }

    pub fn katz_column(&self, i: usize) -> Vec<f64> {
        let n = self.pinv.nrows();
        (0..n).map(|v| self.katz_score(v, i)).collect()
    }

    pub fn commute_column(&self, i: usize) -> Vec<f64> {
        self.commute.column(i).iter().copied().collect()
    }

    /// `(e_i - e_j)' L^+ (e_i - e_j)`, without the volume factor.
    pub fn resistance(&self, i: usize, j: usize) -> f64 {
        self.pinv[(i, i)] - 2.0 * self.pinv[(i, j)] + self.pinv[(j, j)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::operator::DenseOperator;
    use approx::assert_abs_diff_eq;

    #[test]
    fn identity_converges_in_one_step() {
        let op = DenseOperator::new(DMatrix::identity(3, 3));
        let b = [1.0, -2.0, 0.5];
        let rep = conjugate_gradient(&op, &b, 1e-12, 10, None).unwrap();
        assert!(rep.converged);
        assert_eq!(rep.iterations, 1);
        assert_eq!(rep.matvecs, 1);
        assert_eq!(rep.solution, b.to_vec());
    }

    #[test]
    fn single_edge_commute_solve() {
        let g = fixtures::single_edge();
        let op = AdjustedLaplacianOperator::new(&g);
        let rep = conjugate_gradient(&op, &[1.0, -1.0], 1e-12, 10, None).unwrap();
        let form = rep.solution[0] - rep.solution[1];
        assert_abs_diff_eq!(form, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(2.0 * form, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn katz_single_edge_reference() {
        let g = fixtures::single_edge();
        let op = KatzOperator::new(&g, 0.5).unwrap();
        let x = reference_solve(&op, &[0.0, 1.0]).unwrap();
        assert_abs_diff_eq!(x[0], 2.0 / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(x[1], 4.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn indefinite_detected() {
        let op = DenseOperator::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]));
        let err = conjugate_gradient(&op, &[0.0, 1.0], 1e-10, 5, None).unwrap_err();
        assert!(matches!(err, Error::NotPositiveDefinite { .. }));
    }

    #[test]
    fn probe_rule_stops_early() {
        let g = fixtures::erdos_renyi(150, 0.05, 1);
        let op = AdjustedLaplacianOperator::new(&g);
        let mut b = vec![0.0; g.n()];
        b[0] = 1.0;
        b[1] = -1.0;
        let probe = |x: &[f64]| x[0] - x[1];
        let loose = conjugate_gradient(&op, &b, 1e-4, 500, Some(&probe)).unwrap();
        let plain = conjugate_gradient(&op, &b, 1e-4, 500, None).unwrap();
        assert!(loose.converged && plain.converged);
        assert!(loose.iterations <= plain.iterations);
        assert_eq!(loose.probe_history.len(), loose.iterations);
    }

    #[test]
    fn dense_reference_small_cases() {
        let g = fixtures::single_edge();
        let r = DenseReference::new(&g, Some(0.5)).unwrap();
        let k = r.katz_matrix().unwrap();
        assert_abs_diff_eq!(k[(0, 0)], 1.0 / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(k[(0, 1)], 2.0 / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(r.commute[(0, 1)], 2.0, epsilon = 1e-13);
        assert_eq!(r.commute[(0, 0)], 0.0);

        let tri = DenseReference::new(&fixtures::complete(3), None).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 0.0 } else { 4.0 };
                assert_abs_diff_eq!(tri.commute[(i, j)], want, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn dense_reference_rejects_indefinite_katz() {
        let g = fixtures::complete(4);
        assert!(DenseReference::new(&g, Some(0.5)).is_err());
    }
}
