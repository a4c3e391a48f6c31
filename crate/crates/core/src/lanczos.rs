//! The symmetric Lanczos recurrence as a resumable stepper.
//!
//! One [`LanczosState::step`] is one matrix-vector product:
//!
//! ```text
//! z = Z q;  alpha = q'z;  z -= alpha q + beta_prev q_prev;  beta = ||z||;  q_next = z / beta
//! ```
//!
//! The quadrature-bound paths only need the scalars and keep two vectors of
//! memory. The CG-Lanczos path turns on local reorthogonalization, which also
//! keeps a short window of recent basis vectors.

use std::collections::VecDeque;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::operator::LinearOperator;
use crate::{dot, norm2};

/// Relative threshold below which `beta` is treated as an exact zero.
pub const BREAKDOWN_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reorthogonalization {
    None,
    /// Orthogonalize each new vector against the last `w` basis vectors.
    Local(usize),
    /// Orthogonalize against every basis vector so far (two Gram-Schmidt
    /// passes). Memory grows as `n * steps`; meant for small problems.
    Full,
}

impl Reorthogonalization {
    fn window(self) -> usize {
        match self {
            Reorthogonalization::None => 0,
            Reorthogonalization::Local(w) => w,
            Reorthogonalization::Full => usize::MAX,
        }
    }
}

/// Scalars produced by one Lanczos step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LanczosStep {
    pub alpha: f64,
    pub beta: f64,
    /// `beta` fell below [`BREAKDOWN_TOL`] relative to `||Z q||`; the Krylov
    /// space is invariant and the next basis vector is zero.
    pub breakdown: bool,
}

#[derive(Debug, Clone)]
pub struct LanczosState {
    q_prev: Vec<f64>,
    q_curr: Vec<f64>,
    beta_prev: f64,
    alphas: Vec<f64>,
    betas: Vec<f64>,
    reorth: Reorthogonalization,
    window: VecDeque<Vec<f64>>,
    z: Vec<f64>,
    broken: bool,
}

impl LanczosState {
    /// Starts the recurrence from `start / ||start||`.
    pub fn new(start: &[f64], reorth: Reorthogonalization) -> Result<Self> {
        let nrm = norm2(start);
        if !(nrm > 0.0 && nrm.is_finite()) {
            return Err(Error::InvalidParameter(
                "Lanczos start vector must be nonzero and finite".into(),
            ));
        }
        let q: Vec<f64> = start.iter().map(|v| v / nrm).collect();
        let n = q.len();
        let mut state = Self {
            q_prev: vec![0.0; n],
            q_curr: q,
            beta_prev: 0.0,
            alphas: Vec::new(),
            betas: Vec::new(),
            reorth,
            window: VecDeque::new(),
            z: vec![0.0; n],
            broken: false,
        };
        state.remember_current();
        Ok(state)
    }

    fn remember_current(&mut self) {
        let w = self.reorth.window();
        if w == 0 {
            return;
        }
        if self.window.len() == w {
            if let Some(mut old) = self.window.pop_front() {
                old.copy_from_slice(&self.q_curr);
                self.window.push_back(old);
                return;
            }
        }
        self.window.push_back(self.q_curr.clone());
    }

    pub fn step_count(&self) -> usize {
        self.alphas.len()
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    /// `betas[j]` couples basis vectors `j` and `j+1`; the last entry is the
    /// residual coupling of the newest step.
    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn beta_prev(&self) -> f64 {
        self.beta_prev
    }

    /// Current basis vector (the one the next step multiplies).
    pub fn current(&self) -> &[f64] {
        &self.q_curr
    }

    pub fn previous(&self) -> &[f64] {
        &self.q_prev
    }

    pub fn is_broken_down(&self) -> bool {
        self.broken
    }

    /// Stored basis vectors used for reorthogonalization, oldest first.
    pub fn window(&self) -> impl Iterator<Item = &[f64]> {
        self.window.iter().map(|v| v.as_slice())
    }

    /// One Lanczos step: exactly one operator application.
    pub fn step(&mut self, op: &dyn LinearOperator) -> LanczosStep {
        assert!(!self.broken, "Lanczos step after breakdown");
        op.apply(&self.q_curr, &mut self.z);
        let scale = norm2(&self.z);
        let alpha = dot(&self.q_curr, &self.z);
        for ((zi, qi), pi) in self.z.iter_mut().zip(&self.q_curr).zip(&self.q_prev) {
            *zi -= alpha * qi + self.beta_prev * pi;
        }
        let passes = match self.reorth {
            Reorthogonalization::None => 0,
            Reorthogonalization::Local(_) => 1,
            Reorthogonalization::Full => 2,
        };
        for _ in 0..passes {
            for v in &self.window {
                let c = dot(v, &self.z);
                for (zi, vi) in self.z.iter_mut().zip(v) {
                    *zi -= c * vi;
                }
            }
        }
        let mut beta = norm2(&self.z);
        let breakdown = !(beta > BREAKDOWN_TOL * scale);
        std::mem::swap(&mut self.q_prev, &mut self.q_curr);
        if breakdown {
            beta = 0.0;
            self.q_curr.iter_mut().for_each(|v| *v = 0.0);
            self.broken = true;
        } else {
            for (qi, zi) in self.q_curr.iter_mut().zip(&self.z) {
                *qi = zi / beta;
            }
            self.remember_current();
        }
        self.beta_prev = beta;
        self.alphas.push(alpha);
        self.betas.push(beta);
        LanczosStep {
            alpha,
            beta,
            breakdown,
        }
    }

    /// After a breakdown, continues in the orthogonal complement of the
    /// stored basis from `start`. Only meaningful with
    /// [`Reorthogonalization::Full`]. Returns `false` (and stays broken) if
    /// `start` lies in the span of the stored basis.
    ///
    /// The recurrence coefficients of the new block are appended, so the
    /// tridiagonal matrix becomes block diagonal (the coupling `beta` at the
    /// seam is the recorded zero).
    pub fn restart(&mut self, start: &[f64]) -> bool {
        let mut v = start.to_vec();
        let scale = norm2(&v);
        for _ in 0..2 {
            for w in &self.window {
                let c = dot(w, &v);
                for (vi, wi) in v.iter_mut().zip(w) {
                    *vi -= c * wi;
                }
            }
        }
        let nrm = norm2(&v);
        if !(nrm > 1e-8 * scale) {
            return false;
        }
        for (qi, vi) in self.q_curr.iter_mut().zip(&v) {
            *qi = vi / nrm;
        }
        self.q_prev.iter_mut().for_each(|x| *x = 0.0);
        self.beta_prev = 0.0;
        self.broken = false;
        self.remember_current();
        true
    }
}

/// Output of [`lanczos_run`]: `Z Q_k = Q_{k+1} T_{k+1,k}`.
#[derive(Debug, Clone)]
pub struct LanczosFactorization {
    /// `k + 1` basis vectors; the last one is zero after a breakdown.
    pub basis: Vec<Vec<f64>>,
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub breakdown: bool,
}

impl LanczosFactorization {
    pub fn steps(&self) -> usize {
        self.alphas.len()
    }

    /// The square `k x k` tridiagonal `T_k`.
    pub fn t_square(&self) -> DMatrix<f64> {
        let k = self.steps();
        crate::tridiag::to_dense(&self.alphas, &self.betas[..k.saturating_sub(1)])
    }

    /// The rectangular `(k+1) x k` tridiagonal `T_{k+1,k}`.
    pub fn t_rect(&self) -> DMatrix<f64> {
        let k = self.steps();
        let mut t = DMatrix::zeros(k + 1, k);
        t.view_mut((0, 0), (k, k)).copy_from(&self.t_square());
        if k > 0 {
            t[(k, k - 1)] = self.betas[k - 1];
        }
        t
    }

    /// Ritz values (eigenvalues of `T_k`), ascending.
    pub fn ritz_values(&self) -> Vec<f64> {
        let k = self.steps();
        crate::tridiag::eigenvalues(&self.alphas, &self.betas[..k.saturating_sub(1)])
    }
}

/// Runs up to `k` Lanczos steps from `q`, storing the basis. Stops early on
/// breakdown and reports it in the result.
pub fn lanczos_run(
    op: &dyn LinearOperator,
    q: &[f64],
    k: usize,
    reorth: Reorthogonalization,
) -> Result<LanczosFactorization> {
    if k == 0 {
        return Err(Error::InvalidParameter("Lanczos needs at least one step".into()));
    }
    let mut state = LanczosState::new(q, reorth)?;
    let mut basis = vec![state.current().to_vec()];
    let mut breakdown = false;
    for _ in 0..k {
        let s = state.step(op);
        basis.push(state.current().to_vec());
        if s.breakdown {
            breakdown = true;
            break;
        }
    }
    Ok(LanczosFactorization {
        basis,
        alphas: state.alphas,
        betas: state.betas,
        breakdown,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::operator::{AdjustedLaplacianOperator, DenseOperator, KatzOperator};
    use approx::assert_abs_diff_eq;

    #[test]
    fn scaled_identity_breaks_down_immediately() {
        let op = DenseOperator::new(DMatrix::identity(4, 4) * 3.0);
        let mut st = LanczosState::new(&[1.0, 0.0, 0.0, 0.0], Reorthogonalization::None).unwrap();
        let s = st.step(&op);
        assert_eq!(s.alpha, 3.0);
        assert_eq!(s.beta, 0.0);
        assert!(s.breakdown);
        assert!(st.current().iter().all(|&v| v == 0.0));
        assert_eq!(op.matvecs(), 1);
    }

    #[test]
    fn laplacian_eigenvector_start() {
        let g = fixtures::single_edge();
        let op = AdjustedLaplacianOperator::new(&g);
        let r = 0.5f64.sqrt();
        let mut st = LanczosState::new(&[r, -r], Reorthogonalization::None).unwrap();
        let s = st.step(&op);
        assert_abs_diff_eq!(s.alpha, 2.0, epsilon = 1e-14);
        assert!(s.breakdown);
    }

    #[test]
    fn katz_triangle_first_step() {
        let g = fixtures::complete(3);
        let op = KatzOperator::new(&g, 0.25).unwrap();
        let mut st = LanczosState::new(&[1.0, 0.0, 0.0], Reorthogonalization::None).unwrap();
        let s = st.step(&op);
        assert_abs_diff_eq!(s.alpha, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.beta, 0.25 * 2f64.sqrt(), epsilon = 1e-15);
        assert_eq!(st.alphas().len(), st.step_count());
        assert_eq!(st.betas().len(), st.step_count());
    }

    #[test]
    fn two_by_two_ritz_values() {
        let g = fixtures::single_edge();
        let op = AdjustedLaplacianOperator::new(&g);
        let f = lanczos_run(&op, &[1.0, 0.0], 2, Reorthogonalization::None).unwrap();
        let ritz = f.ritz_values();
        assert_abs_diff_eq!(ritz[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ritz[1], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn eigenvector_start_is_one_by_one() {
        let g = fixtures::complete(4);
        let op = AdjustedLaplacianOperator::new(&g);
        let f = lanczos_run(&op, &[1.0; 4], 3, Reorthogonalization::None).unwrap();
        assert!(f.breakdown);
        assert_eq!(f.steps(), 1);
        assert_abs_diff_eq!(f.alphas[0], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn zero_start_rejected() {
        assert!(LanczosState::new(&[0.0, 0.0], Reorthogonalization::None).is_err());
        let g = fixtures::single_edge();
        let op = AdjustedLaplacianOperator::new(&g);
        assert!(lanczos_run(&op, &[1.0, 0.0], 0, Reorthogonalization::None).is_err());
    }

    #[test]
    fn restart_continues_in_complement() {
        // K3 Laplacian has a repeated eigenvalue, so a start at e_0 spans
        // only two dimensions
        let g = fixtures::complete(3);
        let op = AdjustedLaplacianOperator::new(&g);
        let mut st = LanczosState::new(&[1.0, 0.0, 0.0], Reorthogonalization::Full).unwrap();
        st.step(&op);
        let s = st.step(&op);
        assert!(s.breakdown);
        assert!(st.restart(&[0.0, 1.0, 0.0]));
        let s = st.step(&op);
        assert!(s.breakdown);
        assert_abs_diff_eq!(s.alpha, 3.0, epsilon = 1e-12);
        assert!(!st.restart(&[0.0, 0.0, 1.0]));
    }
}
