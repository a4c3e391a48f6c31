//! One column of the commute-time matrix from a single CG-Lanczos solve.
//!
//! The CG iterates are built from the Lanczos vectors through the Cholesky
//! factor `T_k = R R'`: with `W = V R^{-T}` the solution is `W z` and
//! `W W'` approximates `Z^{-1}`, so `sum_k w_k * w_k` estimates the diagonal
//! of the inverse at no extra matrix-vector products.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::lanczos::{LanczosState, Reorthogonalization};
use crate::operator::{AdjustedLaplacianOperator, LinearOperator, PreconditionedLaplacianOperator};
use crate::norm2;

/// Largest graph on which [`commute_column`] runs the complete variant by
/// default.
pub const COMPLETE_LIMIT: usize = 500;

pub const DEFAULT_TOL: f64 = 1e-16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagSolveOptions {
    /// Relative residual target `||rhs - Z x|| <= tol ||rhs||`.
    pub tol: f64,
    pub max_iter: usize,
    pub reorth: Reorthogonalization,
    /// Keep iterating after convergence and restart after breakdowns until
    /// the Lanczos basis spans the whole space, with full
    /// reorthogonalization. The diagonal estimate is then exact up to
    /// rounding. Intended for small systems.
    pub complete: bool,
    /// Seed for restart vectors in complete mode.
    pub seed: u64,
}

impl DiagSolveOptions {
    pub fn new(tol: f64, max_iter: usize) -> Self {
        Self {
            tol,
            max_iter,
            reorth: Reorthogonalization::Local(2),
            complete: false,
            seed: 0,
        }
    }

    pub fn complete(tol: f64) -> Self {
        Self {
            tol,
            max_iter: usize::MAX,
            reorth: Reorthogonalization::Full,
            complete: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagSolveResult {
    pub solution: Vec<f64>,
    /// Partial sums of `w_k * w_k`; never decreases entrywise.
    pub diag_estimate: Vec<f64>,
    pub iterations: usize,
    /// Recurrence estimate of `||rhs - Z x|| / ||rhs||`.
    pub residual_norm: f64,
    pub converged: bool,
    pub matvecs: usize,
}

/// CG via Lanczos on an SPD operator, accumulating `diag(Z^{-1})`.
pub fn cg_lanczos_diag(op: &dyn LinearOperator, rhs: &[f64], opts: &DiagSolveOptions) -> Result<DiagSolveResult> {
    let n = op.dim();
    assert_eq!(rhs.len(), n, "right-hand side length");
    if !(opts.tol >= 0.0) {
        return Err(Error::InvalidParameter("tolerance must be nonnegative".into()));
    }
    let beta1 = norm2(rhs);
    let reorth = if opts.complete { Reorthogonalization::Full } else { opts.reorth };
    let mut lanczos = LanczosState::new(rhs, reorth)?;
    let start = op.matvecs();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let mut x = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut d_prev = 1.0;
    let mut z = 0.0;
    let mut resid = 1.0;
    let mut converged = false;
    let limit = if opts.complete { n } else { opts.max_iter };
    let mut k = 0;
    while k < limit {
        let v = lanczos.current().to_vec();
        let coupling = lanczos.beta_prev();
        let s = lanczos.step(op);
        k += 1;
        let d = s.alpha - coupling * coupling / d_prev;
        if !(d > 0.0) {
            return Err(Error::NotPositiveDefinite { step: k, pivot: d });
        }
        let sd = d.sqrt();
        let l = coupling / d_prev.sqrt();
        for (wi, vi) in w.iter_mut().zip(&v) {
            *wi = (vi - l * *wi) / sd;
        }
        z = if k == 1 { beta1 / sd } else { -l * z / sd };
        for t in 0..n {
            x[t] += z * w[t];
            diag[t] += w[t] * w[t];
        }
        d_prev = d;
        resid = s.beta * z.abs() / sd / beta1;
        if resid <= opts.tol || (s.breakdown && z != 0.0) {
            converged = true;
        }
        if opts.complete {
            if s.breakdown && k < n && !restart(&mut lanczos, &mut rng, n) {
                break;
            }
        } else if converged || s.breakdown {
            break;
        }
    }
    Ok(DiagSolveResult {
        solution: x,
        diag_estimate: diag,
        iterations: k,
        residual_norm: resid,
        converged,
        matvecs: op.matvecs() - start,
    })
}

fn restart(lanczos: &mut LanczosState, rng: &mut ChaCha8Rng, n: usize) -> bool {
    for _ in 0..8 {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if lanczos.restart(&v) {
            return true;
        }
    }
    false
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommuteColumnOptions {
    pub solve: DiagSolveOptions,
    /// Solve the diagonally scaled system `D^{-1/2} L~ D^{-1/2}`. Turning
    /// this off exists for comparisons only.
    pub preconditioned: bool,
}

impl CommuteColumnOptions {
    /// Complete solves up to [`COMPLETE_LIMIT`] vertices, plain CG-Lanczos
    /// with local reorthogonalization and at most `n` steps above.
    pub fn for_graph(g: &Graph, tol: f64) -> Self {
        let solve = if g.n() <= COMPLETE_LIMIT {
            DiagSolveOptions::complete(tol)
        } else {
            DiagSolveOptions::new(tol, g.n())
        };
        Self {
            solve,
            preconditioned: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommuteColumn {
    pub source: usize,
    /// Estimated commute times `C_{v,source}`, volume included.
    pub scores: Vec<f64>,
    /// `x ~ L^+ e_source`.
    pub solve_part: Vec<f64>,
    /// `g ~ diag(L^+)`.
    pub diag_part: Vec<f64>,
    pub volume: f64,
    pub iterations: usize,
    pub matvecs: usize,
    pub residual_norm: f64,
    pub converged: bool,
}

impl CommuteColumn {
    /// Scores without the volume factor; rankings are the same.
    pub fn unscaled(&self) -> Vec<f64> {
        self.scores.iter().map(|s| s / self.volume).collect()
    }
}

/// Commute-time column for `i` with [`CommuteColumnOptions::for_graph`].
pub fn commute_column(g: &Graph, i: usize, tol: f64) -> Result<CommuteColumn> {
    commute_column_with(g, i, &CommuteColumnOptions::for_graph(g, tol))
}

/// 1. solve `D^{-1/2} L~ D^{-1/2} y = D^{-1/2} e_i`, estimating
///    `f ~ diag((D^{-1/2} L~ D^{-1/2})^{-1})`;
/// 2. `x = D^{-1/2} y - e/n`;
/// 3. `g = D^{-1} f - e/n`;
/// 4. `c_i = vol (g + x_i e - 2 x)`, with `c_i[i]` set to 0.
pub fn commute_column_with(g: &Graph, i: usize, opts: &CommuteColumnOptions) -> Result<CommuteColumn> {
    let n = g.n();
    if i >= n {
        return Err(Error::VertexOutOfRange { vertex: i, n });
    }
    if !(opts.solve.tol > 0.0) {
        return Err(Error::InvalidParameter("tolerance must be positive".into()));
    }
    let shift = 1.0 / n as f64;
    let (x, gdiag, res) = if opts.preconditioned {
        let op = PreconditionedLaplacianOperator::new(g);
        let s = op.inv_sqrt_degrees().to_vec();
        let mut rhs = vec![0.0; n];
        rhs[i] = s[i];
        let res = cg_lanczos_diag(&op, &rhs, &opts.solve)?;
        let x: Vec<f64> = (0..n).map(|v| s[v] * res.solution[v] - shift).collect();
        let gd: Vec<f64> = (0..n).map(|v| s[v] * s[v] * res.diag_estimate[v] - shift).collect();
        (x, gd, res)
    } else {
        let op = AdjustedLaplacianOperator::new(g);
        let mut rhs = vec![0.0; n];
        rhs[i] = 1.0;
        let res = cg_lanczos_diag(&op, &rhs, &opts.solve)?;
        let x: Vec<f64> = res.solution.iter().map(|v| v - shift).collect();
        let gd: Vec<f64> = res.diag_estimate.iter().map(|v| v - shift).collect();
        (x, gd, res)
    };
    let vol = g.volume() as f64;
    let xi = x[i];
    let mut scores: Vec<f64> = (0..n).map(|v| vol * (gdiag[v] + xi - 2.0 * x[v])).collect();
    scores[i] = 0.0;
    Ok(CommuteColumn {
        source: i,
        scores,
        solve_part: x,
        diag_part: gdiag,
        volume: vol,
        iterations: res.iterations,
        matvecs: res.matvecs,
        residual_norm: res.residual_norm,
        converged: res.converged,
    })
}

/// `C_{i,v} ~ 1/d_i + 1/d_v`, zero at `v = i`.
pub fn inverse_degree_heuristic(g: &Graph, i: usize) -> Result<Vec<f64>> {
    if i >= g.n() {
        return Err(Error::VertexOutOfRange { vertex: i, n: g.n() });
    }
    let di = 1.0 / g.degree(i) as f64;
    Ok((0..g.n())
        .map(|v| if v == i { 0.0 } else { di + 1.0 / g.degree(v) as f64 })
        .collect())
}
