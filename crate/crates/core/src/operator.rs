//! Matrix-free operators over a [`Graph`].
//!
//! Every operator counts its applications; one `apply` is one matrix-vector
//! product, the work unit used throughout the benchmarks.

use std::cell::Cell;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::lanczos::{LanczosState, Reorthogonalization};
use crate::tridiag;

/// A symmetric linear map `R^n -> R^n` available only through products.
pub trait LinearOperator {
    fn dim(&self) -> usize;

    /// Writes `Z x` into `y`. Counts as one matrix-vector product.
    fn apply(&self, x: &[f64], y: &mut [f64]);

    /// Products performed so far.
    fn matvecs(&self) -> usize;

    /// Explicit dense matrix, built column by column. Each column costs one
    /// product.
    fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        let mut col = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            self.apply(&e, &mut col);
            m.column_mut(j).copy_from_slice(&col);
            e[j] = 0.0;
        }
        m
    }
}

#[derive(Debug, Default)]
struct Counter(Cell<usize>);

impl Counter {
    fn bump(&self) {
        self.0.set(self.0.get() + 1);
    }
    fn get(&self) -> usize {
        self.0.get()
    }
}

/// `A x`.
#[derive(Debug)]
pub struct AdjacencyOperator<'g> {
    graph: &'g Graph,
    count: Counter,
}

impl<'g> AdjacencyOperator<'g> {
    pub fn new(graph: &'g Graph) -> Self {
        Self {
            graph,
            count: Counter::default(),
        }
    }
}

impl LinearOperator for AdjacencyOperator<'_> {
    fn dim(&self) -> usize {
        self.graph.n()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.count.bump();
        self.graph.adjacency_matvec(x, y);
    }

    fn matvecs(&self) -> usize {
        self.count.get()
    }
}

/// `(I - alpha A) x`, the Katz system matrix.
#[derive(Debug)]
pub struct KatzOperator<'g> {
    graph: &'g Graph,
    alpha: f64,
    count: Counter,
}

impl<'g> KatzOperator<'g> {
    /// Fails when `alpha <= 0`. Positive definiteness needs
    /// `alpha < 1/sigma_max(A)`, which is the caller's business.
    pub fn new(graph: &'g Graph, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "Katz damping must be positive, got {alpha}"
            )));
        }
        Ok(Self {
            graph,
            alpha,
            count: Counter::default(),
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Max absolute column sum, `1 + alpha * d_max`.
    pub fn one_norm(&self) -> f64 {
        katz_one_norm(self.graph, self.alpha)
    }
}

impl LinearOperator for KatzOperator<'_> {
    fn dim(&self) -> usize {
        self.graph.n()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.count.bump();
        let g = self.graph;
        for (v, yv) in y.iter_mut().enumerate() {
            let s: f64 = g.neighbors(v).iter().map(|&u| x[u as usize]).sum();
            *yv = x[v] - self.alpha * s;
        }
    }

    fn matvecs(&self) -> usize {
        self.count.get()
    }
}

/// `(L + (1/n) e e^T) x` with `L = D - A`.
///
/// The rank-one shift moves the zero eigenvalue of `L` (eigenvector `e`) to 1
/// and leaves the rest of the spectrum alone, so the operator is SPD on a
/// connected graph.
#[derive(Debug)]
pub struct AdjustedLaplacianOperator<'g> {
    graph: &'g Graph,
    count: Counter,
}

impl<'g> AdjustedLaplacianOperator<'g> {
    pub fn new(graph: &'g Graph) -> Self {
        Self {
            graph,
            count: Counter::default(),
        }
    }

    pub fn one_norm(&self) -> f64 {
        adjusted_laplacian_one_norm(self.graph)
    }
}

fn adjusted_laplacian_apply(g: &Graph, x: &[f64], y: &mut [f64]) {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    for (v, yv) in y.iter_mut().enumerate() {
        let s: f64 = g.neighbors(v).iter().map(|&u| x[u as usize]).sum();
        *yv = g.degree(v) as f64 * x[v] - s + mean;
    }
}

impl LinearOperator for AdjustedLaplacianOperator<'_> {
    fn dim(&self) -> usize {
        self.graph.n()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.count.bump();
        adjusted_laplacian_apply(self.graph, x, y);
    }

    fn matvecs(&self) -> usize {
        self.count.get()
    }
}

/// `D^{-1/2} (L + (1/n) e e^T) D^{-1/2} x`.
#[derive(Debug)]
pub struct PreconditionedLaplacianOperator<'g> {
    graph: &'g Graph,
    inv_sqrt_deg: Vec<f64>,
    scratch: std::cell::RefCell<Vec<f64>>,
    count: Counter,
}

impl<'g> PreconditionedLaplacianOperator<'g> {
    pub fn new(graph: &'g Graph) -> Self {
        let inv_sqrt_deg = graph
            .degrees()
            .iter()
            .map(|&d| 1.0 / (d as f64).sqrt())
            .collect();
        Self {
            graph,
            inv_sqrt_deg,
            scratch: std::cell::RefCell::new(vec![0.0; graph.n()]),
            count: Counter::default(),
        }
    }

    pub fn inv_sqrt_degrees(&self) -> &[f64] {
        &self.inv_sqrt_deg
    }
}

impl LinearOperator for PreconditionedLaplacianOperator<'_> {
    fn dim(&self) -> usize {
        self.graph.n()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.count.bump();
        let mut s = self.scratch.borrow_mut();
        for ((sv, xv), w) in s.iter_mut().zip(x).zip(&self.inv_sqrt_deg) {
            *sv = xv * w;
        }
        adjusted_laplacian_apply(self.graph, &s, y);
        for (yv, w) in y.iter_mut().zip(&self.inv_sqrt_deg) {
            *yv *= w;
        }
    }

    fn matvecs(&self) -> usize {
        self.count.get()
    }
}

/// An explicit dense symmetric matrix, for tests and oracles.
#[derive(Debug)]
pub struct DenseOperator {
    matrix: DMatrix<f64>,
    count: Counter,
}

impl DenseOperator {
    pub fn new(matrix: DMatrix<f64>) -> Self {
        assert!(matrix.is_square(), "operator matrix must be square");
        Self {
            matrix,
            count: Counter::default(),
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }
}

impl LinearOperator for DenseOperator {
    fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.count.bump();
        let n = self.dim();
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = (0..n).map(|j| self.matrix[(i, j)] * x[j]).sum();
        }
    }

    fn matvecs(&self) -> usize {
        self.count.get()
    }

    fn to_dense(&self) -> DMatrix<f64> {
        self.matrix.clone()
    }
}

/// `max_v (1 + alpha * deg(v))`.
pub fn katz_one_norm(g: &Graph, alpha: f64) -> f64 {
    1.0 + alpha * g.max_degree() as f64
}

/// Exact 1-norm of `L + (1/n) e e^T`.
///
/// Column `v` holds `d_v + 1/n` on the diagonal, `d_v` entries `-1 + 1/n`
/// and `n - 1 - d_v` entries `1/n`, which sums to `2 d_v + 1 - 2 d_v / n`.
pub fn adjusted_laplacian_one_norm(g: &Graph) -> f64 {
    let n = g.n() as f64;
    let d = g.max_degree() as f64;
    2.0 * d + 1.0 - 2.0 * d / n
}

/// Largest eigenvalue of `A` (equal to `||A||_2` for a nonnegative symmetric
/// matrix), from a Lanczos run on `A` with a seeded positive start vector.
///
/// Stops when the largest Ritz value has settled to relative tolerance `tol`
/// and its residual `beta_k |s_k|` confirms it.
pub fn spectral_norm_estimate(g: &Graph, tol: f64, seed: u64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter("tolerance must be positive".into()));
    }
    let n = g.n();
    let op = AdjacencyOperator::new(g);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..1.5)).collect();
    let mut state = LanczosState::new(&start, Reorthogonalization::Local(2))?;
    let cap = n.min(1000);
    let mut prev = f64::NAN;
    let mut best = f64::NAN;
    for k in 1..=cap {
        let step = state.step(&op);
        best = tridiag::max_eigenvalue(state.alphas(), &state.betas()[..k - 1]);
        if step.breakdown {
            return Ok(best);
        }
        if k >= 3 && (best - prev).abs() <= tol * best.abs() {
            let betas = &state.betas()[..k - 1];
            let resid = tridiag::ritz_residual_max(state.alphas(), betas, step.beta);
            if resid <= tol * best.abs() {
                return Ok(best);
            }
        }
        prev = best;
    }
    if cap == n {
        // the Krylov space is the whole space, so the Ritz value is exact up to
        // rounding
        return Ok(best);
    }
    Err(Error::NoConvergence {
        iterations: cap,
        estimate: best,
    })
}
