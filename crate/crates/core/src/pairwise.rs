//! Certified pairwise bounds on commute times and Katz scores, and the CG
//! baseline they are compared against.
//!
//! Commute time: `C_ij = vol(G) * (e_i - e_j)' L~^{-1} (e_i - e_j)`, one
//! quadratic form bounded directly. Katz: `(I - aA)^{-1}_ij` is split by the
//! polarization identity into the forms of `e_i + e_j` and `e_i - e_j`, and
//! the bounds of the two are combined crosswise.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::lanczos::Reorthogonalization;
use crate::operator::{
    adjusted_laplacian_one_norm, spectral_norm_estimate, AdjustedLaplacianOperator, KatzOperator,
    LinearOperator,
};
use crate::quadrature::{BoundsPair, QuadraticFormBounds};
use crate::solvers::conjugate_gradient;

pub const DEFAULT_LAMBDA_LO: f64 = 1e-4;
pub const DEFAULT_TAU: f64 = 1e-4;
pub const DEFAULT_MAX_ITER_CAP: usize = 500;

/// Relative tolerance used for the spectral norm behind [`hard_alpha`].
pub const SPECTRAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreKind {
    Commute,
    Katz,
}

impl std::fmt::Display for ScoreKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ScoreKind::Commute => "commute",
            ScoreKind::Katz => "katz",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairwiseParams {
    pub lambda_lo: f64,
    /// Upper spectrum bound; `None` means the operator's 1-norm.
    pub lambda_hi: Option<f64>,
    pub tau: f64,
    /// `None` means `min(n, 500)`.
    pub max_iter: Option<usize>,
    pub reorth: Reorthogonalization,
}

impl Default for PairwiseParams {
    fn default() -> Self {
        Self {
            lambda_lo: DEFAULT_LAMBDA_LO,
            lambda_hi: None,
            tau: DEFAULT_TAU,
            max_iter: None,
            reorth: Reorthogonalization::None,
        }
    }
}

impl PairwiseParams {
    fn max_iter_for(&self, n: usize) -> usize {
        self.max_iter.unwrap_or(n.min(DEFAULT_MAX_ITER_CAP))
    }

    fn check(&self) -> Result<()> {
        if !(self.tau > 0.0) {
            return Err(Error::InvalidParameter(format!("tau must be positive, got {}", self.tau)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub lower: f64,
    pub upper: f64,
}

/// Per-iteration bounds of one pairwise query.
///
/// Rows hold the reported score: the commute time itself (volume included)
/// or the Katz score. `scale` is the factor between the reported score and
/// the quadratic form the recurrence bounds (the volume for commute times, 1
/// for Katz); the stopping test `upper - lower < tau` is applied to the
/// unscaled form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsTrace {
    pub score_kind: ScoreKind,
    pub i: usize,
    pub j: usize,
    pub rows: Vec<TraceRow>,
    pub final_lower: f64,
    pub final_upper: f64,
    pub matvecs: usize,
    pub converged: bool,
    pub scale: f64,
    pub tau: f64,
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

impl BoundsTrace {
    pub fn iterations(&self) -> usize {
        self.rows.len()
    }

    /// Final bounds on the unscaled quadratic form.
    pub fn raw_final(&self) -> BoundsPair {
        BoundsPair {
            lower: self.final_lower / self.scale,
            upper: self.final_upper / self.scale,
        }
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.final_lower + self.final_upper)
    }
}

fn check_pair(g: &Graph, i: usize, j: usize) -> Result<()> {
    for v in [i, j] {
        if v >= g.n() {
            return Err(Error::VertexOutOfRange { vertex: v, n: g.n() });
        }
    }
    if i == j {
        return Err(Error::InvalidParameter("pairwise queries need i != j".into()));
    }
    Ok(())
}

fn difference(n: usize, i: usize, j: usize, sign: f64) -> Vec<f64> {
    let mut u = vec![0.0; n];
    u[i] = 1.0;
    u[j] = sign;
    u
}

/// Bounds on the commute time between `i` and `j`.
///
/// Runs Lanczos on `L~` from `(e_i - e_j)/sqrt(2)` and reports
/// `vol * 2 * [b_lower, b_upper]` after every step. Stops when the gap of the
/// unscaled form drops below `tau` or the recurrence breaks down (the bounds
/// are then exact). Running out of iterations is not an error; the trace is
/// returned with `converged = false`.
pub fn commute_pairwise_bounds(
    g: &Graph,
    i: usize,
    j: usize,
    params: &PairwiseParams,
) -> Result<BoundsTrace> {
    check_pair(g, i, j)?;
    params.check()?;
    let op = AdjustedLaplacianOperator::new(g);
    let lambda_hi = params.lambda_hi.unwrap_or_else(|| adjusted_laplacian_one_norm(g));
    let scale = g.volume() as f64;
    let mut form = QuadraticFormBounds::with_reorthogonalization(
        &difference(g.n(), i, j, -1.0),
        params.lambda_lo,
        lambda_hi,
        params.reorth,
    )?;
    let max_iter = params.max_iter_for(g.n());
    let mut rows = Vec::new();
    let mut converged = false;
    for it in 1..=max_iter {
        let s = form.step(&op)?;
        rows.push(TraceRow {
            iteration: it,
            lower: scale * s.bounds.lower,
            upper: scale * s.bounds.upper,
        });
        if s.breakdown || s.bounds.gap() < params.tau {
            converged = true;
            break;
        }
    }
    Ok(finish(
        ScoreKind::Commute,
        i,
        j,
        rows,
        op.matvecs(),
        converged,
        scale,
        params,
        lambda_hi,
        None,
    ))
}

/// Bounds on the Katz score `K_ij = (I - alpha A)^{-1}_ij` for `i != j`.
///
/// Two recurrences on `I - alpha A` advance in lockstep, from
/// `(e_i + e_j)/sqrt(2)` and `(e_i - e_j)/sqrt(2)`, with bounds `G` and `H` on
/// their quadratic forms. The score lies in
/// `[(G_lower - H_upper)/4, (G_upper - H_lower)/4]`. A recurrence that breaks
/// down holds its exact value and stops costing matrix-vector products.
pub fn katz_pairwise_bounds(
    g: &Graph,
    alpha: f64,
    i: usize,
    j: usize,
    params: &PairwiseParams,
) -> Result<BoundsTrace> {
    check_pair(g, i, j)?;
    params.check()?;
    let op = KatzOperator::new(g, alpha)?;
    let lambda_hi = params.lambda_hi.unwrap_or_else(|| op.one_norm());
    let n = g.n();
    let mut plus = QuadraticFormBounds::with_reorthogonalization(
        &difference(n, i, j, 1.0),
        params.lambda_lo,
        lambda_hi,
        params.reorth,
    )?;
    let mut minus = QuadraticFormBounds::with_reorthogonalization(
        &difference(n, i, j, -1.0),
        params.lambda_lo,
        lambda_hi,
        params.reorth,
    )?;
    let mut gb = BoundsPair { lower: 0.0, upper: f64::INFINITY };
    let mut hb = gb;
    let max_iter = params.max_iter_for(n);
    let mut rows = Vec::new();
    let mut converged = false;
    for it in 1..=max_iter {
        if !plus.is_exact() {
            gb = plus.step(&op)?.bounds;
        }
        if !minus.is_exact() {
            hb = minus.step(&op)?.bounds;
        }
        let lower = 0.25 * (gb.lower - hb.upper);
        let upper = 0.25 * (gb.upper - hb.lower);
        rows.push(TraceRow { iteration: it, lower, upper });
        if (plus.is_exact() && minus.is_exact()) || upper - lower < params.tau {
            converged = true;
            break;
        }
    }
    Ok(finish(
        ScoreKind::Katz,
        i,
        j,
        rows,
        op.matvecs(),
        converged,
        1.0,
        params,
        lambda_hi,
        Some(alpha),
    ))
}

#[allow(clippy::too_many_arguments)]
fn finish(
    score_kind: ScoreKind,
    i: usize,
    j: usize,
    rows: Vec<TraceRow>,
    matvecs: usize,
    converged: bool,
    scale: f64,
    params: &PairwiseParams,
    lambda_hi: f64,
    alpha: Option<f64>,
) -> BoundsTrace {
    let last = rows.last().copied().unwrap_or(TraceRow {
        iteration: 0,
        lower: f64::NEG_INFINITY,
        upper: f64::INFINITY,
    });
    BoundsTrace {
        score_kind,
        i,
        j,
        final_lower: last.lower,
        final_upper: last.upper,
        rows,
        matvecs,
        converged,
        scale,
        tau: params.tau,
        lambda_lo: params.lambda_lo,
        lambda_hi,
        alpha,
    }
}

/// Which system the CG baseline solves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BaselineKind {
    /// `L~ x = e_i - e_j`, estimate `vol * (e_i - e_j)' x`.
    Commute,
    /// `(I - alpha A) x = e_j`, estimate `e_i' x`.
    Katz { alpha: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineResult {
    pub estimate: f64,
    pub matvecs: usize,
    pub iterations: usize,
    /// Pairwise estimate after each CG iteration.
    pub estimates: Vec<f64>,
    pub converged: bool,
}

/// Conjugate gradient with the pairwise stopping rule: stop once the probed
/// score changes by a relative amount below `tau` between iterations, or the
/// residual norm falls below `tau` relative to the right-hand side.
pub fn cg_pairwise_baseline(
    g: &Graph,
    kind: BaselineKind,
    i: usize,
    j: usize,
    tau: f64,
    max_iter: usize,
) -> Result<BaselineResult> {
    check_pair(g, i, j)?;
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter(format!("tau must be positive, got {tau}")));
    }
    let n = g.n();
    let report = match kind {
        BaselineKind::Commute => {
            let vol = g.volume() as f64;
            let op = AdjustedLaplacianOperator::new(g);
            let probe = move |x: &[f64]| vol * (x[i] - x[j]);
            conjugate_gradient(&op, &difference(n, i, j, -1.0), tau, max_iter, Some(&probe))?
        }
        BaselineKind::Katz { alpha } => {
            let op = KatzOperator::new(g, alpha)?;
            let mut b = vec![0.0; n];
            b[j] = 1.0;
            let probe = move |x: &[f64]| x[i];
            conjugate_gradient(&op, &b, tau, max_iter, Some(&probe))?
        }
    };
    Ok(BaselineResult {
        estimate: report.probe_history.last().copied().unwrap_or(0.0),
        matvecs: report.matvecs,
        iterations: report.iterations,
        estimates: report.probe_history,
        converged: report.converged,
    })
}

/// Dense check that `[lambda_lo, lambda_hi]` encloses the spectrum of `Z`.
/// A bound may sit on the extreme eigenvalue itself (up to rounding): the
/// Radau rule with its node at an end of the spectrum is still a bound, and
/// the default `lambda_hi = ||Z||_1` is attained on regular graphs.
/// Meant for small operators only.
pub fn validate_spectrum_bounds(op: &dyn LinearOperator, lambda_lo: f64, lambda_hi: f64) -> Result<()> {
    let ev = op.to_dense().symmetric_eigenvalues();
    let lo = ev.min();
    let hi = ev.max();
    let slack = 1e-12 * hi.abs().max(1.0);
    if !(lambda_lo <= lo + slack) {
        return Err(Error::InvalidParameter(format!(
            "lambda_lo = {lambda_lo} is above the smallest eigenvalue {lo}"
        )));
    }
    if !(lambda_hi >= hi - slack) {
        return Err(Error::InvalidParameter(format!(
            "lambda_hi = {lambda_hi} is below the largest eigenvalue {hi}"
        )));
    }
    Ok(())
}

/// `1 / (||A||_2 + 1)`.
pub fn hard_alpha(g: &Graph, seed: u64) -> Result<f64> {
    Ok(1.0 / (spectral_norm_estimate(g, SPECTRAL_TOL, seed)? + 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use approx::assert_abs_diff_eq;

    #[test]
    fn single_edge_commute() {
        let g = fixtures::single_edge();
        let t = commute_pairwise_bounds(&g, 0, 1, &PairwiseParams::default()).unwrap();
        assert!(t.converged);
        assert_abs_diff_eq!(t.final_lower, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(t.final_upper, 2.0, epsilon = 1e-12);
        assert_eq!(t.raw_final().lower, t.final_lower / 2.0);
    }

    #[test]
    fn triangle_commute() {
        let g = fixtures::complete(3);
        let t = commute_pairwise_bounds(&g, 0, 2, &PairwiseParams::default()).unwrap();
        assert_abs_diff_eq!(t.final_lower, 4.0, epsilon = 1e-10);
        assert_abs_diff_eq!(t.final_upper, 4.0, epsilon = 1e-10);
    }

    #[test]
    fn single_edge_katz() {
        let g = fixtures::single_edge();
        let t = katz_pairwise_bounds(&g, 0.5, 0, 1, &PairwiseParams::default()).unwrap();
        assert!(t.converged);
        assert!(t.iterations() <= 2);
        assert_abs_diff_eq!(t.final_lower, 2.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(t.final_upper, 2.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn katz_is_symmetric_in_the_pair() {
        let g = fixtures::erdos_renyi(60, 0.1, 3);
        let a = 0.5 / g.max_degree() as f64;
        let p = PairwiseParams::default();
        let x = katz_pairwise_bounds(&g, a, 3, 17, &p).unwrap();
        let y = katz_pairwise_bounds(&g, a, 17, 3, &p).unwrap();
        assert_eq!(x.rows.len(), y.rows.len());
        for (r, s) in x.rows.iter().zip(&y.rows) {
            assert_abs_diff_eq!(r.lower, s.lower, epsilon = 1e-12);
            assert_abs_diff_eq!(r.upper, s.upper, epsilon = 1e-12);
        }
    }

    #[test]
    fn rejects_bad_pairs() {
        let g = fixtures::path(3);
        let p = PairwiseParams::default();
        assert!(commute_pairwise_bounds(&g, 1, 1, &p).is_err());
        assert!(commute_pairwise_bounds(&g, 0, 3, &p).is_err());
        let bad = PairwiseParams { lambda_lo: 5.0, ..p };
        assert!(commute_pairwise_bounds(&g, 0, 1, &bad).is_err());
    }

    #[test]
    fn baselines() {
        let g = fixtures::single_edge();
        let c = cg_pairwise_baseline(&g, BaselineKind::Commute, 0, 1, 1e-4, 10).unwrap();
        assert_abs_diff_eq!(c.estimate, 2.0, epsilon = 1e-4);
        let k = cg_pairwise_baseline(&g, BaselineKind::Katz { alpha: 0.5 }, 0, 1, 1e-4, 10).unwrap();
        assert_abs_diff_eq!(k.estimate, 2.0 / 3.0, epsilon = 1e-4);
        assert_eq!(k.matvecs, k.iterations);
    }

    #[test]
    fn spectrum_check() {
        let g = fixtures::single_edge();
        let op = AdjustedLaplacianOperator::new(&g);
        assert!(validate_spectrum_bounds(&op, 1e-4, 2.5).is_ok());
        assert!(validate_spectrum_bounds(&op, 1.5, 2.5).is_err());
        assert!(validate_spectrum_bounds(&op, 1e-4, 1.9).is_err());
        // the 1-norm default touches the top eigenvalue here
        assert!(validate_spectrum_bounds(&op, 1e-4, 2.0).is_ok());
    }

    #[test]
    fn hard_alpha_on_star() {
        let a = hard_alpha(&fixtures::star(3), 1).unwrap();
        assert_abs_diff_eq!(a, 1.0 / (3f64.sqrt() + 1.0), epsilon = 1e-9);
    }
}
