//! Pairwise and column-wise Katz scores and commute times on large sparse graphs.
//!
//! Two families of queries are supported:
//!
//! * **Pairwise** scores with certified two-sided bounds. A Lanczos recurrence on
//!   `I - alpha*A` (Katz) or on the adjusted Laplacian `L + (1/n) e e^T` (commute
//!   time) drives constant-time Gauss and Gauss-Radau quadrature updates, so every
//!   iteration yields a lower and an upper bound on the score. See [`pairwise`].
//! * **Column-wise** scores. A Katz column is computed with a local
//!   Gauss-Southwell ("push") solver that only touches the vertices carrying
//!   significant residual ([`column_katz`]); a commute-time column is estimated
//!   from one CG-Lanczos solve that also accumulates the diagonal of the inverse
//!   ([`column_commute`]).
//!
//! Graphs are loaded once into an immutable compressed-row [`Graph`], and all
//! solvers see the matrices only through [`LinearOperator`]s that count their
//! matrix-vector products.
//!
//! The [`eval`] module holds the measurement vocabulary (participation ratio,
//! precision@k, Kendall tau, performance ratio, vertex sampling) and [`solvers`]
//! holds conjugate gradient plus dense reference oracles for small graphs.

// `!(x > 0.0)` is used on purpose so that NaN fails parameter checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod column_commute;
pub mod column_katz;
pub mod error;
pub mod eval;
pub mod fixtures;
pub mod graph;
pub mod lanczos;
pub mod operator;
pub mod pairwise;
pub mod quadrature;
pub mod solvers;
pub mod tridiag;

pub use error::{Error, Result};
pub use graph::{Graph, GraphSummary, IndexBase, RawEdges};
pub use operator::{
    AdjacencyOperator, AdjustedLaplacianOperator, DenseOperator, KatzOperator, LinearOperator,
    PreconditionedLaplacianOperator,
};

pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub(crate) fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}
