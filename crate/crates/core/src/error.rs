use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("vertex {vertex} is out of range (n = {n})")]
    VertexOutOfRange { vertex: usize, n: usize },

    #[error("graph is empty after preprocessing")]
    EmptyGraph,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("spectral norm estimate did not converge in {iterations} iterations (best estimate {estimate})")]
    NoConvergence { iterations: usize, estimate: f64 },

    #[error("operator is not positive definite (pivot {pivot:e} at step {step})")]
    NotPositiveDefinite { step: usize, pivot: f64 },

    #[error("degenerate quadrature step {step}: {what} is numerically zero")]
    DegenerateStep { step: usize, what: &'static str },

    #[error("shifted tridiagonal system is singular at prescribed point {0}")]
    SingularShift(f64),

    #[error("graph too large for dense reference ({n} > {limit})")]
    TooLarge { n: usize, limit: usize },

    #[error("reference solve failed to converge (relative residual {residual:e})")]
    ReferenceFailed { residual: f64 },

    #[error("metric undefined: {0}")]
    UndefinedMetric(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
