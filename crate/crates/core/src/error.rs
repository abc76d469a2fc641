use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid signature: p = {p}, n = {n} (need 0 <= p <= n, n >= 1)")]
    InvalidSignature { p: usize, n: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("point {point:?} outside the domain (or stencil leaves it)")]
    Boundary { point: Vec<f64> },

    #[error("not Lagrangian: defect {defect:e} exceeds tolerance {tol:e}")]
    NotLagrangian { defect: f64, tol: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid family spec: {0}")]
    Spec(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("flow left the ambient bound {bound} (|z| = {norm})")]
    Divergence { bound: f64, norm: f64 },

    #[error("sampling failed: {0}")]
    Sampling(String),
}

pub type Result<T> = std::result::Result<T, Error>;
