use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix exponential overflow (1-norm {norm:e})")]
    Overflow { norm: f64 },

    #[error("matrix is singular to working precision (reciprocal condition {rcond:e})")]
    Singular { rcond: f64 },

    #[error("near-defective matrix: eigenvector condition estimate {estimate:e}")]
    NearDefective { estimate: f64 },

    #[error("eigenvalue iteration did not converge")]
    NoConvergence,

    /// The determinant vanished (or its phase kept jumping) along the
    /// continuation path with the step size already at its floor.
    #[error("square-root branch is ambiguous near path parameter {at} (|det| = {min_det:e})")]
    BranchAmbiguity { at: f64, min_det: f64 },

    #[error("no unique steady state: Liouvillian gap is {gap:e}")]
    ZeroGap { gap: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("symmetry violated: {what} (deviation {magnitude:e})")]
    Symmetry { what: &'static str, magnitude: f64 },

    #[error("N = {n} exceeds the Fock-space oracle limit of {limit}")]
    OracleCap { n: usize, limit: usize },

    #[error("non-finite entries in result of {0}")]
    NonFinite(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
