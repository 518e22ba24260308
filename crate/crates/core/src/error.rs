use std::path::PathBuf;

/// Everything that can go wrong inside the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("grid resolution N={0} violates the bound N ≥ 8")]
    GridTooSmall(usize),
    #[error("grid dimension {0} is not supported (expected 1 or 2)")]
    UnsupportedDim(usize),
    #[error("field has {got} samples but the grid has {expected} nodes")]
    LengthMismatch { expected: usize, got: usize },
    #[error("non-finite sample at node {0}")]
    NonFinite(usize),
    #[error("grids differ: {0}")]
    GridMismatch(String),
    #[error("input is not convex: eigenvalue {value:.3e} at node {node}")]
    NonConvexInput { node: usize, value: f64 },
    #[error("time list must be nonnegative and strictly increasing (offending index {0})")]
    NonMonotoneT(usize),
    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    MaxIterations { iterations: usize, residual: f64 },
    #[error("time step underflow at t={t}: dt={dt:.3e} is below dt_min")]
    StepUnderflow { t: f64, dt: f64 },
    #[error("Newton iteration did not converge at t={t}, even with dt={dt:.3e}")]
    NewtonStall { t: f64, dt: f64 },
    #[error("state lost convexity at t={t}: min eigenvalue {value:.3e}")]
    NonConvexState { t: f64, value: f64 },
    #[error("CFL violation: dt={dt:.3e} exceeds stable limit {limit:.3e}")]
    CflViolation { dt: f64, limit: f64 },
    #[error("density lost positivity at t={t}")]
    PositivityLoss { t: f64 },
    #[error("site list is empty")]
    EmptySiteSet,
    #[error("support mask is empty")]
    EmptySupport,
    #[error("unknown builtin `{0}`")]
    UnknownBuiltin(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("malformed field file {path}: {reason}")]
    FieldFormat { path: PathBuf, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
