use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("repeated roots: two roots of f are {distance:.3e} apart (tolerance {tolerance:.3e})")]
    RepeatedRoots { distance: f64, tolerance: f64 },

    #[error("root finding did not converge (residual {residual:.3e})")]
    RootFindFailure { residual: f64 },

    #[error("curve function has a pole at x = 0")]
    PoleAtPoint,

    #[error("evaluation at the point at infinity is not supported")]
    InfinityNotSupported,

    #[error("local parameter |t| = {t:.3e} exceeds the convergence radius {radius:.3e}")]
    TooFarFromInfinity { t: f64, radius: f64 },

    #[error("point is not on the curve (residual {residual:.3e})")]
    NotOnCurve { residual: f64 },

    #[error("degenerate cycle geometry: {0}")]
    DegenerateGeometry(String),

    #[error("quadrature did not converge to {tol:.1e} (last change {change:.3e})")]
    QuadratureNonConvergence { tol: f64, change: f64 },

    #[error("omega' is ill conditioned (condition number {cond:.3e})")]
    IllConditionedOmega { cond: f64 },

    #[error("period matrix check failed: {0}")]
    InvalidPeriods(String),

    #[error("sigma normalization degenerate: {0}")]
    DegenerateNormalization(String),

    #[error("argument lies on the theta divisor (|sigma| = {value:.3e}, scale {scale:.3e})")]
    OnThetaDivisor { value: f64, scale: f64 },

    #[error("quasi-periodicity sign is inconsistent: ratio {ratio} deviates from +-1")]
    InconsistentChi { ratio: String },

    #[error("path passes within {clearance:.3e} of a branch point")]
    PathNearBranchPoint { clearance: f64 },

    #[error("argument is at a lattice point (|sigma_2| = {value:.3e})")]
    AtOrigin { value: f64 },

    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
