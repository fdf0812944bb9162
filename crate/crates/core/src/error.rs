use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid weight: {0}")]
    InvalidWeight(String),

    #[error("grid too narrow: {0}")]
    GridTooNarrow(String),

    #[error("invalid slope window [{lo}, {hi}]: {reason}")]
    InvalidWindow { lo: f64, hi: f64, reason: String },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("convexity violated: second difference {value:e} at v = {v}")]
    ConvexityViolation { v: f64, value: f64 },

    #[error("invalid section space: {0}")]
    InvalidSpace(String),

    #[error("quadrature truncation for j = {j}: endpoint exponent only {margin:.1} below peak (need 92); widen the quadrature grid")]
    Truncation { j: usize, margin: f64 },

    #[error("quadrature did not converge for j = {j} (relative change {change:e})")]
    QuadratureNotConverged { j: usize, change: f64 },

    #[error("dimension identity violated: integral {integral} vs dimension {dimension}")]
    DimensionMismatch { integral: f64, dimension: usize },

    #[error("Gram factorization failed (condition estimate {condition:e})")]
    Factorization { condition: f64 },

    #[error("k = {0} exceeds the Gram oracle limit of 40")]
    GramOrderTooLarge(usize),

    #[error("probe v = {v} lies in the contact set (gap {gap:e} < 0.05)")]
    ProbeInContact { v: f64, gap: f64 },

    #[error("bad expansion probe v = {v}: {reason}")]
    BadProbe { v: f64, reason: String },

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, LabError>;
