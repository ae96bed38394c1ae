use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("non-finite sample {value} at ({x1}, {x2})")]
    NonFiniteSample { x1: f64, x2: f64, value: f64 },

    #[error("time {t} lies outside the forcing record span [{start}, {end}]")]
    OutsideSpan { t: f64, start: f64, end: f64 },

    #[error(
        "integration failed at t = {t}: step size {step:e} fell below {min_step:e} \
         after {accepted} accepted / {rejected} rejected steps"
    )]
    StepUnderflow {
        t: f64,
        step: f64,
        min_step: f64,
        accepted: usize,
        rejected: usize,
    },

    #[error("integration failed at t = {t}: state became non-finite")]
    NonFiniteState { t: f64 },

    #[error("sample is not harmonic: Laplacian residual {residual:e} exceeds {threshold:e} at ({x1}, {x2})")]
    NotHarmonic {
        residual: f64,
        threshold: f64,
        x1: f64,
        x2: f64,
    },

    #[error("sample does not vanish on the Dirichlet boundary: |v| = {value:e} at x1 = {x1}")]
    BoundaryViolation { value: f64, x1: f64 },

    #[error("projection did not converge: doubling the quadrature order changed coefficients by {discrepancy:e} (limit {tolerance:e})")]
    QuadratureNotConverged { discrepancy: f64, tolerance: f64 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            name,
            reason: reason.into(),
        }
    }
}
