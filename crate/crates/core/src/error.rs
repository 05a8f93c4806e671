use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("fields live on different chart domains")]
    DomainMismatch,

    #[error("point {point:?} lies outside the chart domain")]
    OutsideDomain { point: Vec<f64> },

    #[error("expected {expected} argument(s), got {got}")]
    Arity { expected: usize, got: usize },

    #[error("degree {degree} exceeds chart dimension {dim}")]
    DegreeOverflow { degree: usize, dim: usize },

    #[error("cannot contract degree {inner} into degree {outer}")]
    DegreeUnderflow { inner: usize, outer: usize },

    #[error("degenerate at {point:?}: conditioning {ratio:e} below {threshold:e}")]
    Degenerate { point: Vec<f64>, ratio: f64, threshold: f64 },

    #[error("zero of the top power at {point:?} is not transverse: |derivative| = {margin:e} < {threshold:e}")]
    TransversalityFail { point: Vec<f64>, margin: f64, threshold: f64 },

    #[error("non-finite value at {point:?}")]
    NonFinite { point: Vec<f64> },

    #[error("volume form check failed: min |θ∧η^(n-1)| = {min:e}")]
    NotCosymplectic { min: f64 },

    #[error("boundary data disagree: residual {residual:e} exceeds {tolerance:e}")]
    BoundaryMismatch { residual: f64, tolerance: f64 },

    #[error("glue profile is not monotone on each side of zero")]
    NonMonotoneProfile,

    #[error("no inflation constant up to K = {k_max:e} makes the form nondegenerate")]
    InflationFail { k_max: f64 },

    #[error("circle action is undefined on the zero section")]
    ZeroSection,

    #[error("point violates the cotangent-sphere constraints by {residual:e}")]
    ConstraintViolation { residual: f64 },

    #[error("map is not symplectic: residual {residual:e} exceeds {tolerance:e}")]
    NotSymplectic { residual: f64, tolerance: f64 },

    #[error("unknown sphere label `{0}`")]
    UnknownSphere(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("scenario error: {0}")]
    Scenario(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
