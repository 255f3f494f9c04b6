use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("atom count must be at least 1")]
    EmptySystem,

    #[error("projection {value} is not an integer or half-integer")]
    NotHalfInteger { value: f64 },

    #[error("projection {value} does not match the parity of N = {n_atoms}")]
    ParityMismatch { value: f64, n_atoms: usize },

    #[error("projection {value} lies outside [-{half}, {half}]", half = *n_atoms as f64 / 2.0)]
    ProjectionOutOfRange { value: f64, n_atoms: usize },

    #[error("operator count {0} outside 1..=4")]
    OperatorCount(usize),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("time {t} outside the schedule interval [0, {duration}]")]
    TimeOutOfRange { t: f64, duration: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not Hermitian (max |M - M^H| = {defect:e})")]
    NotHermitian { defect: f64 },

    #[error("spectrum degenerate: gap {gap:e} below threshold {threshold:e}")]
    Degenerate { gap: f64, threshold: f64 },

    #[error("tangent vector is not orthogonal to the state (overlap {overlap:e})")]
    GaugeViolation { overlap: f64 },

    #[error("Gram matrix singular (condition estimate {condition:e})")]
    IllConditioned { condition: f64 },

    #[error("averaging support is empty")]
    EmptySupport,

    #[error("final fidelity drifted by {drift:e} between {steps} and {} steps", 2 * steps)]
    NonConvergent { drift: f64, steps: usize },

    #[error("pulse sequence base target is neither L1 nor L2")]
    UnrecognizedTarget,
}
