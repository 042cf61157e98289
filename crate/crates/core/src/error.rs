use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the library can report.
///
/// Variants are grouped by [`ErrorClass`], which the command-line front end
/// maps onto process exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("coordinate index {index} out of range for {dim} covariate(s)")]
    Index { index: usize, dim: usize },

    #[error("degenerate density: dF/dy = {value:e} is below the positivity floor {floor:e}")]
    DegenerateDensity { value: f64, floor: f64 },

    #[error("quadrature did not converge: estimate {estimate:e}, error estimate {error_estimate:e} (requested {tolerance:e})")]
    Quadrature {
        estimate: f64,
        error_estimate: f64,
        tolerance: f64,
    },

    #[error("no sign change on [{lower}, {upper}] (f = {f_lower:e}, {f_upper:e})")]
    Bracketing {
        lower: f64,
        upper: f64,
        f_lower: f64,
        f_upper: f64,
    },

    #[error("singular evaluation at y = {at}: {reason}")]
    Singularity { at: f64, reason: String },

    #[error(
        "|B| = {b:e} is below {floor:e}: the weighted model looks homoscedastic; run the homoscedasticity diagnostic"
    )]
    Homoscedastic { b: f64, floor: f64 },

    #[error("inverting the transformation failed at value {value}")]
    Inversion { value: f64 },

    #[error("grid point {y} lies inside the excision band of half-width {half_width:e} around y0 = {y0}")]
    ExcisionBand { y: f64, y0: f64, half_width: f64 },

    #[error("alpha2 limit did not converge after {halvings} halvings (last relative change {rel_change:e})")]
    LimitFailure { halvings: usize, rel_change: f64 },

    #[error("reconstruction inconsistent: {0}")]
    Inconsistent(String),

    #[error("invalid constraints: {0}")]
    Constraint(String),

    #[error(
        "effective local sample size {ess:.3} below floor {floor} at x = {x:?}; try a bandwidth near {suggested:?}"
    )]
    Bandwidth {
        ess: f64,
        floor: f64,
        x: Vec<f64>,
        suggested: Vec<f64>,
    },

    #[error("identification failed: {0}")]
    Identification(String),

    #[error("trajectory left the positive half-line at y = {at} (h = {value:e})")]
    DomainExit { at: f64, value: f64 },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("verification failed: {0}")]
    Verification(String),
}

/// Coarse failure categories, one per process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Identification,
    Numerical,
    Io,
    Verification,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Config => 2,
            ErrorClass::Identification => 3,
            ErrorClass::Numerical => 4,
            ErrorClass::Io => 5,
            ErrorClass::Verification => 6,
        }
    }
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Config(_) | Error::Invalid(_) | Error::Constraint(_) | Error::Index { .. } => ErrorClass::Config,
            Error::Homoscedastic { .. } | Error::Identification(_) | Error::Bracketing { .. } => {
                ErrorClass::Identification
            }
            Error::Io { .. } | Error::Csv(_) => ErrorClass::Io,
            Error::Verification(_) => ErrorClass::Verification,
            _ => ErrorClass::Numerical,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
