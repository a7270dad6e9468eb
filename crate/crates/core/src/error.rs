use thiserror::Error;

use num_complex::Complex64;

/// Errors raised by the growth, Schwarz-function and hodograph machinery.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("point {point} is {distance:.3e} from the contour (minimum {min_distance:.3e})")]
    TooClose {
        point: Complex64,
        distance: f64,
        min_distance: f64,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("fit residual {residual:.3e} exceeds threshold {threshold:.3e}")]
    FitFailure { residual: f64, threshold: f64 },

    #[error("cusp: {0}")]
    Cusp(String),

    #[error("inverse map did not converge for z = {z} (last iterate w = {last})")]
    Inversion { z: Complex64, last: Complex64 },

    #[error("Newton iteration did not converge: {0}")]
    NotConverged(String),

    #[error("singular Jacobian near a bifurcation point (smallest singular value {sigma_min:.3e})")]
    Bifurcation { sigma_min: f64 },

    #[error("infeasible parameters: {0}")]
    Infeasible(String),

    #[error("point {0} lies on a branch cut")]
    OnCut(Complex64),

    #[error("evaluation at a singular point: {0}")]
    Singular(String),

    #[error("tracing failed: {0}")]
    Trace(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("I/O error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// True for failures of a numerical procedure (as opposed to bad input or I/O).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Cusp(_)
                | Error::Inversion { .. }
                | Error::NotConverged(_)
                | Error::Bifurcation { .. }
                | Error::FitFailure { .. }
                | Error::Trace(_)
                | Error::Infeasible(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
