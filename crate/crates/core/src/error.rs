use num_complex::Complex64;
use thiserror::Error;

use crate::seedlang::SeedError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid underresolved: {0}")]
    GridUnderresolved(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("degenerate fiber at ({x}, {y}): 4α − β² = {discriminant}")]
    DegenerateFiber { x: f64, y: f64, discriminant: f64 },

    #[error("not invertible: zero element")]
    NotInvertible,

    #[error("ellipticity violated at ({x}, {y}): Im λ = {im}")]
    EllipticityViolated { x: f64, y: f64, im: f64 },

    #[error("point ({x}, {y}) is outside the structure domain: {reason}")]
    OutsideDomain { x: f64, y: f64, reason: String },

    #[error("not in upper half-plane: λ = {0}")]
    NotUpperHalfPlane(Complex64),

    #[error("outside unit disk: μ = {0}")]
    OutsideUnitDisk(Complex64),

    #[error("structure mismatch: {0}")]
    StructureMismatch(String),

    #[error("exact or invalid residual: {0}")]
    InvalidResidual(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("inversion failed: {0}")]
    InversionFailed(String),

    #[error("near-singular chart at ({x}, {y}): |det| = {det:e}")]
    NearSingularChart { x: f64, y: f64, det: f64 },

    #[error("near-shock at ({x}, {y}): |J| = {j:e}")]
    NearShock { x: f64, y: f64, j: f64 },

    #[error("no convergence at ({x}, {y}) after {iters} iterations (residual {residual:e})")]
    NoConvergence { x: f64, y: f64, iters: usize, residual: f64 },

    #[error("ellipticity lost at ({x}, {y}): Im λ = {im}")]
    EllipticityLost { x: f64, y: f64, im: f64 },

    #[error("no initial column: {0}")]
    NoInitialColumn(String),

    #[error("axis column x = 0 is not on the grid")]
    AxisAbsent,

    #[error("structure is not rigid: max ρ_T = {max_rho_t:e} exceeds tolerance {tolerance:e}")]
    NotRigid { max_rho_t: f64, rms_rho_t: f64, tolerance: f64 },

    #[error("empty region: {0}")]
    EmptyRegion(String),

    #[error(transparent)]
    Seed(#[from] SeedError),

    #[error("format error: {0}")]
    Format(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Failures of the numerics themselves (Newton, ellipticity, singular
    /// charts) as opposed to bad input or I/O.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DegenerateFiber { .. }
                | Error::NotInvertible
                | Error::EllipticityViolated { .. }
                | Error::NotUpperHalfPlane(_)
                | Error::OutsideUnitDisk(_)
                | Error::InversionFailed(_)
                | Error::NearSingularChart { .. }
                | Error::NearShock { .. }
                | Error::NoConvergence { .. }
                | Error::EllipticityLost { .. }
        ) || matches!(self, Error::Seed(SeedError::Singular { .. }))
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Format(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}
