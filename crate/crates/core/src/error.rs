use num_complex::Complex64;
use thiserror::Error;

/// Errors produced by the solver layers.
///
/// Numerical "absence" outcomes (no defect root for the wrong perturbation
/// sign) are *not* errors; they are reported through result types.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("singular argument: Hankel functions diverge at z = 0")]
    SingularArgument,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("Bloch vector alpha = (0,0) is unsupported (static layer potential not invertible)")]
    GammaPoint,

    #[error("empty-lattice resonance: | |alpha+2*pi*q| - k | = {distance:.3e} below threshold")]
    EmptyLatticeResonance { distance: f64 },

    #[error("lattice sum failed to converge; last partial estimates {last:?}, {previous:?}")]
    ConvergenceFailure {
        last: Complex64,
        previous: Complex64,
    },

    #[error("resonant denominator in defect transfer ratio at Fourier order {order}")]
    ResonantDenominator { order: i32 },

    #[error("matrix assembly/solve is singular: {0}")]
    SingularMatrix(String),

    #[error("omega = {omega} is not above the band maximum {omega_star}; BZ-averaged inverse undefined in-band")]
    InBand { omega: f64, omega_star: f64 },

    #[error("no root found: {0}")]
    NoRootFound(String),

    #[error("band curvature fit is not positive (c = {0})")]
    CurvatureFit(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
