//! Numerical core for subwavelength band structures of a 2D square-lattice
//! bubbly phononic crystal and for the localized defect mode created by
//! resizing a single bubble.
//!
//! The crate is organised around the boundary-integral formulation on the
//! unit cell: a Fourier (multipole) basis on the bubble boundary turns every
//! layer-potential operator into a small dense complex matrix.
//!
//! - [`specfun`]: cylindrical Bessel/Hankel functions and the log-expansion
//!   constant of the 2D Helmholtz kernel.
//! - [`latsum`]: Ewald-accelerated quasi-periodic lattice sums with a
//!   damped brute-force oracle.
//! - [`operators`]: assembly of the quasi-periodic and free-space block
//!   operators and the static capacitance.
//! - [`spectral`]: determinant evaluation, Muller root finding, band
//!   structure along Gamma-X-M-Gamma and the band-edge curvature.
//! - [`defect`]: fictitious-source defect operator, Brillouin-zone
//!   quadrature, defect-frequency search, asymptotic formulas and localized
//!   mode reconstruction.

pub mod defect;
pub mod error;
pub mod latsum;
pub mod operators;
pub mod quadrature;
pub mod specfun;
pub mod spectral;

pub use error::{Error, Result};
