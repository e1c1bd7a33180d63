//! Quadratic-Gaussian rate-distortion under an uncorrelated-distortion
//! constraint.
//!
//! The crate computes `R⊥(D)` for Gaussian vectors ([`vector`]) and
//! stationary Gaussian processes ([`process`]), compares it with the
//! classical water-filling function ([`analysis`]), and cross-checks the
//! optimizer with independent numerical oracles ([`validation`]).

// Negated comparisons deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod bisect;
pub mod error;
pub mod linalg;
pub mod process;
pub mod registry;
pub mod validation;
pub mod vector;

pub use error::{Error, Result};
pub use linalg::{EigenDecomposition, SquareMatrix, SymmetricMatrix};
pub use process::{QuadratureGrid, SampledSpectrum, SpectrumModel};
pub use vector::{DistortionLaw, RdPoint, SourceCovariance, Units};
