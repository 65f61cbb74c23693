//! Closed-form targets: intensities, pair correlation, interval laws,
//! asymptotic variances and space-time covariance kernels.

mod d1;
mod d2;
mod kernel;
mod sigma0;

pub use d1::{
    exposed_interval_law, intensity_1d, pair_atoms_1d, pcf_1d, sigma1_sq, typical_interval_law,
    vacancy, IntervalLaw, IntervalLawKind, PairAtom,
};
pub use d2::{beta1, beta3, boundary_intensity_2d, sigma2_sq, Lambda2, Sigma2};
pub use kernel::{kernel, Kernel, KernelKind};
pub use sigma0::{mark_intensity, plane_deficit_integral, sigma0_sq, Leaf, Sigma0};

use crate::grains::GrainError;

/// Tolerance for nested quadratures feeding the variance formulas.
pub(crate) const NESTED_TOL: f64 = 1e-11;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum ClosedFormError {
    #[error("formula requires single-interval leaves")]
    NotInterval,
    #[error("formula requires F(0) = 0 (leaves of positive length)")]
    ZeroLengthMass,
    #[error("incompatible mark and shape: {0}")]
    Incompatible(String),
    #[error("moment condition violated: {0}")]
    Moment(String),
    #[error("law lacks the required property: {0}")]
    MissingFlag(String),
    #[error(transparent)]
    Grain(#[from] GrainError),
}
