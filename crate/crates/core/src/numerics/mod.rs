//! Dense symmetric linear algebra and Gaussian primitives.
//!
//! Everything here is sized for desk-scale systems (tens of agents); all
//! factorizations are plain O(n³) dense routines.

mod gaussian;
mod matrix;
mod rng;
mod sum;

pub use gaussian::{log_gaussian_density, sample_gaussian, Covariance, GaussianLaw};
pub use matrix::{DiagonalPsd, SpdMatrix, SquareMatrix, EIG_MAX_SWEEPS, SYMMETRY_TOL};
pub use rng::{derive_seed, rng_from_seed, splitmix64, SimRng};
pub use sum::KahanSum;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("matrix is not symmetric (max asymmetry {max_asymmetry:e})")]
    NotSymmetric { max_asymmetry: f64 },
    #[error("matrix is not positive definite (pivot {pivot} is {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("non-finite entry at index {index}")]
    NonFinite { index: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("eigenvalue iteration did not converge after {sweeps} sweeps")]
    ConvergenceFailure { sweeps: usize },
    #[error("covariance is singular; density is undefined")]
    SingularCovariance,
    #[error("negative diagonal entry {value} at index {index}")]
    NegativeDiagonal { index: usize, value: f64 },
}

pub type Result<T> = std::result::Result<T, NumericsError>;

/// Squared Euclidean norm.
pub fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

pub(crate) fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}
