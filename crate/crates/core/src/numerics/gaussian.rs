use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use super::{DiagonalPsd, NumericsError, Result, SimRng, SpdMatrix, SquareMatrix};

#[derive(Debug, Clone, PartialEq)]
pub enum Covariance {
    Full(SpdMatrix),
    Diagonal(DiagonalPsd),
}

impl Covariance {
    pub fn dim(&self) -> usize {
        match self {
            Covariance::Full(v) => v.dim(),
            Covariance::Diagonal(d) => d.dim(),
        }
    }

    pub fn to_matrix(&self) -> SquareMatrix {
        match self {
            Covariance::Full(v) => v.matrix().clone(),
            Covariance::Diagonal(d) => d.to_matrix(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianLaw {
    mean: Vec<f64>,
    cov: Covariance,
}

impl GaussianLaw {
    pub fn new(mean: Vec<f64>, cov: Covariance) -> Result<Self> {
        if mean.len() != cov.dim() {
            return Err(NumericsError::DimMismatch {
                expected: cov.dim(),
                found: mean.len(),
            });
        }
        if let Some(index) = mean.iter().position(|v| !v.is_finite()) {
            return Err(NumericsError::NonFinite { index });
        }
        Ok(Self { mean, cov })
    }

    pub fn full(mean: Vec<f64>, cov: SpdMatrix) -> Result<Self> {
        Self::new(mean, Covariance::Full(cov))
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn cov(&self) -> &Covariance {
        &self.cov
    }
}

/// Log density of `x` under `law`.
///
/// A diagonal covariance with a zero entry has no density and yields
/// [`NumericsError::SingularCovariance`].
pub fn log_gaussian_density(x: &[f64], law: &GaussianLaw) -> Result<f64> {
    let n = law.dim();
    if x.len() != n {
        return Err(NumericsError::DimMismatch {
            expected: n,
            found: x.len(),
        });
    }
    let z = super::sub(x, law.mean());
    let (logdet, quad) = match law.cov() {
        Covariance::Full(v) => (v.logdet(), v.quad_form_inv(&z)?),
        Covariance::Diagonal(d) => {
            if !d.is_positive_definite() {
                return Err(NumericsError::SingularCovariance);
            }
            let logdet = d.diag().iter().map(|v| v.ln()).sum::<f64>();
            let quad = z.iter().zip(d.diag()).map(|(zi, v)| zi * zi / v).sum::<f64>();
            (logdet, quad)
        }
    };
    Ok(-0.5 * n as f64 * (2.0 * PI).ln() - 0.5 * logdet - 0.5 * quad)
}

/// Draws `mean + L·z` with `z` standard normal. Always consumes exactly
/// `law.dim()` normals from the stream, also for degenerate diagonal
/// entries.
pub fn sample_gaussian(rng: &mut SimRng, law: &GaussianLaw) -> Vec<f64> {
    let z: Vec<f64> = (0..law.dim()).map(|_| rng.sample(StandardNormal)).collect();
    let shift = match law.cov() {
        Covariance::Full(v) => v.chol_mul(&z),
        Covariance::Diagonal(d) => z.iter().zip(d.diag()).map(|(zi, v)| zi * v.sqrt()).collect(),
    };
    law.mean().iter().zip(shift).map(|(m, s)| m + s).collect()
}
