use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use super::{Density, Sample, Univariate};
use crate::error::{Error, Result};
use crate::linalg::{check_spd, cholesky_lower, inverse_spd, symmetrize};
use crate::rng::RandomSource;

/// Multivariate normal with cached precision factorization.
///
/// Densities are evaluated as `-½‖Lᵀ(x-μ)‖² + Σ ln L_ii - (p/2) ln 2π` where
/// `L Lᵀ` is the precision, so no covariance determinant is ever formed
/// explicitly.
#[derive(Debug, Clone)]
pub struct GaussianDistribution {
    mean: DVector<f64>,
    covariance: DMatrix<f64>,
    precision: DMatrix<f64>,
    // lower Cholesky factor of the precision, row-major
    prec_chol: Vec<f64>,
    log_det_cov: f64,
}

impl GaussianDistribution {
    pub fn new(mean: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        check_dims(&mean, &covariance)?;
        check_spd(&covariance)?;
        let precision = inverse_spd(&covariance)?;
        Self::assemble(mean, symmetrize(&covariance), precision)
    }

    pub fn from_precision(mean: DVector<f64>, precision: DMatrix<f64>) -> Result<Self> {
        check_dims(&mean, &precision)?;
        let covariance = inverse_spd(&precision)?;
        Self::assemble(mean, covariance, symmetrize(&precision))
    }

    /// `N(mean, variance · I)`.
    pub fn isotropic(mean: DVector<f64>, variance: f64) -> Result<Self> {
        if !(variance > 0.0) || !variance.is_finite() {
            return Err(Error::Domain(format!("variance must be positive, got {variance}")));
        }
        let p = mean.len();
        let covariance = DMatrix::identity(p, p) * variance;
        let precision = DMatrix::identity(p, p) / variance;
        Self::assemble(mean, covariance, precision)
    }

    fn assemble(mean: DVector<f64>, covariance: DMatrix<f64>, precision: DMatrix<f64>) -> Result<Self> {
        if mean.iter().any(|m| !m.is_finite()) {
            return Err(Error::Domain("non-finite mean".into()));
        }
        let l = cholesky_lower(&precision)?;
        let p = mean.len();
        let mut prec_chol = vec![0.0; p * p];
        let mut log_det_prec = 0.0;
        for i in 0..p {
            for j in 0..=i {
                prec_chol[i * p + j] = l[(i, j)];
            }
            log_det_prec += 2.0 * l[(i, i)].ln();
        }
        Ok(Self {
            mean,
            covariance,
            precision,
            prec_chol,
            log_det_cov: -log_det_prec,
        })
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn precision(&self) -> &DMatrix<f64> {
        &self.precision
    }

    pub fn log_det_covariance(&self) -> f64 {
        self.log_det_cov
    }

    /// Distribution of `wᵀX`.
    pub fn linear_functional(&self, weights: &[f64]) -> Result<Univariate> {
        if weights.len() != self.mean.len() {
            return Err(Error::Dimension {
                expected: self.mean.len(),
                got: weights.len(),
            });
        }
        let w = DVector::from_column_slice(weights);
        let mean = w.dot(&self.mean);
        let var = (w.transpose() * &self.covariance * &w)[(0, 0)];
        Univariate::normal(mean, var.max(0.0).sqrt())
    }

    /// Marginal of coordinate `i`.
    pub fn marginal(&self, i: usize) -> Result<Univariate> {
        let mut w = vec![0.0; self.mean.len()];
        *w.get_mut(i).ok_or(Error::Dimension {
            expected: self.mean.len(),
            got: i + 1,
        })? = 1.0;
        self.linear_functional(&w)
    }
}

fn check_dims(mean: &DVector<f64>, m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != mean.len() || m.ncols() != mean.len() {
        return Err(Error::Dimension {
            expected: mean.len(),
            got: m.nrows(),
        });
    }
    if mean.is_empty() {
        return Err(Error::Domain("zero-dimensional distribution".into()));
    }
    Ok(())
}

impl Density for GaussianDistribution {
    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        let p = self.mean.len();
        debug_assert_eq!(x.len(), p);
        let mut quad = 0.0;
        for j in 0..p {
            let mut z = 0.0;
            for i in j..p {
                z += self.prec_chol[i * p + j] * (x[i] - self.mean[i]);
            }
            quad += z * z;
        }
        -0.5 * quad - 0.5 * self.log_det_cov - 0.5 * p as f64 * (2.0 * PI).ln()
    }
}

impl Sample for GaussianDistribution {
    fn sample_into(&self, rng: &mut RandomSource, out: &mut [f64]) {
        let p = self.mean.len();
        for v in out.iter_mut() {
            *v = rng.standard_normal();
        }
        // back-substitute Lᵀ v = z in place
        for j in (0..p).rev() {
            let mut s = out[j];
            for i in j + 1..p {
                s -= self.prec_chol[i * p + j] * out[i];
            }
            out[j] = s / self.prec_chol[j * p + j];
        }
        for (o, m) in out.iter_mut().zip(self.mean.iter()) {
            *o += m;
        }
    }
}
