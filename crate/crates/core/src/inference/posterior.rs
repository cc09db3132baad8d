use nalgebra::{DMatrix, DVector};

use super::GaussianDistribution;
use crate::error::{Error, Result};
use crate::linalg::solve_spd;
use crate::policy::ArmCounts;
use crate::trajectory::GramAccumulator;

fn check_sigma2(sigma2: f64) -> Result<()> {
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(Error::Domain(format!("outcome variance must be positive, got {sigma2}")));
    }
    Ok(())
}

/// Least-squares / maximum-likelihood coefficients `(XᵀX)⁻¹Xᵀy`.
pub fn mle(acc: &GramAccumulator) -> Result<DVector<f64>> {
    if acc.count() == 0 {
        return Err(Error::Singular { lambda_min: 0.0 });
    }
    solve_spd(acc.gram(), acc.xty())
}

/// `N(β̂, σ²(XᵀX)⁻¹)`.
pub fn representative_normal(acc: &GramAccumulator, sigma2: f64) -> Result<GaussianDistribution> {
    check_sigma2(sigma2)?;
    let mean = mle(acc)?;
    GaussianDistribution::from_precision(mean, acc.gram() / sigma2)
}

/// Exact posterior under a Gaussian prior and known outcome variance.
///
/// Precision adds: `Σ_post⁻¹ = Σ_prior⁻¹ + XᵀX/σ²`, and the mean solves
/// `Σ_post⁻¹ m = Σ_prior⁻¹ μ_prior + Xᵀy/σ²`.
pub fn gaussian_conjugate_posterior(
    prior: &GaussianDistribution,
    acc: &GramAccumulator,
    sigma2: f64,
) -> Result<GaussianDistribution> {
    check_sigma2(sigma2)?;
    if acc.dim() != prior.mean().len() {
        return Err(Error::Dimension {
            expected: prior.mean().len(),
            got: acc.dim(),
        });
    }
    if acc.count() == 0 {
        return Ok(prior.clone());
    }
    let precision = prior.precision() + acc.gram() / sigma2;
    let rhs = prior.precision() * prior.mean() + acc.xty() / sigma2;
    let mean = solve_spd(&precision, &rhs)?;
    GaussianDistribution::from_precision(mean, precision)
}

/// Exact posterior for Gaussian arms with per-arm known variances.
pub fn heteroskedastic_conjugate_posterior(
    prior: &GaussianDistribution,
    counts: &ArmCounts,
    variances: &[f64],
) -> Result<GaussianDistribution> {
    let p = prior.mean().len();
    if counts.num_arms() != p || variances.len() != p {
        return Err(Error::Dimension {
            expected: p,
            got: counts.num_arms().max(variances.len()),
        });
    }
    variances.iter().try_for_each(|v| check_sigma2(*v))?;
    let mut precision = prior.precision().clone();
    let mut rhs = prior.precision() * prior.mean();
    for i in 0..p {
        precision[(i, i)] += counts.count(i) as f64 / variances[i];
        rhs[i] += counts.sum(i) / variances[i];
    }
    let mean = solve_spd(&precision, &rhs)?;
    GaussianDistribution::from_precision(mean, precision)
}

/// `N(μ̂, diag(σ_i²/N_i))` for heteroskedastic arms.
pub fn heteroskedastic_representative_normal(
    counts: &ArmCounts,
    variances: &[f64],
) -> Result<GaussianDistribution> {
    let p = counts.num_arms();
    if variances.len() != p {
        return Err(Error::Dimension {
            expected: p,
            got: variances.len(),
        });
    }
    variances.iter().try_for_each(|v| check_sigma2(*v))?;
    let mut precision = DMatrix::zeros(p, p);
    let mut mean = DVector::zeros(p);
    for i in 0..p {
        if counts.count(i) == 0 {
            return Err(Error::Singular { lambda_min: 0.0 });
        }
        precision[(i, i)] = counts.count(i) as f64 / variances[i];
        mean[i] = counts.mean(i);
    }
    GaussianDistribution::from_precision(mean, precision)
}

/// Distribution of `s ∗ X` (elementwise) for `X ~ dist`.
pub fn scale_gaussian(dist: &GaussianDistribution, scales: &[f64]) -> Result<GaussianDistribution> {
    let p = dist.mean().len();
    if scales.len() != p {
        return Err(Error::Dimension {
            expected: p,
            got: scales.len(),
        });
    }
    if scales.iter().any(|s| !(s.abs() > 0.0) || !s.is_finite()) {
        return Err(Error::Domain("scales must be non-zero and finite".into()));
    }
    let d = DVector::from_column_slice(scales);
    let mean = dist.mean().component_mul(&d);
    let mut cov = dist.covariance().clone();
    for i in 0..p {
        for j in 0..p {
            cov[(i, j)] *= scales[i] * scales[j];
        }
    }
    GaussianDistribution::new(mean, cov)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::{append_step, Covariate, Trajectory};

    fn acc(gram: &[f64], xty: &[f64], count: u64) -> GramAccumulator {
        let p = xty.len();
        GramAccumulator::from_parts(
            DMatrix::from_row_slice(p, p, gram),
            DVector::from_column_slice(xty),
            count,
        )
        .unwrap()
    }

    #[test]
    fn mle_examples() {
        let b = mle(&acc(&[1.0, 0.0, 0.0, 1.0], &[2.0, 3.0], 2)).unwrap();
        assert_eq!(b.as_slice(), &[2.0, 3.0]);
        let b = mle(&acc(&[2.0, 1.0, 1.0, 2.0], &[4.5, 5.5], 3)).unwrap();
        assert!((b[0] - 7.0 / 6.0).abs() < 1e-12 && (b[1] - 13.0 / 6.0).abs() < 1e-12);

        let mut t = Trajectory::new(1);
        let mut a = GramAccumulator::new(1);
        for _ in 0..3 {
            append_step(&mut t, &mut a, Covariate::basis(1, 0), 1.0).unwrap();
        }
        assert!((mle(&a).unwrap()[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn mle_singular() {
        assert!(matches!(mle(&GramAccumulator::new(2)), Err(Error::Singular { .. })));
        let a = acc(&[3.0, 0.0, 0.0, 0.0], &[1.0, 0.0], 3);
        assert!(matches!(mle(&a), Err(Error::Singular { .. })));
    }

    #[test]
    fn representative_covariance() {
        let r = representative_normal(&acc(&[4.0, 0.0, 0.0, 1.0], &[0.0, 0.0], 5), 1.0).unwrap();
        assert!((r.covariance()[(0, 0)] - 0.25).abs() < 1e-14);
        assert!((r.covariance()[(1, 1)] - 1.0).abs() < 1e-14);
        assert!(representative_normal(&acc(&[1.0], &[0.0], 1), 0.0).is_err());
    }

    #[test]
    fn bandit_representative_marginals() {
        let (n1, n2, s2) = (30.0, 7.0, 2.0);
        let r = representative_normal(&acc(&[n1, 0.0, 0.0, n2], &[3.0, 1.0], 37), s2).unwrap();
        assert!((r.covariance()[(0, 0)] - s2 / n1).abs() < 1e-14);
        assert!((r.covariance()[(1, 1)] - s2 / n2).abs() < 1e-14);
    }

    #[test]
    fn conjugate_precision_addition() {
        let prior = GaussianDistribution::isotropic(DVector::zeros(2), 1.0).unwrap();
        let post = gaussian_conjugate_posterior(&prior, &acc(&[1.0, 0.0, 0.0, 1.0], &[2.0, 2.0], 2), 1.0).unwrap();
        assert!((post.mean()[0] - 1.0).abs() < 1e-14 && (post.mean()[1] - 1.0).abs() < 1e-14);
        assert!((post.covariance() - DMatrix::identity(2, 2) * 0.5).abs().max() < 1e-14);
    }

    #[test]
    fn no_data_returns_prior() {
        let prior = GaussianDistribution::isotropic(DVector::from_vec(vec![1.0, -1.0]), 3.0).unwrap();
        let post = gaussian_conjugate_posterior(&prior, &GramAccumulator::new(2), 1.0).unwrap();
        assert_eq!(post.mean(), prior.mean());
        assert_eq!(post.covariance(), prior.covariance());
    }

    #[test]
    fn flat_prior_limit() {
        let prior = GaussianDistribution::isotropic(DVector::zeros(2), 1e12).unwrap();
        let a = acc(&[5.0, 1.0, 1.0, 3.0], &[2.0, -1.5], 8);
        let post = gaussian_conjugate_posterior(&prior, &a, 1.0).unwrap();
        let rep = representative_normal(&a, 1.0).unwrap();
        assert!((post.mean() - rep.mean()).abs().max() < 1e-6);
        let rel = (post.covariance() - rep.covariance()).abs().max() / rep.covariance().abs().max();
        assert!(rel < 1e-6);
    }

    #[test]
    fn scaling_round_trip() {
        let g = GaussianDistribution::new(
            DVector::from_vec(vec![1.0, 2.0]),
            DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 0.5]),
        )
        .unwrap();
        let s = scale_gaussian(&g, &[2.0, 0.5]).unwrap();
        assert_eq!(s.mean().as_slice(), &[2.0, 1.0]);
        assert!((s.covariance()[(0, 1)] - 0.2).abs() < 1e-14);
        let back = scale_gaussian(&s, &[0.5, 2.0]).unwrap();
        assert!((back.covariance() - g.covariance()).abs().max() < 1e-14);
    }
}
