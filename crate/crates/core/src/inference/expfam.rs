use nalgebra::DMatrix;

use super::{ProductDistribution, Univariate};
use crate::env::ExpFamily;
use crate::error::{Error, Result};
use crate::policy::ArmCounts;

/// Diagonal empirical Fisher information `diag{N_i · b″(η_i)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpFamFisherInfo {
    pub counts: Vec<u64>,
    pub curvature: Vec<f64>,
}

impl ExpFamFisherInfo {
    pub fn diagonal(&self) -> Vec<f64> {
        self.counts
            .iter()
            .zip(&self.curvature)
            .map(|(&n, &c)| n as f64 * c)
            .collect()
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&nalgebra::DVector::from_vec(self.diagonal()))
    }
}

fn check_counts(family: ExpFamily, counts: &ArmCounts) -> Result<()> {
    for i in 0..counts.num_arms() {
        let (n, s) = (counts.count(i) as f64, counts.sum(i));
        if s < 0.0 || !s.is_finite() {
            return Err(Error::Data(format!("arm {i} has invalid outcome sum {s}")));
        }
        if family == ExpFamily::BernoulliLogit && s > n {
            return Err(Error::Data(format!("arm {i} has {s} successes in {n} pulls")));
        }
    }
    Ok(())
}

/// Per-arm conjugate posterior on the mean scale: Beta for Bernoulli rewards,
/// Gamma (shape, rate) for Poisson rewards.
pub fn expfam_conjugate_posterior(
    family: ExpFamily,
    prior: &[(f64, f64)],
    counts: &ArmCounts,
) -> Result<ProductDistribution> {
    if prior.len() != counts.num_arms() {
        return Err(Error::Dimension {
            expected: counts.num_arms(),
            got: prior.len(),
        });
    }
    check_counts(family, counts)?;
    let comps = prior
        .iter()
        .enumerate()
        .map(|(i, &(a, b))| {
            let (n, s) = (counts.count(i) as f64, counts.sum(i));
            match family {
                ExpFamily::BernoulliLogit => Univariate::beta(a + s, b + n - s),
                ExpFamily::PoissonLog => Univariate::gamma(a + s, b + n),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    ProductDistribution::new(comps)
}

/// Maximizer of the second-order expansion of the log-likelihood around
/// `anchor`: `η_i + (Ȳ_i − b′(η_i)) / b″(η_i)`, with its Fisher information.
pub fn expfam_local_mle(
    family: ExpFamily,
    counts: &ArmCounts,
    anchor: &[f64],
) -> Result<(Vec<f64>, ExpFamFisherInfo)> {
    if anchor.len() != counts.num_arms() {
        return Err(Error::Dimension {
            expected: counts.num_arms(),
            got: anchor.len(),
        });
    }
    check_counts(family, counts)?;
    let mut est = Vec::with_capacity(anchor.len());
    let mut curvature = Vec::with_capacity(anchor.len());
    for (i, &eta) in anchor.iter().enumerate() {
        let c = family.curvature(eta);
        if !family.natural_is_interior(eta) || !(c > 0.0) || !c.is_finite() {
            return Err(Error::Domain(format!("anchor {eta} for arm {i} is not interior")));
        }
        if counts.count(i) == 0 {
            return Err(Error::Domain(format!("arm {i} has no pulls")));
        }
        est.push(eta + (counts.mean(i) - family.mean_of(eta)) / c);
        curvature.push(c);
    }
    let info = ExpFamFisherInfo {
        counts: (0..counts.num_arms()).map(|i| counts.count(i)).collect(),
        curvature,
    };
    Ok((est, info))
}

/// Natural-scale normal `N(local MLE, I_n⁻¹)` anchored at `anchor`.
pub fn expfam_local_normal(
    family: ExpFamily,
    counts: &ArmCounts,
    anchor: &[f64],
) -> Result<ProductDistribution> {
    let (est, info) = expfam_local_mle(family, counts, anchor)?;
    let comps = est
        .iter()
        .zip(info.diagonal())
        .map(|(&m, i)| Univariate::normal(m, 1.0 / i.sqrt()))
        .collect::<Result<Vec<_>>>()?;
    ProductDistribution::new(comps)
}

/// Mean-scale maximum-likelihood estimates (per-arm sample means), failing on
/// the first arm whose estimate is on the boundary.
pub fn expfam_mle(family: ExpFamily, counts: &ArmCounts) -> Result<Vec<f64>> {
    check_counts(family, counts)?;
    (0..counts.num_arms())
        .map(|i| {
            if counts.count(i) == 0 {
                return Err(Error::Singular { lambda_min: 0.0 });
            }
            let m = counts.mean(i);
            if family.mean_is_interior(m) {
                Ok(m)
            } else {
                Err(Error::Boundary { arm: i })
            }
        })
        .collect()
}

/// Mean-scale representative normal: per arm `N(μ̂_i, V(μ̂_i)/N_i)` where
/// `V` is the family's variance function (observed information).
pub fn expfam_representative_normal(family: ExpFamily, counts: &ArmCounts) -> Result<ProductDistribution> {
    let mles = expfam_mle(family, counts)?;
    let comps = mles
        .iter()
        .enumerate()
        .map(|(i, &m)| {
            let var = family.variance_of_mean(m) / counts.count(i) as f64;
            Univariate::normal(m, var.sqrt())
        })
        .collect::<Result<Vec<_>>>()?;
    ProductDistribution::new(comps)
}
