use nalgebra::DMatrix;
use serde::Serialize;

use super::stability::{check_checkpoints, StabilityDiagnostics};
use super::tv::{tv_monte_carlo_gated, TvEstimate, TvOptions};
use crate::env::ExpFamily;
use crate::error::{Error, Result};
use crate::inference::{
    expfam_conjugate_posterior, expfam_representative_normal, gaussian_conjugate_posterior,
    heteroskedastic_conjugate_posterior, heteroskedastic_representative_normal, representative_normal,
    GaussianDistribution, Univariate,
};
use crate::policy::ArmCounts;
use crate::rng::RandomSource;
use crate::trajectory::{GramAccumulator, Trajectory};

/// Which exact posterior and representative normal to compare.
#[derive(Debug, Clone)]
pub enum CurveModel {
    /// Linear Gaussian model with known `σ²` and a Gaussian prior.
    Gaussian { sigma2: f64, prior: GaussianDistribution },
    /// Bernoulli or Poisson arms with per-arm Beta/Gamma `(a, b)` priors,
    /// compared on the mean scale.
    ExpFamily { family: ExpFamily, prior: Vec<(f64, f64)> },
    /// Gaussian arms with per-arm known variances.
    Heteroskedastic { variances: Vec<f64>, prior: GaussianDistribution },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub n: usize,
    pub tv: TvEstimate,
    pub stability: StabilityDiagnostics,
}

/// Default checkpoint grid: `round(10^{k/2})` for `k >= 2` up to `horizon`,
/// with `horizon` itself appended.
pub fn default_checkpoints(horizon: usize) -> Vec<usize> {
    let mut out = Vec::new();
    for k in 2.. {
        let n = 10f64.powf(k as f64 / 2.0).round() as usize;
        if n >= horizon {
            break;
        }
        out.push(n);
    }
    if horizon > 0 {
        out.push(horizon);
    }
    out
}

/// Per-arm tallies from the Gram of a bandit trajectory (basis covariates),
/// where the diagonal holds pull counts and `Xᵀy` holds reward sums.
pub fn arm_counts_from_gram(acc: &GramAccumulator) -> ArmCounts {
    let mut c = ArmCounts::new(acc.dim());
    for i in 0..acc.dim() {
        c.set(i, acc.gram()[(i, i)].round() as u64, acc.xty()[i]);
    }
    c
}

fn is_exclusion(e: &Error) -> bool {
    matches!(e, Error::Singular { .. } | Error::Boundary { .. })
}

/// TV between the exact posterior and the representative normal for the
/// statistics in `acc`. Singular Grams and boundary MLEs give an excluded
/// estimate; other failures propagate.
pub fn checkpoint_tv(
    model: &CurveModel,
    acc: &GramAccumulator,
    opts: &TvOptions,
    rng: &mut RandomSource,
) -> Result<TvEstimate> {
    let res = match model {
        CurveModel::Gaussian { sigma2, prior } => representative_normal(acc, *sigma2).and_then(|q| {
            let p = gaussian_conjugate_posterior(prior, acc, *sigma2)?;
            tv_monte_carlo_gated(&p, &q, opts, rng)
        }),
        CurveModel::ExpFamily { family, prior } => {
            let counts = arm_counts_from_gram(acc);
            expfam_representative_normal(*family, &counts).and_then(|q| {
                let p = expfam_conjugate_posterior(*family, prior, &counts)?;
                tv_monte_carlo_gated(&p, &q, opts, rng)
            })
        }
        CurveModel::Heteroskedastic { variances, prior } => {
            let counts = arm_counts_from_gram(acc);
            heteroskedastic_representative_normal(&counts, variances).and_then(|q| {
                let p = heteroskedastic_conjugate_posterior(prior, &counts, variances)?;
                tv_monte_carlo_gated(&p, &q, opts, rng)
            })
        }
    };
    match res {
        Err(e) if is_exclusion(&e) => Ok(TvEstimate::excluded()),
        other => other,
    }
}

/// Whether the representative normal exists for the statistics in `acc`
/// (non-singular Gram, interior MLE).
pub fn representative_available(model: &CurveModel, acc: &GramAccumulator) -> Result<bool> {
    let res = match model {
        CurveModel::Gaussian { sigma2, .. } => representative_normal(acc, *sigma2).map(drop),
        CurveModel::ExpFamily { family, .. } => {
            expfam_representative_normal(*family, &arm_counts_from_gram(acc)).map(drop)
        }
        CurveModel::Heteroskedastic { variances, .. } => {
            heteroskedastic_representative_normal(&arm_counts_from_gram(acc), variances).map(drop)
        }
    };
    match res {
        Ok(()) => Ok(true),
        Err(e) if is_exclusion(&e) => Ok(false),
        Err(e) => Err(e),
    }
}

/// Exact posterior distribution of `wᵀβ`. Arm-level exponential-family
/// posteriors only support a single coordinate.
pub fn posterior_marginal(model: &CurveModel, acc: &GramAccumulator, weights: &[f64]) -> Result<Univariate> {
    match model {
        CurveModel::Gaussian { sigma2, prior } => {
            gaussian_conjugate_posterior(prior, acc, *sigma2)?.linear_functional(weights)
        }
        CurveModel::Heteroskedastic { variances, prior } => {
            heteroskedastic_conjugate_posterior(prior, &arm_counts_from_gram(acc), variances)?
                .linear_functional(weights)
        }
        CurveModel::ExpFamily { family, prior } => {
            let nonzero: Vec<usize> = (0..weights.len()).filter(|&i| weights[i] != 0.0).collect();
            match nonzero.as_slice() {
                [i] if weights[*i] == 1.0 => {
                    let post = expfam_conjugate_posterior(*family, prior, &arm_counts_from_gram(acc))?;
                    Ok(post.components()[*i])
                }
                _ => Err(Error::Domain("exponential-family posteriors support single-arm functionals only".into())),
            }
        }
    }
}

/// TV and Gram diagnostics after each checkpoint of `traj`.
///
/// Monte-Carlo draws for checkpoint `n` come from `rng.substream(n)`, so the
/// estimate at one checkpoint does not depend on which others were requested.
pub fn bvm_tv_curve(
    traj: &Trajectory,
    checkpoints: &[usize],
    model: &CurveModel,
    opts: &TvOptions,
    rng: &RandomSource,
) -> Result<Vec<CurvePoint>> {
    check_checkpoints(checkpoints, traj.len())?;
    if !matches!(model, CurveModel::Gaussian { .. })
        && traj.steps().iter().any(|(x, _)| x.basis_index().is_none())
    {
        return Err(Error::Domain("arm-level models need basis covariates".into()));
    }
    let mut acc = GramAccumulator::new(traj.dim());
    let mut done = 0;
    let mut out = Vec::with_capacity(checkpoints.len());
    for &n in checkpoints {
        for (x, y) in &traj.steps()[done..n] {
            acc.update(x, *y)?;
        }
        done = n;
        let mut sub = rng.substream(n as u64);
        out.push(CurvePoint {
            n,
            tv: checkpoint_tv(model, &acc, opts, &mut sub)?,
            stability: StabilityDiagnostics::from_matrix(acc.gram()),
        });
    }
    Ok(out)
}

/// Gram diagnostics for an arbitrary matrix, for callers that accumulate
/// their own statistics (for example serialized LQR transitions).
pub fn gram_stability(gram: &DMatrix<f64>) -> StabilityDiagnostics {
    StabilityDiagnostics::from_matrix(gram)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::tv_gaussian_oracle_1d;
    use crate::trajectory::Covariate;
    use nalgebra::DVector;

    #[test]
    fn default_grid() {
        assert_eq!(default_checkpoints(10_000), vec![10, 32, 100, 316, 1000, 3162, 10_000]);
        assert_eq!(default_checkpoints(200), vec![10, 32, 100, 200]);
        assert_eq!(default_checkpoints(5), vec![5]);
    }

    #[test]
    fn one_observation_matches_oracle() {
        let mut t = Trajectory::new(1);
        t.push(Covariate::scalar(1.0).unwrap(), 0.0).unwrap();
        let model = CurveModel::Gaussian {
            sigma2: 1.0,
            prior: GaussianDistribution::isotropic(DVector::zeros(1), 1.0).unwrap(),
        };
        let pts = bvm_tv_curve(&t, &[1], &model, &TvOptions::fixed(100_000), &RandomSource::new(8, 0)).unwrap();
        let truth = tv_gaussian_oracle_1d(0.0, 0.5f64.sqrt(), 0.0, 1.0);
        // scipy quad of ½∫|p − q| gives 0.166064075
        assert!((truth - 0.166_064_075).abs() < 1e-8);
        assert!((pts[0].tv.value - truth).abs() < 4.0 * pts[0].tv.std_error);
    }

    #[test]
    fn flat_prior_gives_near_zero() {
        let mut t = Trajectory::new(2);
        let mut rng = RandomSource::new(2, 0);
        for i in 0..100 {
            t.push(Covariate::basis(2, i % 2), rng.standard_normal()).unwrap();
        }
        let model = CurveModel::Gaussian {
            sigma2: 1.0,
            prior: GaussianDistribution::isotropic(DVector::zeros(2), 1e12).unwrap(),
        };
        let pts = bvm_tv_curve(&t, &[2, 100], &model, &TvOptions::fixed(10_000), &rng).unwrap();
        for p in pts {
            assert!(p.tv.value <= 4.0 * p.tv.std_error + 1e-6, "{:?}", p.tv);
        }
    }

    #[test]
    fn singular_and_boundary_are_excluded() {
        let mut t = Trajectory::new(2);
        t.push(Covariate::basis(2, 0), 1.0).unwrap();
        t.push(Covariate::basis(2, 1), 1.0).unwrap();
        t.push(Covariate::basis(2, 1), 0.0).unwrap();
        let rng = RandomSource::new(0, 0);
        let g = CurveModel::Gaussian {
            sigma2: 1.0,
            prior: GaussianDistribution::isotropic(DVector::zeros(2), 1.0).unwrap(),
        };
        let pts = bvm_tv_curve(&t, &[1, 3], &g, &TvOptions::fixed(100), &rng).unwrap();
        assert!(pts[0].tv.excluded && !pts[1].tv.excluded);
        let b = CurveModel::ExpFamily {
            family: ExpFamily::BernoulliLogit,
            prior: vec![(1.0, 1.0); 2],
        };
        // arm 0 has a single success, so its MLE is on the boundary
        let pts = bvm_tv_curve(&t, &[3], &b, &TvOptions::fixed(100), &rng).unwrap();
        assert!(pts[0].tv.excluded);
    }

    #[test]
    fn checkpoint_estimates_are_independent_of_grid() {
        let mut t = Trajectory::new(2);
        let mut rng = RandomSource::new(5, 1);
        for i in 0..50 {
            t.push(Covariate::basis(2, i % 2), rng.standard_normal()).unwrap();
        }
        let model = CurveModel::Gaussian {
            sigma2: 1.0,
            prior: GaussianDistribution::isotropic(DVector::zeros(2), 1.0).unwrap(),
        };
        let opts = TvOptions::fixed(500);
        let a = bvm_tv_curve(&t, &[10, 50], &model, &opts, &rng).unwrap();
        let b = bvm_tv_curve(&t, &[50], &model, &opts, &rng).unwrap();
        assert_eq!(a[1], b[0]);
    }
}
