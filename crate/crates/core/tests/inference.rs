use nalgebra::DVector;
use proptest::prelude::*;

use bvm_core::env::ExpFamily;
use bvm_core::inference::{
    credible_interval, expfam_conjugate_posterior, gaussian_conjugate_posterior, representative_normal,
    GaussianDistribution, Univariate,
};
use bvm_core::policy::ArmCounts;
use bvm_core::{Covariate, GramAccumulator, RandomSource};

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

#[test]
fn flat_prior_matches_representative_normal() {
    let mut rng = RandomSource::new(21, 0);
    for _ in 0..100 {
        let p = 1 + rng.index(3);
        let n = p + 2 + rng.index(30);
        let mut acc = GramAccumulator::new(p);
        for _ in 0..n {
            let x: Vec<f64> = (0..p).map(|_| rng.normal(0.0, 1.0)).collect();
            acc.update(&Covariate::new(x).unwrap(), rng.normal(0.3, 1.0)).unwrap();
        }
        let prior = GaussianDistribution::isotropic(DVector::from_element(p, 0.5), 1e10).unwrap();
        let post = gaussian_conjugate_posterior(&prior, &acc, 1.3).unwrap();
        let rep = representative_normal(&acc, 1.3).unwrap();
        let cov_scale = rep.covariance().abs().max();
        for i in 0..p {
            let mean_scale = rep.covariance()[(i, i)].sqrt();
            assert!((post.mean()[i] - rep.mean()[i]).abs() <= 1e-5 * mean_scale.max(rep.mean()[i].abs()));
            for j in 0..p {
                assert!((post.covariance()[(i, j)] - rep.covariance()[(i, j)]).abs() <= 1e-5 * cov_scale);
            }
        }
    }
}

#[test]
fn credible_intervals_hold_their_level() {
    let dists = [
        Univariate::normal(1.0, 0.3).unwrap(),
        Univariate::beta(3.5, 9.0).unwrap(),
        Univariate::beta(1.0, 13.0).unwrap(),
        Univariate::gamma(2.5, 0.7).unwrap(),
        Univariate::gamma(40.0, 11.0).unwrap(),
    ];
    for d in dists {
        for level in [0.5, 0.9, 0.95, 0.99] {
            let (lo, hi) = credible_interval(&d, level).unwrap();
            assert!((d.cdf(hi) - d.cdf(lo) - level).abs() < 1e-3, "{d:?} at {level}");
            assert!(((1.0 - d.cdf(hi)) - d.cdf(lo)).abs() < 1e-3);
        }
    }
    let n = Univariate::normal(2.0, 0.5).unwrap();
    let (lo, hi) = credible_interval(&n, 0.95).unwrap();
    assert!((lo - (2.0 - 1.959963984540054 * 0.5)).abs() < 1e-9);
    assert!((hi - (2.0 + 1.959963984540054 * 0.5)).abs() < 1e-9);
}

#[test]
fn margin_interval_adds_variances() {
    let post = GaussianDistribution::new(
        DVector::from_vec(vec![1.0, 0.4]),
        nalgebra::DMatrix::from_diagonal(&DVector::from_vec(vec![0.04, 0.09])),
    )
    .unwrap();
    let margin = post.linear_functional(&[1.0, -1.0]).unwrap();
    let (lo, hi) = credible_interval(&margin, 0.95).unwrap();
    let half = 1.959963984540054 * 0.13f64.sqrt();
    assert!((lo - (0.6 - half)).abs() < 1e-9 && (hi - (0.6 + half)).abs() < 1e-9);
}

fn arm_trajectory(seed: u64, len: usize) -> Vec<(usize, f64)> {
    let mut rng = RandomSource::new(seed, 0);
    (0..len).map(|_| (rng.index(3), rng.normal(0.0, 1.0))).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Reordering the pulls leaves the sufficient statistics, and hence the
    /// posterior, unchanged.
    #[test]
    fn posterior_ignores_pull_order(seed in any::<u64>(), len in 3usize..80, shuffle_seed in any::<u64>()) {
        let steps = arm_trajectory(seed, len);
        let mut permuted = steps.clone();
        let mut rng = RandomSource::new(shuffle_seed, 0);
        for i in (1..permuted.len()).rev() {
            permuted.swap(i, rng.index(i + 1));
        }
        let post = |s: &[(usize, f64)]| {
            let mut acc = GramAccumulator::new(3);
            for &(arm, y) in s {
                acc.update(&Covariate::basis(3, arm), y).unwrap();
            }
            let prior = GaussianDistribution::isotropic(DVector::zeros(3), 1.0).unwrap();
            gaussian_conjugate_posterior(&prior, &acc, 1.0).unwrap()
        };
        let (a, b) = (post(&steps), post(&permuted));
        for i in 0..3 {
            prop_assert!(rel_err(a.mean()[i], b.mean()[i]) < 1e-10 || (a.mean()[i] - b.mean()[i]).abs() < 1e-12);
            prop_assert!(rel_err(a.covariance()[(i, i)], b.covariance()[(i, i)]) < 1e-12);
        }
    }

    /// Updating on two halves in sequence equals one update on all data.
    #[test]
    fn sequential_updates_compose(seed in any::<u64>(), len in 2usize..60, cut in 0usize..60) {
        let steps = arm_trajectory(seed, len);
        let cut = cut.min(len);
        let acc_of = |s: &[(usize, f64)]| {
            let mut acc = GramAccumulator::new(3);
            for &(arm, y) in s {
                acc.update(&Covariate::basis(3, arm), y).unwrap();
            }
            acc
        };
        let prior = GaussianDistribution::isotropic(DVector::from_vec(vec![0.1, 0.0, -0.2]), 2.0).unwrap();
        let once = gaussian_conjugate_posterior(&prior, &acc_of(&steps), 0.8).unwrap();
        let mid = gaussian_conjugate_posterior(&prior, &acc_of(&steps[..cut]), 0.8).unwrap();
        let twice = gaussian_conjugate_posterior(&mid, &acc_of(&steps[cut..]), 0.8).unwrap();
        prop_assert!((once.mean() - twice.mean()).abs().max() < 1e-10);
        prop_assert!((once.covariance() - twice.covariance()).abs().max() < 1e-10);
    }

    #[test]
    fn beta_posterior_is_order_free(bits in prop::collection::vec(any::<bool>(), 1..40)) {
        let mut fwd = ArmCounts::new(1);
        let mut rev = ArmCounts::new(1);
        for &b in &bits {
            fwd.record(0, b as u8 as f64);
        }
        for &b in bits.iter().rev() {
            rev.record(0, b as u8 as f64);
        }
        let a = expfam_conjugate_posterior(ExpFamily::BernoulliLogit, &[(1.0, 1.0)], &fwd).unwrap();
        let b = expfam_conjugate_posterior(ExpFamily::BernoulliLogit, &[(1.0, 1.0)], &rev).unwrap();
        prop_assert_eq!(a.components(), b.components());
    }
}
