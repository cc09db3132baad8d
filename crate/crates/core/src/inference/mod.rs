//! Frequentist and Bayesian estimators.
//!
//! Gaussian-outcome models get exact conjugate posteriors and the
//! representative normal `N(β̂, σ²(XᵀX)⁻¹)`; Bernoulli and Poisson bandits get
//! per-arm Beta/Gamma posteriors and a mean-scale normal built from the
//! observed information.

mod expfam;
mod gaussian;
mod interval;
mod posterior;
mod univariate;

pub use expfam::{
    expfam_conjugate_posterior, expfam_local_mle, expfam_local_normal, expfam_mle,
    expfam_representative_normal, ExpFamFisherInfo,
};
pub use gaussian::GaussianDistribution;
pub use interval::{credible_interval, normal_cdf, normal_quantile};
pub use posterior::{
    gaussian_conjugate_posterior, heteroskedastic_conjugate_posterior,
    heteroskedastic_representative_normal, mle, representative_normal, scale_gaussian,
};
pub use univariate::{ProductDistribution, Univariate};

use crate::rng::RandomSource;

/// A distribution on `ℝ^dim` with an evaluable log-density.
pub trait Density {
    fn dim(&self) -> usize;

    /// Natural log of the density at `x`; `-inf` outside the support.
    fn log_density(&self, x: &[f64]) -> f64;
}

/// A distribution that can draw samples.
pub trait Sample: Density {
    /// Write one draw into `out` (length `dim()`).
    fn sample_into(&self, rng: &mut RandomSource, out: &mut [f64]);

    fn sample(&self, rng: &mut RandomSource) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.sample_into(rng, &mut out);
        out
    }
}
