use std::f64::consts::PI;

use statrs::function::beta::{beta_reg, ln_beta};
use statrs::function::erf::erfc;
use statrs::function::gamma::{gamma_lr, ln_gamma};

use super::{Density, Sample};
use crate::error::{Error, Result};
use crate::rng::RandomSource;

/// One-dimensional components used by posteriors and their normal surrogates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Univariate {
    Normal { mean: f64, sd: f64 },
    Beta { a: f64, b: f64 },
    /// Shape/rate parameterization.
    Gamma { shape: f64, rate: f64 },
}

impl Univariate {
    pub fn normal(mean: f64, sd: f64) -> Result<Self> {
        if !mean.is_finite() || !(sd > 0.0) || !sd.is_finite() {
            return Err(Error::Domain(format!("invalid normal N({mean}, sd={sd})")));
        }
        Ok(Self::Normal { mean, sd })
    }

    pub fn beta(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) || !a.is_finite() || !b.is_finite() {
            return Err(Error::Domain(format!("invalid Beta({a}, {b})")));
        }
        Ok(Self::Beta { a, b })
    }

    pub fn gamma(shape: f64, rate: f64) -> Result<Self> {
        if !(shape > 0.0 && rate > 0.0) || !shape.is_finite() || !rate.is_finite() {
            return Err(Error::Domain(format!("invalid Gamma({shape}, rate {rate})")));
        }
        Ok(Self::Gamma { shape, rate })
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Self::Normal { mean, .. } => mean,
            Self::Beta { a, b } => a / (a + b),
            Self::Gamma { shape, rate } => shape / rate,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            Self::Normal { sd, .. } => sd * sd,
            Self::Beta { a, b } => a * b / ((a + b).powi(2) * (a + b + 1.0)),
            Self::Gamma { shape, rate } => shape / (rate * rate),
        }
    }

    /// Log of the normalizing constant subtracted in [`Univariate::ln_pdf`].
    pub fn log_normalizer(&self) -> f64 {
        match *self {
            Self::Normal { sd, .. } => sd.ln() + 0.5 * (2.0 * PI).ln(),
            Self::Beta { a, b } => ln_beta(a, b),
            Self::Gamma { shape, rate } => ln_gamma(shape) - shape * rate.ln(),
        }
    }

    fn ln_kernel(&self, x: f64) -> f64 {
        match *self {
            Self::Normal { mean, sd } => -0.5 * ((x - mean) / sd).powi(2),
            Self::Beta { a, b } => {
                if x <= 0.0 || x >= 1.0 {
                    // the endpoints carry density only when the exponent vanishes
                    if (x == 0.0 && a == 1.0) || (x == 1.0 && b == 1.0) {
                        return 0.0;
                    }
                    return f64::NEG_INFINITY;
                }
                (a - 1.0) * x.ln() + (b - 1.0) * (-x).ln_1p()
            }
            Self::Gamma { shape, rate } => {
                if x < 0.0 {
                    return f64::NEG_INFINITY;
                }
                if x == 0.0 {
                    return if shape == 1.0 { 0.0 } else { f64::NEG_INFINITY };
                }
                (shape - 1.0) * x.ln() - rate * x
            }
        }
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        self.ln_kernel(x) - self.log_normalizer()
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.ln_pdf(x).exp()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Self::Normal { mean, sd } => 0.5 * erfc(-(x - mean) / (sd * std::f64::consts::SQRT_2)),
            Self::Beta { a, b } => {
                if x <= 0.0 {
                    0.0
                } else if x >= 1.0 {
                    1.0
                } else {
                    beta_reg(a, b, x)
                }
            }
            Self::Gamma { shape, rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    gamma_lr(shape, rate * x)
                }
            }
        }
    }

    /// Inverse CDF by bracketed bisection.
    pub fn quantile(&self, prob: f64) -> Result<f64> {
        if !(prob > 0.0 && prob < 1.0) {
            return Err(Error::Domain(format!("quantile level {prob} outside (0, 1)")));
        }
        if let Self::Normal { mean, sd } = *self {
            return Ok(mean + sd * super::normal_quantile(prob));
        }
        let (mut lo, mut hi) = match *self {
            Self::Beta { .. } => (0.0, 1.0),
            _ => {
                let mut hi = self.mean() + 10.0 * self.variance().sqrt();
                while self.cdf(hi) < prob {
                    hi *= 2.0;
                }
                (0.0, hi)
            }
        };
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) < prob {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi.abs().max(1e-300) {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    pub fn sample(&self, rng: &mut RandomSource) -> f64 {
        match *self {
            Self::Normal { mean, sd } => rng.normal(mean, sd),
            Self::Beta { a, b } => rng.beta(a, b),
            Self::Gamma { shape, rate } => rng.gamma(shape, rate),
        }
    }
}

/// Independent product of [`Univariate`] components.
#[derive(Debug, Clone)]
pub struct ProductDistribution {
    components: Vec<Univariate>,
    log_norms: Vec<f64>,
}

impl ProductDistribution {
    pub fn new(components: Vec<Univariate>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Domain("product distribution needs at least one component".into()));
        }
        let log_norms = components.iter().map(Univariate::log_normalizer).collect();
        Ok(Self { components, log_norms })
    }

    pub fn components(&self) -> &[Univariate] {
        &self.components
    }
}

impl Density for ProductDistribution {
    fn dim(&self) -> usize {
        self.components.len()
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        self.components
            .iter()
            .zip(&self.log_norms)
            .zip(x)
            .map(|((c, ln), &xi)| c.ln_kernel(xi) - ln)
            .sum()
    }
}

impl Sample for ProductDistribution {
    fn sample_into(&self, rng: &mut RandomSource, out: &mut [f64]) {
        for (c, o) in self.components.iter().zip(out.iter_mut()) {
            *o = c.sample(rng);
        }
    }
}
