use statrs::distribution::{ContinuousCDF, Normal};

use super::Univariate;
use crate::error::{Error, Result};

/// Standard normal quantile.
pub fn normal_quantile(prob: f64) -> f64 {
    Normal::standard().inverse_cdf(prob)
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)
}

/// Equal-tailed credible interval carrying mass `level`.
pub fn credible_interval(dist: &Univariate, level: f64) -> Result<(f64, f64)> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Domain(format!("credible level {level} outside (0, 1)")));
    }
    let tail = 0.5 * (1.0 - level);
    if let Univariate::Normal { mean, sd } = *dist {
        let z = normal_quantile(1.0 - tail);
        return Ok((mean - z * sd, mean + z * sd));
    }
    Ok((dist.quantile(tail)?, dist.quantile(1.0 - tail)?))
}
