use serde::Serialize;

use crate::error::{Error, Result};
use crate::inference::normal_cdf;

/// Upper 1% point of the Anderson–Darling statistic for a fully specified
/// null distribution.
pub const AD_CRITICAL_1PCT: f64 = 3.857;

/// Minimum number of replicates accepted by [`mle_normality_probe`].
pub const MIN_PROBE_REPLICATES: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormalityProbe {
    pub statistic: f64,
    pub critical_value: f64,
    pub reject: bool,
    pub num_values: usize,
}

/// Anderson–Darling `A²` of `values` against `N(0, 1)`.
pub fn anderson_darling(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("non-finite value in normality probe".into()));
    }
    let mut z = values.to_vec();
    z.sort_by(f64::total_cmp);
    let n = z.len();
    let nf = n as f64;
    let ln_cdf = |x: f64| normal_cdf(x).max(f64::MIN_POSITIVE).ln();
    let s: f64 = (0..n)
        .map(|i| (2.0 * i as f64 + 1.0) * (ln_cdf(z[i]) + ln_cdf(-z[n - 1 - i])))
        .sum();
    Ok(-nf - s / nf)
}

/// `√(Σx_i²)(β̂ − β₀)/σ` for a scalar regression.
pub fn studentized_mle(sum_x2: f64, beta_hat: f64, beta0: f64, sigma: f64) -> f64 {
    sum_x2.sqrt() * (beta_hat - beta0) / sigma
}

/// Anderson–Darling test of studentized MLEs against `N(0, 1)` at the 1% level.
pub fn mle_normality_probe(studentized: &[f64]) -> Result<NormalityProbe> {
    if studentized.len() < MIN_PROBE_REPLICATES {
        return Err(Error::Domain(format!(
            "normality probe needs at least {MIN_PROBE_REPLICATES} replicates, got {}",
            studentized.len()
        )));
    }
    let statistic = anderson_darling(studentized)?;
    Ok(NormalityProbe {
        statistic,
        critical_value: AD_CRITICAL_1PCT,
        reject: statistic > AD_CRITICAL_1PCT,
        num_values: studentized.len(),
    })
}
