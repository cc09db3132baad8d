use serde::Serialize;

use crate::error::{Error, Result};
use crate::inference::{normal_cdf, Density, Sample};
use crate::rng::RandomSource;

/// Monte-Carlo estimate of `‖P − Q‖_TV`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TvEstimate {
    pub value: f64,
    pub std_error: f64,
    pub num_samples: usize,
    /// The checkpoint had no valid posterior/normal pair (singular Gram or
    /// boundary MLE) and is left out of aggregates.
    pub excluded: bool,
    /// `std_error <= relative_se * value` held when sampling stopped.
    pub gate_met: bool,
}

impl TvEstimate {
    pub fn excluded() -> Self {
        Self {
            value: f64::NAN,
            std_error: f64::NAN,
            num_samples: 0,
            excluded: true,
            gate_met: false,
        }
    }
}

/// Sample-size schedule for gated TV estimation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TvOptions {
    pub initial_samples: usize,
    pub max_samples: usize,
    /// Target ratio of standard error to estimate.
    pub relative_se: f64,
}

impl Default for TvOptions {
    fn default() -> Self {
        Self {
            initial_samples: 10_000,
            max_samples: 1_000_000,
            relative_se: 0.1,
        }
    }
}

impl TvOptions {
    /// A fixed sample size with no doubling.
    pub fn fixed(samples: usize) -> Self {
        Self {
            initial_samples: samples,
            max_samples: samples,
            relative_se: 0.1,
        }
    }
}

#[derive(Debug, Default, Clone, Copy)]
struct Moments {
    n: usize,
    sum: f64,
    sum_sq: f64,
}

impl Moments {
    fn estimate(&self, relative_se: f64) -> TvEstimate {
        let n = self.n as f64;
        let mean = self.sum / n;
        let var = if self.n > 1 {
            ((self.sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        let se = (var / n).sqrt();
        TvEstimate {
            value: mean.clamp(0.0, 1.0),
            std_error: se,
            num_samples: self.n,
            excluded: false,
            gate_met: se <= relative_se * mean,
        }
    }
}

fn accumulate<P, Q>(p: &P, q: &Q, count: usize, rng: &mut RandomSource, m: &mut Moments) -> Result<()>
where
    P: Sample + ?Sized,
    Q: Density + ?Sized,
{
    let mut x = vec![0.0; p.dim()];
    for _ in 0..count {
        p.sample_into(rng, &mut x);
        let lp = p.log_density(&x);
        if !lp.is_finite() {
            return Err(Error::Data("P has non-finite log-density at its own sample".into()));
        }
        let lq = q.log_density(&x);
        let v = if lq == f64::NEG_INFINITY {
            1.0
        } else {
            (1.0 - (lq - lp).exp()).clamp(0.0, 1.0)
        };
        m.n += 1;
        m.sum += v;
        m.sum_sq += v * v;
    }
    Ok(())
}

fn check_dims(p: usize, q: usize) -> Result<()> {
    if p != q {
        return Err(Error::Dimension { expected: p, got: q });
    }
    Ok(())
}

/// `E_{X~P}[max(0, 1 − Q(X)/P(X))]` from `num_samples` draws.
pub fn tv_monte_carlo<P, Q>(p: &P, q: &Q, num_samples: usize, rng: &mut RandomSource) -> Result<TvEstimate>
where
    P: Sample + ?Sized,
    Q: Density + ?Sized,
{
    check_dims(p.dim(), q.dim())?;
    if num_samples == 0 {
        return Err(Error::Domain("TV estimate needs at least one sample".into()));
    }
    let mut m = Moments::default();
    accumulate(p, q, num_samples, rng, &mut m)?;
    Ok(m.estimate(TvOptions::default().relative_se))
}

/// [`tv_monte_carlo`] with doubling until `std_error <= relative_se · value`
/// or `max_samples` is reached; the latter leaves `gate_met` false.
pub fn tv_monte_carlo_gated<P, Q>(p: &P, q: &Q, opts: &TvOptions, rng: &mut RandomSource) -> Result<TvEstimate>
where
    P: Sample + ?Sized,
    Q: Density + ?Sized,
{
    check_dims(p.dim(), q.dim())?;
    if opts.initial_samples == 0 || opts.max_samples < opts.initial_samples {
        return Err(Error::Domain("TV sample schedule must satisfy 0 < initial <= max".into()));
    }
    let mut m = Moments::default();
    accumulate(p, q, opts.initial_samples, rng, &mut m)?;
    loop {
        let est = m.estimate(opts.relative_se);
        if est.gate_met || m.n >= opts.max_samples {
            return Ok(est);
        }
        let more = m.n.min(opts.max_samples - m.n);
        accumulate(p, q, more, rng, &mut m)?;
    }
}

/// Exact `‖N(mu1, sigma1²) − N(mu2, sigma2²)‖_TV`.
///
/// The log-density difference is quadratic, so the real line splits into at
/// most three intervals on which one density dominates; TV is half the sum of
/// `|P(I) − Q(I)|` over them.
pub fn tv_gaussian_oracle_1d(mu1: f64, sigma1: f64, mu2: f64, sigma2: f64) -> f64 {
    assert!(sigma1 > 0.0 && sigma2 > 0.0, "standard deviations must be positive");
    if sigma1 == sigma2 {
        return 2.0 * normal_cdf((mu1 - mu2).abs() / (2.0 * sigma1)) - 1.0;
    }
    let (v1, v2) = (sigma1 * sigma1, sigma2 * sigma2);
    let a = 0.5 / v2 - 0.5 / v1;
    let b = mu1 / v1 - mu2 / v2;
    let c = 0.5 * mu2 * mu2 / v2 - 0.5 * mu1 * mu1 / v1 + (sigma2 / sigma1).ln();
    let disc = (b * b - 4.0 * a * c).max(0.0).sqrt();
    // numerically stable quadratic roots
    let q = -0.5 * (b + b.signum() * disc);
    let (mut r1, mut r2) = if q == 0.0 {
        let r = (-c / a).max(0.0).sqrt();
        (-r, r)
    } else {
        (q / a, c / q)
    };
    if r1 > r2 {
        std::mem::swap(&mut r1, &mut r2);
    }
    let f1 = |x: f64| normal_cdf((x - mu1) / sigma1);
    let f2 = |x: f64| normal_cdf((x - mu2) / sigma2);
    let lo = (f1(r1) - f2(r1)).abs();
    let mid = ((f1(r2) - f1(r1)) - (f2(r2) - f2(r1))).abs();
    let hi = ((1.0 - f1(r2)) - (1.0 - f2(r2))).abs();
    0.5 * (lo + mid + hi)
}
