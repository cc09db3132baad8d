use super::ArmCounts;
use crate::error::{Error, Result};
use crate::inference::normal_cdf;
use crate::rng::RandomSource;

/// Allocation for the second batch of a two-batch, two-arm Thompson design.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchPlan {
    /// Posterior probability that arm 1 (index 0) has the larger mean.
    pub pi_hat: f64,
    /// `pi_hat` clipped into `[π_min, 1 − π_min]`.
    pub allocation_prob: f64,
    /// Arm index of every pull in the batch.
    pub arms: Vec<usize>,
}

/// `P(μ₁ > μ₂)` for independent normal posteriors given as `(mean, variance)`.
pub fn arm1_probability(post1: (f64, f64), post2: (f64, f64)) -> f64 {
    let sd = (post1.1 + post2.1).sqrt();
    if sd == 0.0 {
        return match post1.0.partial_cmp(&post2.0) {
            Some(std::cmp::Ordering::Greater) => 1.0,
            Some(std::cmp::Ordering::Less) => 0.0,
            _ => 0.5,
        };
    }
    normal_cdf((post1.0 - post2.0) / sd)
}

pub fn clip_probability(pi: f64, pi_min: f64) -> f64 {
    pi.clamp(pi_min, 1.0 - pi_min)
}

/// Plan batch 2 from the batch-1 tallies.
///
/// `prior` gives each arm's `(mean, variance)`, `sigma2` the known outcome
/// variance. Every batch-2 pull goes to arm 1 independently with the clipped
/// probability.
pub fn batched_thompson_plan(
    batch1: &ArmCounts,
    prior: &[(f64, f64)],
    sigma2: f64,
    batch_size: usize,
    pi_min: f64,
    rng: &mut RandomSource,
) -> Result<BatchPlan> {
    if batch1.num_arms() != 2 || prior.len() != 2 {
        return Err(Error::Config("batched Thompson sampling needs exactly two arms".into()));
    }
    if batch_size == 0 || !batch_size.is_multiple_of(2) {
        return Err(Error::Config(format!("batch size must be even and positive, got {batch_size}")));
    }
    if !(0.0..0.5).contains(&pi_min) {
        return Err(Error::Config(format!("clipping level must lie in [0, 0.5), got {pi_min}")));
    }
    if !(sigma2 > 0.0) {
        return Err(Error::Config(format!("outcome variance must be positive, got {sigma2}")));
    }
    let post = |i: usize| {
        let (m0, v0) = prior[i];
        let precision = 1.0 / v0 + batch1.count(i) as f64 / sigma2;
        let v = 1.0 / precision;
        (v * (m0 / v0 + batch1.sum(i) / sigma2), v)
    };
    let pi_hat = arm1_probability(post(0), post(1));
    let allocation_prob = clip_probability(pi_hat, pi_min);
    let arms = (0..batch_size)
        .map(|_| if rng.uniform() < allocation_prob { 0 } else { 1 })
        .collect();
    Ok(BatchPlan {
        pi_hat,
        allocation_prob,
        arms,
    })
}
