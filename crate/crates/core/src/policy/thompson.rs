use super::argmax;
use crate::rng::RandomSource;

/// Draw one sample from each arm's `N(mean, variance)` posterior and play the
/// largest.
pub fn thompson_gaussian_select(posteriors: &[(f64, f64)], rng: &mut RandomSource) -> usize {
    let draws: Vec<f64> = posteriors
        .iter()
        .map(|&(m, v)| rng.normal(m, v.max(0.0).sqrt()))
        .collect();
    argmax(draws)
}

/// Thompson sampling with per-arm `Beta(a, b)` posteriors.
pub fn thompson_beta_select(posteriors: &[(f64, f64)], rng: &mut RandomSource) -> usize {
    let draws: Vec<f64> = posteriors.iter().map(|&(a, b)| rng.beta(a, b)).collect();
    argmax(draws)
}
