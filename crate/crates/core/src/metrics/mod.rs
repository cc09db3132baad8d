//! Total-variation estimates, interval coverage, and Gram diagnostics.

mod coverage;
mod curve;
mod normality;
mod stability;
mod tv;

pub use coverage::{coverage_experiment, CoverageRecord, CoverageSummary, MIN_COVERAGE_REPLICATES};
pub use curve::{
    arm_counts_from_gram, bvm_tv_curve, checkpoint_tv, default_checkpoints, gram_stability, posterior_marginal,
    representative_available, CurveModel,
    CurvePoint,
};
pub use normality::{
    anderson_darling, mle_normality_probe, studentized_mle, NormalityProbe, AD_CRITICAL_1PCT,
    MIN_PROBE_REPLICATES,
};
pub use stability::{block_stability, stability_report, StabilityDiagnostics};
pub use tv::{tv_gaussian_oracle_1d, tv_monte_carlo, tv_monte_carlo_gated, TvEstimate, TvOptions};
