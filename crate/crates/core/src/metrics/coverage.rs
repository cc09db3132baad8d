use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::inference::{credible_interval, Univariate};
use crate::rng::RandomSource;

/// Minimum replicate count for a coverage experiment.
pub const MIN_COVERAGE_REPLICATES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoverageRecord {
    pub covered: bool,
    pub interval: (f64, f64),
    pub target: f64,
    pub level: f64,
}

impl CoverageRecord {
    /// Equal-tailed interval of `marginal` at `level`, checked against `target`.
    pub fn from_marginal(marginal: &Univariate, target: f64, level: f64) -> Result<Self> {
        let (lo, hi) = credible_interval(marginal, level)?;
        Ok(Self {
            covered: lo <= target && target <= hi,
            interval: (lo, hi),
            target,
            level,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoverageSummary {
    pub coverage: f64,
    /// Binomial standard error `√(c(1 − c)/R)` over included replicates.
    pub std_error: f64,
    pub included: usize,
    pub excluded: usize,
}

impl CoverageSummary {
    pub fn from_records<'a>(records: impl IntoIterator<Item = Option<&'a CoverageRecord>>) -> Self {
        let (mut hit, mut included, mut excluded) = (0usize, 0usize, 0usize);
        for r in records {
            match r {
                Some(r) => {
                    included += 1;
                    hit += r.covered as usize;
                }
                None => excluded += 1,
            }
        }
        let c = if included > 0 { hit as f64 / included as f64 } else { f64::NAN };
        Self {
            coverage: c,
            std_error: (c * (1.0 - c) / included as f64).sqrt(),
            included,
            excluded,
        }
    }
}

/// Run `replicates` independent replicates in parallel and tally coverage.
///
/// `replicate` receives the replicate's own stream and returns the posterior
/// marginal of the functional of interest together with its true value. Any
/// error marks the replicate as excluded.
pub fn coverage_experiment<F>(
    master_seed: u64,
    replicates: usize,
    level: f64,
    replicate: F,
) -> Result<(CoverageSummary, Vec<Option<CoverageRecord>>)>
where
    F: Fn(&mut RandomSource) -> Result<(Univariate, f64)> + Sync,
{
    if replicates < MIN_COVERAGE_REPLICATES {
        return Err(Error::Config(format!(
            "coverage needs at least {MIN_COVERAGE_REPLICATES} replicates, got {replicates}"
        )));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Config(format!("credible level {level} outside (0, 1)")));
    }
    let records: Vec<Option<CoverageRecord>> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = RandomSource::for_replicate(master_seed, r as u64);
            replicate(&mut rng)
                .and_then(|(m, target)| CoverageRecord::from_marginal(&m, target, level))
                .ok()
        })
        .collect();
    Ok((CoverageSummary::from_records(records.iter().map(Option::as_ref)), records))
}
