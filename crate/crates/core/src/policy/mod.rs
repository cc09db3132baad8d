//! Adaptive sampling rules.
//!
//! Policies only see what an experimenter would see: the history, their own
//! sufficient statistics, declared known variances, and randomness. None of
//! them take an environment as input.

mod batched;
mod laiwei;
mod linucb;
mod ncec;
mod replay;
mod thompson;
mod ucb;

use serde::{Deserialize, Serialize};

pub use batched::{arm1_probability, batched_thompson_plan, clip_probability, BatchPlan};
pub use laiwei::lai_wei_select;
pub use linucb::{lin_ucb_select, ArmBlock, LinUcb};
pub use ncec::{exploration_variance, riccati_gain, DynamicsEstimator, Ncec, NcecConfig, RiccatiSolution};
pub use replay::{replay_select, LoggedStep, ReplayLog, REPLAY_HEADER};
pub use thompson::{thompson_beta_select, thompson_gaussian_select};
pub use ucb::{ucb_select, ucb_select_scaled};

use crate::error::{Error, Result};
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    Ucb,
    ThompsonGaussian,
    ThompsonBernoulli,
    BatchedThompson,
    LinUcb,
    Ncec,
    LaiWei,
    Uniform,
    Replay,
}

impl PolicyKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Ucb => "ucb",
            Self::ThompsonGaussian => "thompson-gaussian",
            Self::ThompsonBernoulli => "thompson-bernoulli",
            Self::BatchedThompson => "batched-thompson",
            Self::LinUcb => "lin-ucb",
            Self::Ncec => "ncec",
            Self::LaiWei => "lai-wei",
            Self::Uniform => "uniform",
            Self::Replay => "replay",
        }
    }
}

/// Per-arm pull counts `N_i` and outcome sums.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmCounts {
    counts: Vec<u64>,
    sums: Vec<f64>,
}

impl ArmCounts {
    pub fn new(num_arms: usize) -> Self {
        Self {
            counts: vec![0; num_arms],
            sums: vec![0.0; num_arms],
        }
    }

    /// Tally a trajectory whose covariates are all basis vectors.
    pub fn from_trajectory(traj: &Trajectory) -> Result<Self> {
        let mut c = Self::new(traj.dim());
        for (x, y) in traj.steps() {
            let arm = x
                .basis_index()
                .ok_or_else(|| Error::Domain("bandit trajectories must use basis covariates".into()))?;
            c.record(arm, *y);
        }
        Ok(c)
    }

    pub fn num_arms(&self) -> usize {
        self.counts.len()
    }

    pub fn record(&mut self, arm: usize, y: f64) {
        self.counts[arm] += 1;
        self.sums[arm] += y;
    }

    /// Overwrite the tally of one arm.
    pub fn set(&mut self, arm: usize, count: u64, sum: f64) {
        self.counts[arm] = count;
        self.sums[arm] = sum;
    }

    pub fn count(&self, arm: usize) -> u64 {
        self.counts[arm]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn sum(&self, arm: usize) -> f64 {
        self.sums[arm]
    }

    /// Sample mean of `arm`, or `0` before its first pull.
    pub fn mean(&self, arm: usize) -> f64 {
        if self.counts[arm] == 0 {
            0.0
        } else {
            self.sums[arm] / self.counts[arm] as f64
        }
    }

    pub fn means(&self) -> Vec<f64> {
        (0..self.num_arms()).map(|i| self.mean(i)).collect()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn min_count(&self) -> u64 {
        self.counts.iter().copied().min().unwrap_or(0)
    }
}

/// Deterministic round-robin allocation over `num_arms` arms (`step` is 1-based).
pub fn uniform_select(step: u64, num_arms: usize) -> usize {
    ((step.max(1) - 1) % num_arms as u64) as usize
}

/// Index of the largest value, ties to the lowest index.
pub(crate) fn argmax(values: impl IntoIterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (i, v) in values.into_iter().enumerate() {
        if v > best_v {
            best = i;
            best_v = v;
        }
    }
    best
}
