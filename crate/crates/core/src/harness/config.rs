use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::PolicyKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    GaussianMab,
    BernoulliMab,
    PoissonMab,
    HeteroMab,
    Contextual,
    Lqr,
    Batched,
    LaiWei,
    Replay,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::GaussianMab => "gaussian-mab",
            Self::BernoulliMab => "bernoulli-mab",
            Self::PoissonMab => "poisson-mab",
            Self::HeteroMab => "hetero-mab",
            Self::Contextual => "contextual",
            Self::Lqr => "lqr",
            Self::Batched => "batched",
            Self::LaiWei => "lai-wei",
            Self::Replay => "replay",
        }
    }

    /// Policies that can drive this experiment.
    pub fn allowed_policies(self) -> &'static [PolicyKind] {
        use PolicyKind::*;
        match self {
            Self::GaussianMab | Self::HeteroMab => &[Ucb, ThompsonGaussian, Uniform],
            Self::BernoulliMab => &[Ucb, ThompsonBernoulli, Uniform],
            Self::PoissonMab => &[Ucb, Uniform],
            Self::Contextual => &[LinUcb, Uniform],
            Self::Lqr => &[Ncec],
            Self::Batched => &[BatchedThompson],
            Self::LaiWei => &[LaiWei],
            Self::Replay => &[Replay],
        }
    }
}

/// Scalar summary of the parameter whose credible interval is scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Functional {
    /// `β₁ − β₂`, the margin of a two-arm bandit.
    Margin,
    /// One coordinate of the parameter, 1-based.
    Coefficient(usize),
}

impl fmt::Display for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Margin => f.write_str("margin"),
            Self::Coefficient(i) => write!(f, "coef:{i}"),
        }
    }
}

impl TryFrom<String> for Functional {
    type Error = String;

    fn try_from(s: String) -> std::result::Result<Self, String> {
        if s == "margin" {
            return Ok(Self::Margin);
        }
        let idx = s
            .strip_prefix("coef:")
            .or_else(|| s.strip_prefix("arm:"))
            .ok_or_else(|| format!("unknown functional `{s}` (expected `margin` or `coef:<i>`)"))?;
        match idx.parse::<usize>() {
            Ok(i) if i >= 1 => Ok(Self::Coefficient(i)),
            _ => Err(format!("functional index in `{s}` must be a 1-based integer")),
        }
    }
}

impl From<Functional> for String {
    fn from(f: Functional) -> Self {
        f.to_string()
    }
}

impl Functional {
    /// Weights `w` such that the functional is `wᵀβ`.
    pub fn weights(self, dim: usize) -> Result<Vec<f64>> {
        let mut w = vec![0.0; dim];
        match self {
            Self::Margin if dim >= 2 => {
                w[0] = 1.0;
                w[1] = -1.0;
            }
            Self::Coefficient(i) if (1..=dim).contains(&i) => w[i - 1] = 1.0,
            _ => {
                return Err(Error::Config(format!("functional `{self}` is undefined for dimension {dim}")));
            }
        }
        Ok(w)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicySpec {
    pub kind: Option<PolicyKind>,
    /// UCB bonus multiplier.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    /// Noise scale the UCB bonus assumes.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    /// Per-arm normal prior the Thompson policies sample from.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prior_mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prior_variance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pi_min: Option<f64>,
    /// lin-UCB exploration weight.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ridge: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta_exp: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_exp: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warmup: Option<u64>,
    /// First covariate of the Lai–Wei design.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x1: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvSpec {
    /// Arm means (Gaussian, heteroskedastic, batched) or mean parameters
    /// (Bernoulli success probabilities, Poisson rates).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub means: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma2: Option<f64>,
    /// Per-arm outcome variances for heteroskedastic bandits.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variances: Option<Vec<f64>>,
    /// Lai–Wei regression coefficient.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta0: Option<f64>,
    /// Named contextual or LQR parameter set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    /// Per-arm contextual parameters, overriding `preset`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub thetas: Option<Vec<Vec<f64>>>,
    /// LQR dynamics rows, overriding `preset`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PriorSpec {
    /// Independent `N(mean, variance)` on every coordinate.
    Gaussian {
        #[serde(default)]
        mean: f64,
        #[serde(default = "one")]
        variance: f64,
    },
    /// Per-arm `Beta(a, b)`.
    Beta {
        #[serde(default = "one")]
        a: f64,
        #[serde(default = "one")]
        b: f64,
    },
    /// Per-arm `Gamma(a, rate b)`.
    Gamma {
        #[serde(default = "one")]
        a: f64,
        #[serde(default = "one")]
        b: f64,
    },
}

fn one() -> f64 {
    1.0
}

fn default_replicates() -> usize {
    1
}

fn default_tv_samples() -> usize {
    10_000
}

fn default_tv_max_samples() -> usize {
    1_000_000
}

fn default_tv_relative_se() -> f64 {
    0.1
}

fn default_level() -> f64 {
    0.95
}

/// One experiment, as read from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Name used in summaries; defaults to the config file stem.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub kind: ExperimentKind,
    /// Rounds per replicate (transitions for LQR). Derived from the batch
    /// size for batched experiments and from the log for replay.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default)]
    pub seed: u64,
    /// Initial Monte-Carlo draws per TV estimate; `0` skips TV.
    #[serde(default = "default_tv_samples")]
    pub tv_samples: usize,
    #[serde(default = "default_tv_max_samples")]
    pub tv_max_samples: usize,
    /// Sampling doubles until the TV standard error is at most this fraction
    /// of the estimate.
    #[serde(default = "default_tv_relative_se")]
    pub tv_relative_se: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checkpoints: Option<Vec<usize>>,
    #[serde(default = "default_level")]
    pub level: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coverage: Option<Functional>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub policy: PolicySpec,
    #[serde(default)]
    pub env: EnvSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prior: Option<PriorSpec>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    /// Read a config; an absent label defaults to the file stem.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut cfg = Self::from_toml_str(&std::fs::read_to_string(path)?)?;
        if cfg.label.is_none() {
            cfg.label = path.file_stem().map(|s| s.to_string_lossy().into_owned());
        }
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| self.kind.name().to_string())
    }

    pub fn policy_kind(&self) -> PolicyKind {
        self.policy.kind.unwrap_or(match self.kind {
            ExperimentKind::GaussianMab
            | ExperimentKind::BernoulliMab
            | ExperimentKind::PoissonMab
            | ExperimentKind::HeteroMab => PolicyKind::Ucb,
            ExperimentKind::Contextual => PolicyKind::LinUcb,
            ExperimentKind::Lqr => PolicyKind::Ncec,
            ExperimentKind::Batched => PolicyKind::BatchedThompson,
            ExperimentKind::LaiWei => PolicyKind::LaiWei,
            ExperimentKind::Replay => PolicyKind::Replay,
        })
    }

    /// The configured prior, or the kind's default (`N(0, 1)` per
    /// coordinate, `Beta(1, 1)` or `Gamma(1, 1)` per arm).
    pub fn prior_spec(&self) -> PriorSpec {
        self.prior.clone().unwrap_or(match self.kind {
            ExperimentKind::BernoulliMab | ExperimentKind::Replay => PriorSpec::Beta { a: 1.0, b: 1.0 },
            ExperimentKind::PoissonMab => PriorSpec::Gamma { a: 1.0, b: 1.0 },
            _ => PriorSpec::Gaussian {
                mean: 0.0,
                variance: 1.0,
            },
        })
    }
}
