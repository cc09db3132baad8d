//! Data-generating processes.
//!
//! Environments are immutable once built; all per-replicate state lives in the
//! trajectories and policies that use them.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RandomSource;
use crate::trajectory::{Covariate, Trajectory};

/// `y ~ N(xᵀβ₀, σ²)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearGaussianEnv {
    beta0: Vec<f64>,
    sigma2: f64,
}

impl LinearGaussianEnv {
    pub fn new(beta0: Vec<f64>, sigma2: f64) -> Result<Self> {
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return Err(Error::Config(format!("outcome variance must be positive, got {sigma2}")));
        }
        if beta0.is_empty() || beta0.iter().any(|b| !b.is_finite()) {
            return Err(Error::Config("coefficient vector must be non-empty and finite".into()));
        }
        Ok(Self { beta0, sigma2 })
    }

    pub fn dim(&self) -> usize {
        self.beta0.len()
    }

    pub fn beta0(&self) -> &[f64] {
        &self.beta0
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn mean(&self, x: &Covariate) -> Result<f64> {
        if x.dim() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: x.dim(),
            });
        }
        Ok(x.dot(&self.beta0))
    }

    pub fn sample_outcome(&self, x: &Covariate, rng: &mut RandomSource) -> Result<f64> {
        let m = self.mean(x)?;
        Ok(rng.normal(m, self.sigma2.sqrt()))
    }
}

/// One-parameter exponential families with natural parameterization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExpFamily {
    BernoulliLogit,
    PoissonLog,
}

impl std::str::FromStr for ExpFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bernoulli-logit" | "bernoulli" => Ok(Self::BernoulliLogit),
            "poisson-log" | "poisson" => Ok(Self::PoissonLog),
            other => Err(Error::Config(format!("unknown exponential family {other:?}"))),
        }
    }
}

impl ExpFamily {
    /// Log-partition `b(η)`.
    pub fn log_partition(self, eta: f64) -> f64 {
        match self {
            Self::BernoulliLogit => {
                // ln(1 + e^η) without overflow
                if eta > 0.0 {
                    eta + (-eta).exp().ln_1p()
                } else {
                    eta.exp().ln_1p()
                }
            }
            Self::PoissonLog => eta.exp(),
        }
    }

    /// `b′(η)`, the mean parameter.
    pub fn mean_of(self, eta: f64) -> f64 {
        match self {
            Self::BernoulliLogit => sigmoid(eta),
            Self::PoissonLog => eta.exp(),
        }
    }

    /// `b″(η)`, the variance function in natural coordinates.
    pub fn curvature(self, eta: f64) -> f64 {
        match self {
            Self::BernoulliLogit => {
                let s = sigmoid(eta);
                s * (1.0 - s)
            }
            Self::PoissonLog => eta.exp(),
        }
    }

    /// Inverse of [`ExpFamily::mean_of`].
    pub fn natural_of(self, mean: f64) -> Result<f64> {
        if !self.mean_is_interior(mean) {
            return Err(Error::Domain(format!("mean {mean} outside the interior for {self:?}")));
        }
        Ok(match self {
            Self::BernoulliLogit => (mean / (1.0 - mean)).ln(),
            Self::PoissonLog => mean.ln(),
        })
    }

    /// Variance of one observation expressed through its mean.
    pub fn variance_of_mean(self, mean: f64) -> f64 {
        match self {
            Self::BernoulliLogit => mean * (1.0 - mean),
            Self::PoissonLog => mean,
        }
    }

    pub fn mean_is_interior(self, mean: f64) -> bool {
        match self {
            Self::BernoulliLogit => mean > 0.0 && mean < 1.0,
            Self::PoissonLog => mean > 0.0 && mean.is_finite(),
        }
    }

    /// Both families have the whole real line as natural parameter space.
    pub fn natural_is_interior(self, eta: f64) -> bool {
        eta.is_finite()
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::BernoulliLogit => "bernoulli-logit",
            Self::PoissonLog => "poisson-log",
        }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Multi-armed bandit with exponential-family rewards.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpFamilyArmEnv {
    family: ExpFamily,
    natural_params: Vec<f64>,
    mean_params: Vec<f64>,
}

impl ExpFamilyArmEnv {
    pub fn from_natural(family: ExpFamily, natural_params: Vec<f64>) -> Result<Self> {
        if natural_params.is_empty() {
            return Err(Error::Config("at least one arm is required".into()));
        }
        if let Some(eta) = natural_params.iter().find(|e| !family.natural_is_interior(**e)) {
            return Err(Error::Config(format!("natural parameter {eta} is not interior")));
        }
        let mean_params = natural_params.iter().map(|&e| family.mean_of(e)).collect();
        Ok(Self {
            family,
            natural_params,
            mean_params,
        })
    }

    pub fn from_means(family: ExpFamily, means: &[f64]) -> Result<Self> {
        let natural = means
            .iter()
            .map(|&m| family.natural_of(m).map_err(|e| Error::Config(e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        Self::from_natural(family, natural)
    }

    pub fn family(&self) -> ExpFamily {
        self.family
    }

    pub fn num_arms(&self) -> usize {
        self.natural_params.len()
    }

    pub fn natural_params(&self) -> &[f64] {
        &self.natural_params
    }

    pub fn mean_params(&self) -> &[f64] {
        &self.mean_params
    }

    /// Draw a reward for `arm` (0-based).
    pub fn sample_reward(&self, arm: usize, rng: &mut RandomSource) -> Result<f64> {
        let mean = *self.mean_params.get(arm).ok_or(Error::Dimension {
            expected: self.num_arms(),
            got: arm + 1,
        })?;
        Ok(match self.family {
            ExpFamily::BernoulliLogit => {
                if rng.bernoulli(mean) {
                    1.0
                } else {
                    0.0
                }
            }
            ExpFamily::PoissonLog => rng.poisson(mean),
        })
    }
}

/// Gaussian arms with arm-specific known variances.
#[derive(Debug, Clone, PartialEq)]
pub struct HeteroskedasticEnv {
    means: Vec<f64>,
    variances: Vec<f64>,
}

impl HeteroskedasticEnv {
    pub fn new(means: Vec<f64>, variances: Vec<f64>) -> Result<Self> {
        if means.len() != variances.len() {
            return Err(Error::Dimension {
                expected: means.len(),
                got: variances.len(),
            });
        }
        if means.is_empty() {
            return Err(Error::Config("at least one arm is required".into()));
        }
        if let Some(v) = variances.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
            return Err(Error::Config(format!("arm variance must be positive, got {v}")));
        }
        Ok(Self { means, variances })
    }

    pub fn num_arms(&self) -> usize {
        self.means.len()
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    pub fn scales(&self) -> Vec<f64> {
        self.variances.iter().map(|v| v.sqrt()).collect()
    }

    pub fn sample_reward(&self, arm: usize, rng: &mut RandomSource) -> Result<f64> {
        if arm >= self.num_arms() {
            return Err(Error::Dimension {
                expected: self.num_arms(),
                got: arm + 1,
            });
        }
        Ok(rng.normal(self.means[arm], self.variances[arm].sqrt()))
    }

    /// Map to the unit-variance problem: outcomes of arm `i` and its mean are
    /// divided by `σ_i`.
    pub fn rescale_heteroskedastic(&self, traj: &Trajectory) -> Result<(Trajectory, LinearGaussianEnv)> {
        let scales = self.scales();
        let out = self.map_outcomes(traj, |y, s| y / s, &scales)?;
        let beta = self.means.iter().zip(&scales).map(|(m, s)| m / s).collect();
        Ok((out, LinearGaussianEnv::new(beta, 1.0)?))
    }

    /// Inverse of [`HeteroskedasticEnv::rescale_heteroskedastic`] on outcomes.
    pub fn restore_outcomes(&self, traj: &Trajectory) -> Result<Trajectory> {
        let scales = self.scales();
        self.map_outcomes(traj, |y, s| y * s, &scales)
    }

    fn map_outcomes(
        &self,
        traj: &Trajectory,
        f: impl Fn(f64, f64) -> f64,
        scales: &[f64],
    ) -> Result<Trajectory> {
        if traj.dim() != self.num_arms() {
            return Err(Error::Dimension {
                expected: self.num_arms(),
                got: traj.dim(),
            });
        }
        let mut out = Trajectory::new(traj.dim());
        for (x, y) in traj.steps() {
            let arm = x
                .basis_index()
                .ok_or_else(|| Error::Domain("heteroskedastic trajectories must use basis covariates".into()))?;
            out.push(x.clone(), f(*y, scales[arm]))?;
        }
        Ok(out)
    }
}

/// Embeds a `d`-dimensional context into block `arm` of an `m·d` covariate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ContextualEmbedding {
    num_arms: usize,
    context_dim: usize,
}

impl ContextualEmbedding {
    pub fn new(num_arms: usize, context_dim: usize) -> Result<Self> {
        if num_arms == 0 || context_dim == 0 {
            return Err(Error::Config("contextual embedding needs m >= 1 and d >= 1".into()));
        }
        Ok(Self { num_arms, context_dim })
    }

    pub fn num_arms(&self) -> usize {
        self.num_arms
    }

    pub fn context_dim(&self) -> usize {
        self.context_dim
    }

    pub fn covariate_dim(&self) -> usize {
        self.num_arms * self.context_dim
    }

    pub fn embed_context(&self, context: &[f64], arm: usize) -> Result<Covariate> {
        if context.len() != self.context_dim {
            return Err(Error::Dimension {
                expected: self.context_dim,
                got: context.len(),
            });
        }
        if arm >= self.num_arms {
            return Err(Error::Dimension {
                expected: self.num_arms,
                got: arm + 1,
            });
        }
        let mut v = vec![0.0; self.covariate_dim()];
        v[arm * self.context_dim..(arm + 1) * self.context_dim].copy_from_slice(context);
        Covariate::new(v)
    }

    /// Projection `T_i` onto block `arm`.
    pub fn project<'a>(&self, x: &'a Covariate, arm: usize) -> &'a [f64] {
        &x.values()[arm * self.context_dim..(arm + 1) * self.context_dim]
    }

    /// Standard normal context.
    pub fn sample_context(&self, rng: &mut RandomSource) -> Vec<f64> {
        (0..self.context_dim).map(|_| rng.standard_normal()).collect()
    }
}

/// Named parameter sets for three-arm, two-dimensional linear contextual bandits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContextualPreset {
    /// Every arm is optimal for some context.
    Undominated,
    /// Arm 3 is never strictly optimal.
    Dominated,
    /// Arms 1 and 2 share parameters.
    Duplicate,
}

impl ContextualPreset {
    pub fn thetas(self) -> Vec<Vec<f64>> {
        let s = 3f64.sqrt() / 2.0;
        match self {
            Self::Undominated => vec![vec![1.0, 0.0], vec![-0.5, s], vec![-0.5, -s]],
            Self::Dominated => vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.5, 0.5]],
            Self::Duplicate => vec![vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]],
        }
    }
}

/// Linear dynamics `x' = A x + B u + ε`, `ε ~ N(0, σ² I_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LqrEnv {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    noise_sigma2: f64,
}

/// Result of one LQR transition.
#[derive(Debug, Clone, PartialEq)]
pub struct LqrStep {
    pub next_state: DVector<f64>,
    /// `k` serialized regression rows, one per state coordinate.
    pub rows: Vec<(Covariate, f64)>,
}

impl LqrEnv {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, noise_sigma2: f64) -> Result<Self> {
        if !a.is_square() || a.nrows() == 0 {
            return Err(Error::Config("A must be a non-empty square matrix".into()));
        }
        if b.nrows() != a.nrows() {
            return Err(Error::Dimension {
                expected: a.nrows(),
                got: b.nrows(),
            });
        }
        if b.ncols() == 0 {
            return Err(Error::Config("action dimension must be at least 1".into()));
        }
        if !(noise_sigma2 > 0.0) || !noise_sigma2.is_finite() {
            return Err(Error::Config(format!("noise variance must be positive, got {noise_sigma2}")));
        }
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Config("A and B must be finite".into()));
        }
        Ok(Self { a, b, noise_sigma2 })
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn noise_sigma2(&self) -> f64 {
        self.noise_sigma2
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn action_dim(&self) -> usize {
        self.b.ncols()
    }

    /// Dimension `k(k+d)` of the serialized covariates.
    pub fn covariate_dim(&self) -> usize {
        self.state_dim() * (self.state_dim() + self.action_dim())
    }

    /// `(A B)` flattened in row-major order.
    pub fn true_parameter(&self) -> Vec<f64> {
        let (k, d) = (self.state_dim(), self.action_dim());
        let mut out = Vec::with_capacity(self.covariate_dim());
        for i in 0..k {
            out.extend((0..k).map(|j| self.a[(i, j)]));
            out.extend((0..d).map(|j| self.b[(i, j)]));
        }
        out
    }

    pub fn lqr_transition(
        &self,
        state: &DVector<f64>,
        action: &DVector<f64>,
        rng: &mut RandomSource,
    ) -> Result<LqrStep> {
        self.check_dims(state, action)?;
        let sd = self.noise_sigma2.sqrt();
        let mut next = &self.a * state + &self.b * action;
        for v in next.iter_mut() {
            *v += sd * rng.standard_normal();
        }
        let rows = self.serialize_transition(state, action, &next)?;
        Ok(LqrStep { next_state: next, rows })
    }

    /// Regression rows for one observed transition: row `i` carries
    /// `(state, action)` in block `i` and outcome `next[i]`.
    pub fn serialize_transition(
        &self,
        state: &DVector<f64>,
        action: &DVector<f64>,
        next: &DVector<f64>,
    ) -> Result<Vec<(Covariate, f64)>> {
        self.check_dims(state, action)?;
        let (k, d) = (self.state_dim(), self.action_dim());
        if next.len() != k {
            return Err(Error::Dimension { expected: k, got: next.len() });
        }
        let block = k + d;
        (0..k)
            .map(|i| {
                let mut v = vec![0.0; k * block];
                v[i * block..i * block + k].copy_from_slice(state.as_slice());
                v[i * block + k..(i + 1) * block].copy_from_slice(action.as_slice());
                Ok((Covariate::new(v)?, next[i]))
            })
            .collect()
    }

    fn check_dims(&self, state: &DVector<f64>, action: &DVector<f64>) -> Result<()> {
        if state.len() != self.state_dim() {
            return Err(Error::Dimension {
                expected: self.state_dim(),
                got: state.len(),
            });
        }
        if action.len() != self.action_dim() {
            return Err(Error::Dimension {
                expected: self.action_dim(),
                got: action.len(),
            });
        }
        Ok(())
    }
}

/// Default LQR configurations. None of these are claimed to be any published
/// parameter set; they only realise the three qualitative regimes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LqrPreset {
    /// `d = k` with full-rank `B`.
    Determined,
    /// `d < k`, the unstable mode is controllable.
    Stabilizable,
    /// `d < k`, a mode outside the reach of `B` is unstable.
    Unstabilizable,
}

impl LqrPreset {
    pub fn matrices(self) -> (DMatrix<f64>, DMatrix<f64>) {
        match self {
            Self::Determined => (
                DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]),
                DMatrix::identity(2, 2),
            ),
            Self::Stabilizable => (
                DMatrix::from_row_slice(2, 2, &[1.1, 0.3, 0.0, 0.5]),
                DMatrix::from_row_slice(2, 1, &[1.0, 0.0]),
            ),
            Self::Unstabilizable => (
                DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 1.001]),
                DMatrix::from_row_slice(2, 1, &[1.0, 0.0]),
            ),
        }
    }
}
