//! Validation of an [`ExperimentConfig`] into a runnable plan.

use nalgebra::{DMatrix, DVector};

use super::config::{ExperimentConfig, ExperimentKind, Functional, PriorSpec};
use crate::env::{ContextualEmbedding, ContextualPreset, ExpFamily, ExpFamilyArmEnv, HeteroskedasticEnv, LinearGaussianEnv, LqrEnv, LqrPreset};
use crate::error::{Error, Result};
use crate::inference::GaussianDistribution;
use crate::metrics::{default_checkpoints, CurveModel, TvOptions};
use crate::policy::{NcecConfig, PolicyKind, ReplayLog};

/// Ridge used by the NCEC dynamics estimate that feeds the Riccati solve.
pub const NCEC_ESTIMATE_RIDGE: f64 = 1.0;

#[derive(Debug, Clone)]
pub enum ArmEnv {
    Gaussian(LinearGaussianEnv),
    ExpFamily(ExpFamilyArmEnv),
    Heteroskedastic(HeteroskedasticEnv),
}

#[derive(Debug, Clone)]
pub enum BanditPolicy {
    Ucb { c: f64, sigmas: Vec<f64> },
    ThompsonGaussian { prior: (f64, f64), variances: Vec<f64> },
    ThompsonBernoulli,
    Uniform,
}

#[derive(Debug, Clone)]
pub enum Setup {
    Bandit {
        env: ArmEnv,
        policy: BanditPolicy,
    },
    Contextual {
        embedding: ContextualEmbedding,
        env: LinearGaussianEnv,
        lin_ucb: Option<(f64, f64)>,
    },
    Lqr {
        env: LqrEnv,
        ncec: NcecConfig,
    },
    Batched {
        env: LinearGaussianEnv,
        batch_size: usize,
        pi_min: f64,
        policy_prior: (f64, f64),
    },
    LaiWei {
        env: LinearGaussianEnv,
        x1: f64,
    },
    Replay {
        log: ReplayLog,
    },
}

/// A validated experiment.
#[derive(Debug, Clone)]
pub struct Plan {
    pub label: String,
    pub kind: ExperimentKind,
    pub policy: PolicyKind,
    pub replicates: usize,
    pub seed: u64,
    /// Rounds per replicate (transitions for LQR).
    pub horizon: usize,
    /// Checkpoints in rounds.
    pub checkpoints: Vec<usize>,
    /// Trajectory rows produced per round (`k` for LQR, 1 otherwise).
    pub rows_per_round: usize,
    pub tv: Option<TvOptions>,
    pub level: f64,
    pub coverage: Option<(Functional, Vec<f64>)>,
    pub model: CurveModel,
    /// True parameter on the scale of the model.
    pub truth: Vec<f64>,
    pub setup: Setup,
}

struct Checker {
    errs: Vec<String>,
}

impl Checker {
    fn check(&mut self, ok: bool, msg: impl FnOnce() -> String) -> bool {
        if !ok {
            self.errs.push(msg());
        }
        ok
    }

    fn positive(&mut self, name: &str, v: f64) -> bool {
        self.check(v > 0.0 && v.is_finite(), || format!("{name} must be positive and finite, got {v}"))
    }

    /// [`Checker::capture`] with the offending field named in the message.
    fn capture_field<T>(&mut self, field: &str, r: Result<T>) -> Option<T> {
        self.capture(r.map_err(|e| Error::Validation(vec![format!("{field}: {e}")])))
    }

    fn capture<T>(&mut self, r: Result<T>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(Error::Validation(v)) => {
                self.errs.extend(v);
                None
            }
            Err(e) => {
                self.errs.push(e.to_string());
                None
            }
        }
    }
}

fn matrix(rows: &[Vec<f64>], name: &str, c: &mut Checker) -> Option<DMatrix<f64>> {
    let ncols = rows.first().map_or(0, Vec::len);
    if !c.check(!rows.is_empty() && ncols > 0 && rows.iter().all(|r| r.len() == ncols), || {
        format!("env.{name} must be a non-empty rectangular matrix")
    }) {
        return None;
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    c.check(flat.iter().all(|v| v.is_finite()), || format!("env.{name} has non-finite entries"))
        .then(|| DMatrix::from_row_slice(rows.len(), ncols, &flat))
}

/// Validate `cfg`, collecting every violation. Replay experiments need the
/// parsed `log`; without it the log-dependent checks are skipped and no plan
/// is produced.
pub fn build_plan(cfg: &ExperimentConfig, log: Option<&ReplayLog>) -> Result<Option<Plan>> {
    let mut c = Checker { errs: Vec::new() };
    let kind = cfg.kind;
    let policy = cfg.policy_kind();
    let p = &cfg.policy;
    let e = &cfg.env;

    c.check(kind.allowed_policies().contains(&policy), || {
        let allowed: Vec<&str> = kind.allowed_policies().iter().map(|k| k.name()).collect();
        format!(
            "policy `{}` cannot drive a `{}` experiment (allowed: {})",
            policy.name(),
            kind.name(),
            allowed.join(", ")
        )
    });
    c.check(cfg.replicates >= 1, || "replicates must be at least 1".into());
    if cfg.tv_samples > 0 {
        c.check(cfg.tv_max_samples >= cfg.tv_samples, || {
            format!(
                "tv_max_samples ({}) must be at least tv_samples ({})",
                cfg.tv_max_samples, cfg.tv_samples
            )
        });
    }
    c.positive("tv_relative_se", cfg.tv_relative_se);
    c.check(cfg.level > 0.0 && cfg.level < 1.0, || format!("level must lie in (0, 1), got {}", cfg.level));

    let sigma2 = e.sigma2.unwrap_or(1.0);
    if matches!(
        kind,
        ExperimentKind::GaussianMab | ExperimentKind::Contextual | ExperimentKind::Lqr | ExperimentKind::Batched | ExperimentKind::LaiWei
    ) {
        c.positive("env.sigma2", sigma2);
    }

    let means = e.means.clone().unwrap_or_default();
    let needs_means = matches!(
        kind,
        ExperimentKind::GaussianMab
            | ExperimentKind::BernoulliMab
            | ExperimentKind::PoissonMab
            | ExperimentKind::HeteroMab
            | ExperimentKind::Batched
    );
    if needs_means {
        c.check(!means.is_empty(), || format!("env.means is required for `{}`", kind.name()));
        c.check(means.iter().all(|m| m.is_finite()), || "env.means must be finite".into());
    }

    // horizon
    let mut horizon = cfg.horizon.unwrap_or(0);
    match kind {
        ExperimentKind::Batched => {
            let b = p.batch_size.unwrap_or(0);
            c.check(b > 0 && b.is_multiple_of(2), || format!("policy.batch_size must be even and positive, got {b}"));
            if let Some(h) = cfg.horizon {
                c.check(h == 2 * b, || format!("horizon must equal 2 * batch_size = {}, got {h}", 2 * b));
            }
            horizon = 2 * b;
        }
        ExperimentKind::Replay => {
            if let Some(log) = log {
                horizon = log.len();
                if let Some(h) = cfg.horizon {
                    c.check(h <= log.len(), || format!("horizon {h} exceeds log length {}", log.len()));
                    horizon = h.min(log.len());
                }
            }
        }
        _ => {
            c.check(horizon >= 1, || "horizon must be at least 1".into());
        }
    }

    // environment and policy
    let mut setup = None;
    let mut truth = Vec::new();
    let mut dim = 0;
    let mut rows_per_round = 1;
    match kind {
        ExperimentKind::GaussianMab | ExperimentKind::BernoulliMab | ExperimentKind::PoissonMab | ExperimentKind::HeteroMab => {
            dim = means.len();
            truth = means.clone();
            let env = match kind {
                ExperimentKind::GaussianMab => c
                    .capture(LinearGaussianEnv::new(means.clone(), sigma2))
                    .map(ArmEnv::Gaussian),
                ExperimentKind::BernoulliMab => c
                    .capture_field("env.means", ExpFamilyArmEnv::from_means(ExpFamily::BernoulliLogit, &means))
                    .map(ArmEnv::ExpFamily),
                ExperimentKind::PoissonMab => c
                    .capture_field("env.means", ExpFamilyArmEnv::from_means(ExpFamily::PoissonLog, &means))
                    .map(ArmEnv::ExpFamily),
                _ => {
                    let v = e.variances.clone().unwrap_or_default();
                    c.check(v.len() == means.len(), || {
                        format!("env.variances needs one entry per arm ({}), got {}", means.len(), v.len())
                    });
                    c.capture(HeteroskedasticEnv::new(means.clone(), v)).map(ArmEnv::Heteroskedastic)
                }
            };
            let variances: Vec<f64> = match &env {
                Some(ArmEnv::Heteroskedastic(h)) => h.variances().to_vec(),
                _ => vec![sigma2; dim],
            };
            let bandit_policy = match policy {
                PolicyKind::Ucb => {
                    let cc = p.c.unwrap_or(1.0);
                    c.positive("policy.c", cc);
                    let sigmas = match (p.sigma, kind) {
                        (Some(s), _) => {
                            c.positive("policy.sigma", s);
                            vec![s; dim]
                        }
                        (None, ExperimentKind::BernoulliMab) => vec![0.5; dim],
                        (None, ExperimentKind::PoissonMab) => vec![1.0; dim],
                        (None, _) => variances.iter().map(|v| v.sqrt()).collect(),
                    };
                    Some(BanditPolicy::Ucb { c: cc, sigmas })
                }
                PolicyKind::ThompsonGaussian => {
                    let pv = p.prior_variance.unwrap_or(1.0);
                    c.positive("policy.prior_variance", pv);
                    Some(BanditPolicy::ThompsonGaussian {
                        prior: (p.prior_mean.unwrap_or(0.0), pv),
                        variances: variances.clone(),
                    })
                }
                PolicyKind::ThompsonBernoulli => Some(BanditPolicy::ThompsonBernoulli),
                PolicyKind::Uniform => Some(BanditPolicy::Uniform),
                _ => None,
            };
            if let (Some(env), Some(policy)) = (env, bandit_policy) {
                setup = Some(Setup::Bandit { env, policy });
            }
        }
        ExperimentKind::Contextual => {
            let thetas = match (&e.thetas, e.preset.as_deref()) {
                (Some(t), _) => Some(t.clone()),
                (None, Some(name)) => {
                    let preset = match name {
                        "undominated" => Some(ContextualPreset::Undominated),
                        "dominated" => Some(ContextualPreset::Dominated),
                        "duplicate" => Some(ContextualPreset::Duplicate),
                        _ => None,
                    };
                    c.check(preset.is_some(), || {
                        format!("unknown contextual preset `{name}` (expected undominated, dominated or duplicate)")
                    });
                    preset.map(ContextualPreset::thetas)
                }
                (None, None) => Some(ContextualPreset::Undominated.thetas()),
            };
            if let Some(thetas) = thetas {
                let d = thetas.first().map_or(0, Vec::len);
                if c.check(!thetas.is_empty() && d > 0 && thetas.iter().all(|t| t.len() == d), || {
                    "env.thetas must be a non-empty list of equal-length vectors".into()
                }) {
                    truth = thetas.concat();
                    dim = truth.len();
                    let emb = c.capture(ContextualEmbedding::new(thetas.len(), d));
                    let env = c.capture(LinearGaussianEnv::new(truth.clone(), sigma2));
                    let lin_ucb = if policy == PolicyKind::LinUcb {
                        let alpha = p.alpha.unwrap_or(1.0);
                        let ridge = p.ridge.unwrap_or(1.0);
                        c.check(alpha >= 0.0 && alpha.is_finite(), || format!("policy.alpha must be non-negative, got {alpha}"));
                        c.positive("policy.ridge", ridge);
                        Some((alpha, ridge))
                    } else {
                        None
                    };
                    if let (Some(embedding), Some(env)) = (emb, env) {
                        setup = Some(Setup::Contextual { embedding, env, lin_ucb });
                    }
                }
            }
        }
        ExperimentKind::Lqr => {
            let mats = match (&e.a, &e.b) {
                (Some(a), Some(b)) => match (matrix(a, "a", &mut c), matrix(b, "b", &mut c)) {
                    (Some(a), Some(b)) => Some((a, b)),
                    _ => None,
                },
                (None, None) => {
                    let name = e.preset.as_deref().unwrap_or("stabilizable");
                    let preset = match name {
                        "determined" => Some(LqrPreset::Determined),
                        "stabilizable" => Some(LqrPreset::Stabilizable),
                        "unstabilizable" => Some(LqrPreset::Unstabilizable),
                        _ => None,
                    };
                    c.check(preset.is_some(), || {
                        format!("unknown LQR preset `{name}` (expected determined, stabilizable or unstabilizable)")
                    });
                    preset.map(LqrPreset::matrices)
                }
                _ => {
                    c.errs.push("env.a and env.b must be given together".into());
                    None
                }
            };
            let ncec = NcecConfig {
                tau2: p.tau2.unwrap_or(1.0),
                beta_exp: p.beta_exp.unwrap_or(0.5),
                alpha_exp: p.alpha_exp.unwrap_or(1.0),
                warmup: p.warmup.unwrap_or(10),
                ..NcecConfig::default()
            };
            c.capture(ncec.validate());
            if let Some((a, b)) = mats {
                if let Some(env) = c.capture(LqrEnv::new(a, b, sigma2)) {
                    truth = env.true_parameter();
                    dim = env.covariate_dim();
                    rows_per_round = env.state_dim();
                    setup = Some(Setup::Lqr { env, ncec });
                }
            }
        }
        ExperimentKind::Batched => {
            c.check(means.len() == 2, || format!("batched experiments need exactly two arms, got {}", means.len()));
            let pi_min = p.pi_min.unwrap_or(0.05);
            c.check((0.0..0.5).contains(&pi_min), || format!("policy.pi_min must lie in [0, 0.5), got {pi_min}"));
            let pv = p.prior_variance.unwrap_or(1.0);
            c.positive("policy.prior_variance", pv);
            dim = 2;
            truth = means.clone();
            if means.len() == 2 {
                if let Some(env) = c.capture(LinearGaussianEnv::new(means.clone(), sigma2)) {
                    setup = Some(Setup::Batched {
                        env,
                        batch_size: p.batch_size.unwrap_or(0),
                        pi_min,
                        policy_prior: (p.prior_mean.unwrap_or(0.0), pv),
                    });
                }
            }
        }
        ExperimentKind::LaiWei => {
            let beta0 = e.beta0.unwrap_or(1.0);
            let x1 = p.x1.unwrap_or(1.0);
            c.check(beta0.is_finite(), || "env.beta0 must be finite".into());
            c.check(x1.is_finite(), || "policy.x1 must be finite".into());
            dim = 1;
            truth = vec![beta0];
            if let Some(env) = c.capture(LinearGaussianEnv::new(vec![beta0], sigma2)) {
                setup = Some(Setup::LaiWei { env, x1 });
            }
        }
        ExperimentKind::Replay => {
            if let Some(log) = log {
                dim = log.num_arms();
                c.check(
                    log.steps().iter().all(|s| s.reward == 0.0 || s.reward == 1.0),
                    || "replay rewards must be 0 or 1 for Bernoulli inference".into(),
                );
                truth = vec![f64::NAN; dim];
                setup = Some(Setup::Replay { log: log.clone() });
            }
        }
    }

    // prior and inference model
    let prior = cfg.prior_spec();
    let model = match (kind, &prior) {
        (ExperimentKind::BernoulliMab | ExperimentKind::Replay, PriorSpec::Beta { a, b })
        | (ExperimentKind::PoissonMab, PriorSpec::Gamma { a, b }) => {
            c.positive("prior.a", *a);
            c.positive("prior.b", *b);
            let family = if kind == ExperimentKind::PoissonMab {
                ExpFamily::PoissonLog
            } else {
                ExpFamily::BernoulliLogit
            };
            Some(CurveModel::ExpFamily {
                family,
                prior: vec![(*a, *b); dim],
            })
        }
        (
            ExperimentKind::BernoulliMab | ExperimentKind::Replay | ExperimentKind::PoissonMab,
            _,
        ) => {
            c.errs.push(format!(
                "`{}` experiments need a {} prior",
                kind.name(),
                if kind == ExperimentKind::PoissonMab { "gamma" } else { "beta" }
            ));
            None
        }
        (_, PriorSpec::Gaussian { mean, variance }) => {
            c.check(mean.is_finite(), || "prior.mean must be finite".into());
            c.positive("prior.variance", *variance);
            let g = (dim > 0 && mean.is_finite() && *variance > 0.0 && variance.is_finite())
                .then(|| GaussianDistribution::isotropic(DVector::from_element(dim, *mean), *variance).ok())
                .flatten();
            g.map(|prior| match (kind, &setup) {
                (ExperimentKind::HeteroMab, Some(Setup::Bandit { env: ArmEnv::Heteroskedastic(h), .. })) => {
                    CurveModel::Heteroskedastic {
                        variances: h.variances().to_vec(),
                        prior,
                    }
                }
                _ => CurveModel::Gaussian { sigma2, prior },
            })
        }
        (_, _) => {
            c.errs.push(format!("`{}` experiments need a gaussian prior", kind.name()));
            None
        }
    };

    // coverage functional
    let coverage = cfg.coverage.and_then(|f| {
        if matches!(kind, ExperimentKind::BernoulliMab | ExperimentKind::PoissonMab | ExperimentKind::Replay)
            && f == Functional::Margin
        {
            c.errs.push("margin coverage is only available for Gaussian posteriors; use `coef:<i>`".into());
            return None;
        }
        if kind == ExperimentKind::Replay {
            c.errs.push("replay logs carry no true parameter, so coverage is undefined".into());
            return None;
        }
        if dim == 0 {
            return None;
        }
        c.capture(f.weights(dim)).map(|w| (f, w))
    });

    // checkpoints
    let checkpoints = match &cfg.checkpoints {
        Some(cp) => {
            c.check(!cp.is_empty(), || "checkpoints must not be empty".into());
            c.check(cp.first().is_some_and(|&n| n > 0) && cp.windows(2).all(|w| w[0] < w[1]), || {
                "checkpoints must be positive and strictly increasing".into()
            });
            if horizon > 0 {
                if let Some(&last) = cp.last() {
                    c.check(last <= horizon, || format!("checkpoint {last} exceeds horizon {horizon}"));
                }
            }
            cp.clone()
        }
        None if kind == ExperimentKind::Batched => vec![horizon / 2, horizon],
        None => default_checkpoints(horizon),
    };

    if !c.errs.is_empty() {
        return Err(Error::Validation(c.errs));
    }
    let (Some(setup), Some(model)) = (setup, model) else {
        return Ok(None);
    };
    let tv = (cfg.tv_samples > 0).then_some(TvOptions {
        initial_samples: cfg.tv_samples,
        max_samples: cfg.tv_max_samples,
        relative_se: cfg.tv_relative_se,
    });
    Ok(Some(Plan {
        label: cfg.label(),
        kind,
        policy,
        // a log is a single realised trajectory
        replicates: if kind == ExperimentKind::Replay { 1 } else { cfg.replicates },
        seed: cfg.seed,
        horizon,
        checkpoints,
        rows_per_round,
        tv,
        level: cfg.level,
        coverage,
        model,
        truth,
        setup,
    }))
}

/// Validate `cfg` without running it.
pub fn validate(cfg: &ExperimentConfig) -> Result<()> {
    build_plan(cfg, None).map(|_| ())
}
