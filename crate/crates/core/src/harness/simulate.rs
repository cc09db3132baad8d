//! Data generation for one replicate.

use nalgebra::DVector;

use super::plan::{ArmEnv, BanditPolicy, Plan, Setup, NCEC_ESTIMATE_RIDGE};
use crate::error::Result;
use crate::policy::{
    batched_thompson_plan, lai_wei_select, replay_select, thompson_beta_select, thompson_gaussian_select, ucb_select_scaled,
    uniform_select, ArmCounts, DynamicsEstimator, LinUcb, Ncec,
};
use crate::rng::RandomSource;
use crate::trajectory::{Covariate, Trajectory};

/// A simulated history plus policy-side bookkeeping.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub trajectory: Trajectory,
    pub riccati_failures: u64,
    /// Clipped batch-2 allocation probability of arm 1 (batched designs).
    pub allocation_prob: Option<f64>,
}

impl Simulation {
    fn plain(trajectory: Trajectory) -> Self {
        Self {
            trajectory,
            riccati_failures: 0,
            allocation_prob: None,
        }
    }
}

fn arm_reward(env: &ArmEnv, arm: usize, rng: &mut RandomSource) -> Result<f64> {
    match env {
        ArmEnv::Gaussian(g) => g.sample_outcome(&Covariate::basis(g.dim(), arm), rng),
        ArmEnv::ExpFamily(e) => e.sample_reward(arm, rng),
        ArmEnv::Heteroskedastic(h) => h.sample_reward(arm, rng),
    }
}

fn num_arms(env: &ArmEnv) -> usize {
    match env {
        ArmEnv::Gaussian(g) => g.dim(),
        ArmEnv::ExpFamily(e) => e.num_arms(),
        ArmEnv::Heteroskedastic(h) => h.num_arms(),
    }
}

fn simulate_bandit(env: &ArmEnv, policy: &BanditPolicy, horizon: usize, rng: &mut RandomSource) -> Result<Trajectory> {
    let m = num_arms(env);
    let mut traj = Trajectory::new(m);
    let mut counts = ArmCounts::new(m);
    for step in 1..=horizon as u64 {
        let arm = match policy {
            BanditPolicy::Ucb { c, sigmas } => ucb_select_scaled(&counts, step, sigmas, *c),
            BanditPolicy::ThompsonGaussian { prior: (m0, v0), variances } => {
                let posts: Vec<(f64, f64)> = (0..m)
                    .map(|i| {
                        let prec = 1.0 / v0 + counts.count(i) as f64 / variances[i];
                        let v = 1.0 / prec;
                        (v * (m0 / v0 + counts.sum(i) / variances[i]), v)
                    })
                    .collect();
                thompson_gaussian_select(&posts, rng)
            }
            BanditPolicy::ThompsonBernoulli => {
                let posts: Vec<(f64, f64)> = (0..m)
                    .map(|i| {
                        let (n, s) = (counts.count(i) as f64, counts.sum(i));
                        (1.0 + s, 1.0 + n - s)
                    })
                    .collect();
                thompson_beta_select(&posts, rng)
            }
            BanditPolicy::Uniform => uniform_select(step, m),
        };
        let y = arm_reward(env, arm, rng)?;
        counts.record(arm, y);
        traj.push(Covariate::basis(m, arm), y)?;
    }
    Ok(traj)
}

/// Generate one replicate's trajectory under `plan`.
pub fn simulate(plan: &Plan, rng: &mut RandomSource) -> Result<Simulation> {
    let horizon = plan.horizon;
    match &plan.setup {
        Setup::Bandit { env, policy } => simulate_bandit(env, policy, horizon, rng).map(Simulation::plain),
        Setup::Contextual { embedding, env, lin_ucb } => {
            let m = embedding.num_arms();
            let mut traj = Trajectory::new(embedding.covariate_dim());
            let mut learner = match lin_ucb {
                Some((alpha, ridge)) => Some(LinUcb::new(m, embedding.context_dim(), *alpha, *ridge)?),
                None => None,
            };
            for step in 1..=horizon as u64 {
                let ctx = embedding.sample_context(rng);
                let arm = match &learner {
                    Some(l) => l.select(step, &ctx)?,
                    None => uniform_select(step, m),
                };
                let x = embedding.embed_context(&ctx, arm)?;
                let y = env.sample_outcome(&x, rng)?;
                if let Some(l) = learner.as_mut() {
                    l.update(arm, &ctx, y);
                }
                traj.push(x, y)?;
            }
            Ok(Simulation::plain(traj))
        }
        Setup::Lqr { env, ncec } => {
            let (k, d) = (env.state_dim(), env.action_dim());
            let mut traj = Trajectory::new(env.covariate_dim());
            let mut controller = Ncec::new(*ncec, d)?;
            let mut estimator = DynamicsEstimator::new(k, d);
            let mut state = DVector::zeros(k);
            for step in 1..=horizon as u64 {
                let estimate = if step > ncec.warmup {
                    Some(estimator.estimate(NCEC_ESTIMATE_RIDGE)?)
                } else {
                    None
                };
                let action = controller.select(estimate.as_ref().map(|(a, b)| (a, b)), &state, step, rng);
                let out = env.lqr_transition(&state, &action, rng)?;
                estimator.update(&state, &action, &out.next_state);
                for (x, y) in out.rows {
                    traj.push(x, y)?;
                }
                state = out.next_state;
            }
            Ok(Simulation {
                trajectory: traj,
                riccati_failures: controller.riccati_failures(),
                allocation_prob: None,
            })
        }
        Setup::Batched {
            env,
            batch_size,
            pi_min,
            policy_prior,
        } => {
            let mut traj = Trajectory::new(2);
            let mut counts = ArmCounts::new(2);
            for i in 0..*batch_size {
                let arm = i % 2;
                let y = env.sample_outcome(&Covariate::basis(2, arm), rng)?;
                counts.record(arm, y);
                traj.push(Covariate::basis(2, arm), y)?;
            }
            let plan2 = batched_thompson_plan(&counts, &[*policy_prior; 2], env.sigma2(), *batch_size, *pi_min, rng)?;
            for &arm in &plan2.arms {
                let y = env.sample_outcome(&Covariate::basis(2, arm), rng)?;
                traj.push(Covariate::basis(2, arm), y)?;
            }
            Ok(Simulation {
                trajectory: traj,
                riccati_failures: 0,
                allocation_prob: Some(plan2.allocation_prob),
            })
        }
        Setup::LaiWei { env, x1 } => {
            let mut traj = Trajectory::new(1);
            for _ in 0..horizon {
                let x = lai_wei_select(&traj, *x1)?;
                let y = env.sample_outcome(&x, rng)?;
                traj.push(x, y)?;
            }
            Ok(Simulation::plain(traj))
        }
        Setup::Replay { log } => {
            let m = log.num_arms();
            let mut traj = Trajectory::new(m);
            for cursor in 0..horizon {
                let (arm, reward) = replay_select(log, cursor)?;
                traj.push(Covariate::basis(m, arm), reward)?;
            }
            Ok(Simulation::plain(traj))
        }
    }
}
