//! Replicate scheduling and result assembly.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use super::config::ExperimentConfig;
use super::plan::{build_plan, BanditPolicy, Plan, Setup, NCEC_ESTIMATE_RIDGE};
use super::simulate::simulate;
use super::summary::{summarize_rows, write_results_csv, write_summary_csv, ResultRow, SummaryRow};
use crate::error::{Error, Result};
use crate::metrics::{
    checkpoint_tv, mle_normality_probe, posterior_marginal, representative_available, studentized_mle,
    CoverageRecord, CurveModel, NormalityProbe, StabilityDiagnostics, MIN_PROBE_REPLICATES,
};
use crate::policy::ReplayLog;
use crate::rng::RandomSource;
use crate::trajectory::{GramAccumulator, Trajectory};

// Keeps Monte-Carlo TV draws apart from the data-generating stream.
const TV_STREAM_SALT: u64 = 0x5456_4d43;

/// Everything one replicate contributes to the output.
#[derive(Debug, Clone)]
pub struct ReplicateOutcome {
    pub replicate: usize,
    pub rows: Vec<ResultRow>,
    pub riccati_failures: u64,
    /// `√(Σx²)(β̂ − β₀)/σ` at the final checkpoint (one-dimensional models).
    pub studentized: Option<f64>,
    pub allocation_prob: Option<f64>,
    /// Set when the replicate failed as a whole; all its rows are excluded.
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub tool: String,
    pub version: String,
    pub label: String,
    pub kind: String,
    pub policy: String,
    pub seed: u64,
    pub replicates: usize,
    pub horizon: usize,
    pub checkpoints: Vec<usize>,
    pub rows: usize,
    pub excluded_rows: usize,
    pub failed_replicates: usize,
    /// Included rows whose TV standard error stayed above the relative gate.
    pub gate_failures: usize,
    pub riccati_failures: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_allocation_prob: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normality: Option<NormalityProbe>,
    pub policy_details: BTreeMap<String, String>,
    pub config: ExperimentConfig,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub plan: Plan,
    pub outcomes: Vec<ReplicateOutcome>,
    pub rows: Vec<ResultRow>,
    pub summary: Vec<SummaryRow>,
    pub metadata: Metadata,
}

/// Where the three output files of a run were written.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputPaths {
    pub results: PathBuf,
    pub summary: PathBuf,
    pub metadata: PathBuf,
}

impl OutputPaths {
    /// `x.csv` gives `x.csv`, `x.summary.csv` and `x.meta.toml`.
    pub fn for_results(results: impl Into<PathBuf>) -> Self {
        let results = results.into();
        Self {
            summary: results.with_extension("summary.csv"),
            metadata: results.with_extension("meta.toml"),
            results,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses the available parallelism.
    pub workers: Option<usize>,
    /// Result CSV path, overriding the config's `output`.
    pub out: Option<PathBuf>,
}

fn evaluate(plan: &Plan, traj: &Trajectory, tv_rng: &RandomSource) -> Result<Vec<ResultRow>> {
    let mut acc = GramAccumulator::new(traj.dim());
    let mut done = 0;
    let mut rows = Vec::with_capacity(plan.checkpoints.len());
    for &n in &plan.checkpoints {
        let upto = (n * plan.rows_per_round).min(traj.len());
        for (x, y) in &traj.steps()[done..upto] {
            acc.update(x, *y)?;
        }
        done = upto;
        let stab = StabilityDiagnostics::from_matrix(acc.gram());
        let (tv, tv_se, excluded, gate_met) = match &plan.tv {
            Some(opts) => {
                let t = checkpoint_tv(&plan.model, &acc, opts, &mut tv_rng.substream(n as u64))?;
                (t.value, t.std_error, t.excluded, t.gate_met)
            }
            None => {
                let ok = representative_available(&plan.model, &acc)?;
                (f64::NAN, f64::NAN, !ok, true)
            }
        };
        let covered = match (&plan.coverage, excluded) {
            (Some((_, w)), false) => {
                let marginal = posterior_marginal(&plan.model, &acc, w)?;
                let target: f64 = w.iter().zip(&plan.truth).map(|(a, b)| a * b).sum();
                Some(CoverageRecord::from_marginal(&marginal, target, plan.level)?.covered)
            }
            _ => None,
        };
        rows.push(ResultRow {
            replicate: 0,
            n,
            tv,
            tv_se,
            lambda_min: stab.lambda_min,
            lambda_max: stab.lambda_max,
            covered,
            excluded,
            gate_met,
        });
    }
    Ok(rows)
}

fn studentized_final(plan: &Plan, traj: &Trajectory) -> Option<f64> {
    let CurveModel::Gaussian { sigma2, .. } = &plan.model else {
        return None;
    };
    if traj.dim() != 1 || !plan.truth[0].is_finite() {
        return None;
    }
    let last = *plan.checkpoints.last()? * plan.rows_per_round;
    let (sxx, sxy) = traj.steps()[..last.min(traj.len())]
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + x.values()[0].powi(2), b + x.values()[0] * y));
    (sxx > 0.0).then(|| studentized_mle(sxx, sxy / sxx, plan.truth[0], sigma2.sqrt()))
}

/// Simulate and score replicate `replicate`. Failures never propagate; they
/// turn every row of the replicate into an excluded row.
pub fn run_replicate(plan: &Plan, replicate: usize) -> ReplicateOutcome {
    let mut rng = RandomSource::for_replicate(plan.seed, replicate as u64);
    let tv_rng = rng.substream(TV_STREAM_SALT);
    let result = simulate(plan, &mut rng).and_then(|sim| {
        let rows = evaluate(plan, &sim.trajectory, &tv_rng)?;
        Ok((sim, rows))
    });
    match result {
        Ok((sim, mut rows)) => {
            for r in &mut rows {
                r.replicate = replicate;
            }
            ReplicateOutcome {
                replicate,
                rows,
                riccati_failures: sim.riccati_failures,
                studentized: studentized_final(plan, &sim.trajectory),
                allocation_prob: sim.allocation_prob,
                failure: None,
            }
        }
        Err(e) => ReplicateOutcome {
            replicate,
            rows: plan
                .checkpoints
                .iter()
                .map(|&n| ResultRow::failed(replicate, n))
                .collect(),
            riccati_failures: 0,
            studentized: None,
            allocation_prob: None,
            failure: Some(e.to_string()),
        },
    }
}

fn fmt_list(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(f64::to_string).collect();
    format!("[{}]", parts.join(", "))
}

fn policy_details(plan: &Plan) -> BTreeMap<String, String> {
    let mut d = BTreeMap::new();
    let mut put = |k: &str, v: String| {
        d.insert(k.to_string(), v);
    };
    match &plan.setup {
        Setup::Bandit { policy, .. } => match policy {
            BanditPolicy::Ucb { c, sigmas } => {
                put("bonus", "c * sigma_i * sqrt(2 ln n / N_i), unpulled arms first".into());
                put("c", c.to_string());
                put("sigmas", fmt_list(sigmas));
            }
            BanditPolicy::ThompsonGaussian { prior, .. } => {
                put("policy_prior", format!("N({}, {})", prior.0, prior.1));
            }
            BanditPolicy::ThompsonBernoulli => put("policy_prior", "Beta(1, 1)".into()),
            BanditPolicy::Uniform => put("allocation", "round robin".into()),
        },
        Setup::Contextual { lin_ucb, embedding, .. } => match lin_ucb {
            Some((alpha, ridge)) => {
                put("alpha", alpha.to_string());
                put("ridge", ridge.to_string());
                put("warmup_rounds", (embedding.num_arms() * embedding.context_dim()).to_string());
            }
            None => put("allocation", "round robin".into()),
        },
        Setup::Lqr { ncec, .. } => {
            put("tau2", ncec.tau2.to_string());
            put("beta_exp", ncec.beta_exp.to_string());
            put("alpha_exp", ncec.alpha_exp.to_string());
            put("warmup", ncec.warmup.to_string());
            put("noise_variance", "tau2 * n^(beta_exp - 1) * ln(n + 1)^alpha_exp".into());
            put("riccati_tol", ncec.riccati_tol.to_string());
            put("riccati_max_iter", ncec.riccati_max_iter.to_string());
            put("estimate_ridge", NCEC_ESTIMATE_RIDGE.to_string());
        }
        Setup::Batched {
            batch_size,
            pi_min,
            policy_prior,
            ..
        } => {
            put("batch_size", batch_size.to_string());
            put("pi_min", pi_min.to_string());
            put("policy_prior", format!("N({}, {})", policy_prior.0, policy_prior.1));
            put("batch1", "alternating, half per arm".into());
            put("batch2", "each pull independently to arm 1 with clipped probability".into());
        }
        Setup::LaiWei { x1, .. } => put("x1", x1.to_string()),
        Setup::Replay { log } => put("log_rows", log.len().to_string()),
    }
    d
}

fn assemble(cfg: &ExperimentConfig, plan: Plan, outcomes: Vec<ReplicateOutcome>) -> Result<ExperimentResult> {
    let rows: Vec<ResultRow> = outcomes.iter().flat_map(|o| o.rows.iter().copied()).collect();
    let summary = summarize_rows(&rows, &plan.checkpoints, true);
    let studentized: Vec<f64> = outcomes.iter().filter_map(|o| o.studentized).collect();
    let normality = (plan.kind == super::config::ExperimentKind::LaiWei && studentized.len() >= MIN_PROBE_REPLICATES)
        .then(|| mle_normality_probe(&studentized))
        .transpose()?;
    let allocs: Vec<f64> = outcomes.iter().filter_map(|o| o.allocation_prob).collect();
    let metadata = Metadata {
        tool: "bvm".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        label: plan.label.clone(),
        kind: plan.kind.name().into(),
        policy: plan.policy.name().into(),
        seed: plan.seed,
        replicates: plan.replicates,
        horizon: plan.horizon,
        checkpoints: plan.checkpoints.clone(),
        rows: rows.len(),
        excluded_rows: rows.iter().filter(|r| r.excluded).count(),
        failed_replicates: outcomes.iter().filter(|o| o.failure.is_some()).count(),
        gate_failures: summary.iter().map(|s| s.gate_failures).sum(),
        riccati_failures: outcomes.iter().map(|o| o.riccati_failures).sum(),
        mean_allocation_prob: (!allocs.is_empty()).then(|| allocs.iter().sum::<f64>() / allocs.len() as f64),
        normality,
        policy_details: policy_details(&plan),
        config: cfg.clone(),
    };
    Ok(ExperimentResult {
        plan,
        outcomes,
        rows,
        summary,
        metadata,
    })
}

fn execute_plan(cfg: &ExperimentConfig, plan: Plan, workers: Option<usize>) -> Result<ExperimentResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let outcomes: Vec<ReplicateOutcome> = pool.install(|| {
        (0..plan.replicates)
            .into_par_iter()
            .map(|r| run_replicate(&plan, r))
            .collect()
    });
    assemble(cfg, plan, outcomes)
}

/// Run every replicate of `cfg` in memory.
pub fn execute(cfg: &ExperimentConfig, workers: Option<usize>) -> Result<ExperimentResult> {
    let plan = build_plan(cfg, None)?
        .ok_or_else(|| Error::Config("replay experiments need a log; use the replay entry point".into()))?;
    execute_plan(cfg, plan, workers)
}

/// Replay `log` through the Bernoulli inference path of `cfg`.
pub fn execute_replay(cfg: &ExperimentConfig, log: &ReplayLog, workers: Option<usize>) -> Result<ExperimentResult> {
    if cfg.kind != super::config::ExperimentKind::Replay {
        return Err(Error::Validation(vec![format!(
            "replay needs a config of kind `replay`, got `{}`",
            cfg.kind.name()
        )]));
    }
    let plan = build_plan(cfg, Some(log))?.ok_or_else(|| Error::Config("incomplete replay plan".into()))?;
    execute_plan(cfg, plan, workers)
}

impl ExperimentResult {
    pub fn write(&self, paths: &OutputPaths) -> Result<()> {
        for p in [&paths.results, &paths.summary, &paths.metadata] {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
        }
        write_results_csv(&self.rows, std::fs::File::create(&paths.results)?)?;
        write_summary_csv(&self.summary, std::fs::File::create(&paths.summary)?)?;
        std::fs::write(&paths.metadata, toml::to_string(&self.metadata)?)?;
        Ok(())
    }
}

fn output_paths(cfg: &ExperimentConfig, opts: &RunOptions) -> OutputPaths {
    let results = opts
        .out
        .clone()
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| Path::new("results").join(format!("{}.csv", cfg.label())));
    OutputPaths::for_results(results)
}

/// Run `cfg` and write its result table, summary and metadata.
pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<OutputPaths> {
    let result = execute(cfg, opts.workers)?;
    let paths = output_paths(cfg, opts);
    result.write(&paths)?;
    Ok(paths)
}

/// Replay the log at `log_path` under `cfg` and write the usual outputs.
pub fn run_replay(log_path: impl AsRef<Path>, cfg: &ExperimentConfig, opts: &RunOptions) -> Result<OutputPaths> {
    let log = ReplayLog::read(log_path).map_err(|e| match e {
        Error::Data(m) => Error::Validation(vec![m]),
        Error::Parse { line, message } => Error::Validation(vec![format!("line {line}: {message}")]),
        other => other,
    })?;
    let result = execute_replay(cfg, &log, opts.workers)?;
    let paths = output_paths(cfg, opts);
    result.write(&paths)?;
    Ok(paths)
}
