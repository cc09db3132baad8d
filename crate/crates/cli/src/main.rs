use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use bvm_core::harness::{
    run_experiment, run_replay, summarize, validate, write_comparison_csv, ExperimentConfig, RunOptions,
};
use clap::{Args, Parser, Subcommand};

/// Simulate adaptive experiments and measure how far posteriors are from
/// their representative normals.
#[derive(Parser)]
#[command(name = "bvm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Overrides {
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    workers: Option<usize>,
    /// Result CSV path; summary and metadata files are written beside it.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Initial Monte-Carlo draws per TV estimate (0 skips TV).
    #[arg(long)]
    tv_samples: Option<usize>,
    /// Number of replicates.
    #[arg(long)]
    replicates: Option<usize>,
}

impl Overrides {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(t) = self.tv_samples {
            cfg.tv_samples = t;
        }
        if let Some(r) = self.replicates {
            cfg.replicates = r;
        }
    }

    fn run_options(&self) -> RunOptions {
        RunOptions {
            workers: self.workers,
            out: self.out.clone(),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config.
    Run {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Replay a `step,arm,reward` log through the Bernoulli inference path.
    Replay {
        log: PathBuf,
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Merge result tables into one long-format comparison table.
    Summarize {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Output CSV (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a config and report every violation.
    Validate { config: PathBuf },
}

fn load(path: &PathBuf) -> Result<ExperimentConfig> {
    ExperimentConfig::load(path).with_context(|| format!("reading config {}", path.display()))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, overrides } => {
            let mut cfg = load(&config)?;
            overrides.apply(&mut cfg);
            let paths = run_experiment(&cfg, &overrides.run_options())?;
            println!("{}", paths.results.display());
        }
        Command::Replay {
            log,
            config,
            overrides,
        } => {
            let mut cfg = load(&config)?;
            overrides.apply(&mut cfg);
            let paths = run_replay(&log, &cfg, &overrides.run_options())?;
            println!("{}", paths.results.display());
        }
        Command::Summarize { files, out } => {
            let rows = summarize(&files)?;
            match out {
                Some(p) => write_comparison_csv(&rows, std::fs::File::create(&p)?)?,
                None => write_comparison_csv(&rows, std::io::stdout().lock())?,
            }
        }
        Command::Validate { config } => {
            let cfg = load(&config)?;
            validate(&cfg)?;
            println!("{}: ok", config.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
