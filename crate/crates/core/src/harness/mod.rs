//! Experiment orchestration: configs, replicate scheduling and result files.

mod config;
mod plan;
mod run;
mod simulate;
mod summary;

pub use config::{EnvSpec, ExperimentConfig, ExperimentKind, Functional, PolicySpec, PriorSpec};
pub use plan::{build_plan, validate, ArmEnv, BanditPolicy, Plan, Setup, NCEC_ESTIMATE_RIDGE};
pub use run::{
    execute, execute_replay, run_experiment, run_replay, run_replicate, ExperimentResult, Metadata, OutputPaths,
    ReplicateOutcome, RunOptions,
};
pub use simulate::{simulate, Simulation};
pub use summary::{
    read_results_csv, summarize, summarize_rows, summarize_tables, write_comparison_csv, write_results_csv,
    write_summary_csv, ComparisonRow, ResultRow, SummaryRow, COMPARISON_HEADER, RESULT_HEADER, SUMMARY_HEADER,
};
