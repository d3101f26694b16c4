//! Experiment grids over `(method, ε, p)`, per-cell aggregation, log-log
//! scaling fits and CSV/JSON reports.

mod experiment;
mod fit;
mod report;

pub use experiment::{
    aggregate, default_epsilons, mlae_depth_for_epsilon, run_experiment, run_seed, splitmix64,
    AggregateRow, Experiment, ExperimentConfig, Method, RunOutcome, RunRecord, Scenario, SEED_RULE,
};
pub use fit::{fit_log10, fit_log_loglog, fit_scaling, LogLogFit, SlopeFit, YField};
pub use report::{
    build_report, config_hash, emit_report, read_report, render_csv, render_json, FitEntry, Report,
    ReportFormat, ReportMetadata, CSV_HEADER,
};
