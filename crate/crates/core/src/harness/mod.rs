//! Experiment configuration, replication runner and Monte Carlo checks.

mod bounds;
mod config;
mod coverage;
mod oracle;
mod output;
mod runner;

pub use config::{
    parse_sections, CbAlgorithm, EnvConfig, ExperimentConfig, ExperimentKind, MabAlgorithm, NaiveModeKind,
    PolicyConfig, PolicyKind, Section,
};
pub use output::{fmt_f64, write_aggregate_csv, write_trace_csv};
pub use runner::{aggregate, checkpoint_rounds, run_experiment, AggregateRow, ExperimentResult, RegretTrace};
pub use bounds::{bound_comparison, parse_grid, BoundMethod, BoundParams, BoundRow, BoundTable};
pub use coverage::{
    binomial_tolerance, default_cases, run_suite, CoverageCase, CoverageRow, CoverageStatus, Suite,
};
pub use oracle::{grid_size_proxy, size_proxy_check, ProxyCheck};
