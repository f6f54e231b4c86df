//! Command-line plumbing: experiment configs, the forward suites,
//! calibration and the `lolab` subcommands.

mod calibrate;
mod cli;
mod config;
mod suites;

pub use calibrate::*;
pub use cli::{
    error_json, exit_code, forward_rows, rows_csv, run, Outcome, EXIT_BUDGET, EXIT_OK, EXIT_USAGE,
    EXIT_VIOLATION, THREADS_ENV,
};
pub use config::{
    Experiment, ExperimentConfig, GeneratorParams, OutputPaths, RhoInstance, VectorInstance,
    CONFIG_SCHEMA,
};
pub use suites::{
    erdos_suite, fourier_suite, oracle_suite, stanley_suite, summarize, SuiteRow, SuiteSummary,
};
