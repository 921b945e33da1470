//! Batch front end for `topoecon`: scenario files, subcommands and reports.
//!
//! Every invocation yields one JSON report (`schema_version` 1) on stdout;
//! with `--out` the report and any CSV/JSONL series are also written to disk.

pub mod app;
pub mod error;
pub mod exec;
pub mod report;
pub mod scenario;

pub use app::{execute, Outcome};
pub use error::CliError;
pub use exec::run_scenario;
pub use scenario::{parse_scenario, OutputFormat, Scenario};
