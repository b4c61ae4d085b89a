//! File formats, configuration, parallel experiment runner and reports for
//! `rfsel-core`.
//!
//! The `rfsel` binary wraps these: `run` executes a configured bootstrap
//! experiment and writes its reports, `gen` writes a synthetic dataset as
//! CSV, and `report` prints the tables of a finished run.

pub mod config;
pub mod data;
pub mod error;
pub mod report;
pub mod runner;

pub use config::{DatasetSource, MethodSpec, RunConfig};
pub use data::{read_csv, write_csv, CsvOptions, LabelColumn};
pub use error::CliError;
pub use report::{write_reports, Manifest, RunReports};
pub use runner::{run_experiment, ExperimentResult, MethodResult};
