//! Coverage study driver and the command line front end.

pub mod cli;
pub mod config;
pub mod coverage;
pub mod table;

pub use config::Config;
pub use coverage::{run_coverage_experiment, CellKey, CellResult, CoverageReport, ExperimentConfig};
pub use table::{emit_table, parse_csv, Format};
