//! Configuration-driven front end: builds a family from a JSON run document,
//! runs one experiment and writes a JSON report plus a CSV table.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod report;
pub mod run;

pub use config::{load_config, parse_config, ConfigError, Experiment, Overrides, RunConfig};
pub use report::{emit_report, ExperimentReport, Table};
pub use run::{run_experiment, Outcome, RunError};

/// Caps the rayon pool from `LAGCAL_THREADS` when set.
pub fn init_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("LAGCAL_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("LAGCAL_THREADS must be a positive integer, got `{raw}`"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}
