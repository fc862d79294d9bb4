//! Batch harness around `lrip-core`: config parsing, experiment dispatch and
//! report writing. The `lrip-lab` binary is a thin wrapper over [`run`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
mod experiments;
pub mod report;

use std::path::PathBuf;
use std::time::Instant;

pub use config::{Experiment, ExperimentConfig};
pub use error::{LabError, LabResult};
pub use report::{emit_plot_data, Report, Series};

/// Runs the configured experiment on a pool of `config.workers` threads
/// (rayon's default when unset).
/// Results depend only on the config, never on the worker count.
pub fn run(config: &ExperimentConfig) -> LabResult<Report> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers.unwrap_or(0))
        .build()
        .map_err(|e| LabError::Config(format!("thread pool: {e}")))?;
    let start = Instant::now();
    let (outcome, mut seed_lineage) = pool.install(|| experiments::run_experiment(config))?;
    seed_lineage.insert("master".into(), config.master_seed);
    let mut results = outcome.results;
    if let Some(obj) = results.as_object_mut() {
        obj.insert("seed_derivation".into(), experiments::seed_derivation().into());
    }
    Ok(Report {
        version: env!("CARGO_PKG_VERSION").to_string(),
        experiment: config.experiment.name().to_string(),
        config: config.clone(),
        seed_lineage,
        results,
        series: outcome.series,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Runs and writes into `config.output.dir` when set.
pub fn run_and_write(config: &ExperimentConfig) -> LabResult<(Report, Vec<PathBuf>)> {
    let report = run(config)?;
    let written = match &config.output.dir {
        Some(dir) => report.write(dir)?,
        None => Vec::new(),
    };
    Ok((report, written))
}

/// Median with the two middle values averaged; NaN for an empty slice.
pub fn median(values: &[f64]) -> f64 {
    experiments::median(values)
}
