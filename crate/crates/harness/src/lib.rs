//! Monte-Carlo harness for the coexistence model: presets, the runner and
//! CSV/SVG output.

pub mod config;
pub mod error;
pub mod output;
pub mod preset;
pub mod rng;
pub mod runner;
pub mod scenario;

pub use config::{ExperimentConfig, Mechanism, Metric, Series, SweepVariable};
pub use error::{ConfigError, SimError};
pub use output::{Column, RateCurve};
pub use preset::{preset, PRESET_NAMES};
pub use runner::{run_experiment, run_experiment_with_threads, ExperimentResult};

use std::path::{Path, PathBuf};

/// Writes one CSV per metric and one SVG for the whole experiment.
pub fn write_outputs(result: &ExperimentResult, dir: &Path) -> Result<Vec<PathBuf>, SimError> {
    let mut paths = Vec::new();
    for c in &result.curves {
        paths.push(output::write_csv(c, dir)?);
    }
    paths.push(output::write_svg(&result.name, &result.curves, dir)?);
    Ok(paths)
}
