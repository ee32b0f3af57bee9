//! Experiment harness: reads a TOML config, runs one experiment, writes a
//! self-describing run directory.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::Value;

pub use config::{Backend, ConfigError, Experiment, ExperimentConfig};
pub use error::{CliError, CliResult};
use output::RunDir;

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub backend: Option<Backend>,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub dir: PathBuf,
    pub files: Vec<String>,
    pub warnings: Vec<String>,
    pub summary: Value,
}

pub fn load_config(path: &Path) -> CliResult<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError { path: String::new(), message: format!("cannot read {}: {e}", path.display()) })?;
    Ok(ExperimentConfig::from_toml(&text)?)
}

/// Validate, resolve defaults, run, and record provenance.
pub fn run_experiment(experiment: Experiment, mut cfg: ExperimentConfig, ov: &Overrides) -> CliResult<Outcome> {
    if let Some(s) = ov.seed {
        cfg.solver.seed = s;
    }
    if let Some(b) = ov.backend {
        cfg.solver.backend = Some(b);
    }
    if let Some(d) = &ov.out {
        cfg.output.dir = d.to_string_lossy().into_owned();
    }
    cfg.validate(experiment)?;
    cfg.resolve(experiment);
    let start = Instant::now();
    let mut dir = RunDir::create(&cfg.output.dir, &cfg.output.formats)?;
    let summary = experiments::run(experiment, &cfg, &mut dir)?;
    let warnings = dir.warnings().to_vec();
    let root = dir.path().to_path_buf();
    let threads = experiments::effective_threads(cfg.solver.execution);
    let files = dir.finish(&cfg, start.elapsed().as_secs_f64(), threads)?;
    Ok(Outcome { dir: root, files, warnings, summary })
}
