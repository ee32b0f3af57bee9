//! Run directory: data files plus the provenance record.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{ExperimentConfig, Format};
use crate::error::CliResult;

pub const VERSION: &str = env!("WQED_VERSION");

pub struct RunDir {
    root: PathBuf,
    formats: Vec<Format>,
    files: Vec<String>,
    warnings: Vec<String>,
}

impl RunDir {
    pub fn create(root: impl Into<PathBuf>, formats: &[Format]) -> CliResult<Self> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(Self { root, formats: formats.to_vec(), files: Vec::new(), warnings: Vec::new() })
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }

    /// Write `name` through `body` if CSV output is enabled.
    pub fn csv(&mut self, name: &str, body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> CliResult<()> {
        if self.wants(Format::Csv) {
            self.raw(name, body)?;
        }
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        if self.wants(Format::Json) {
            self.raw(name, |w| {
                serde_json::to_writer_pretty(&mut *w, value)?;
                writeln!(w)
            })?;
        }
        Ok(())
    }

    fn raw(&mut self, name: &str, body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> CliResult<()> {
        let mut w = BufWriter::new(File::create(self.root.join(name))?);
        body(&mut w)?;
        w.flush()?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn warn(&mut self, msg: impl Into<String>) {
        self.warnings.push(msg.into());
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// config.toml (resolved) and run.json, always written.
    pub fn finish(mut self, cfg: &ExperimentConfig, runtime_s: f64, threads: usize) -> CliResult<Vec<String>> {
        let echo = toml::to_string_pretty(cfg).map_err(|e| std::io::Error::other(e.to_string()))?;
        fs::write(self.root.join("config.toml"), echo)?;
        self.files.push("config.toml".into());
        let record = RunRecord {
            experiment: cfg.experiment.map(|e| e.to_string()).unwrap_or_default(),
            backend: cfg.solver.backend.map(|b| b.to_string()).unwrap_or_default(),
            seed: cfg.solver.seed,
            version: VERSION,
            runtime_s,
            threads,
            files: &self.files,
            warnings: &self.warnings,
        };
        let mut w = BufWriter::new(File::create(self.root.join("run.json"))?);
        serde_json::to_writer_pretty(&mut w, &record).map_err(std::io::Error::from)?;
        writeln!(w)?;
        w.flush()?;
        self.files.push("run.json".into());
        Ok(self.files)
    }
}

#[derive(Serialize)]
struct RunRecord<'a> {
    experiment: String,
    backend: String,
    seed: u64,
    version: &'a str,
    runtime_s: f64,
    threads: usize,
    files: &'a [String],
    warnings: &'a [String],
}
