//! Experiment configuration: a TOML tree, strictly checked.
//!
//! Units: Gamma = 1, so times are in 1/Gamma and rates in Gamma.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};
use wqed_core::exec::Execution;
use wqed_core::model::Frame;
use wqed_core::quantum::JumpMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Emission,
    Scattering,
    SteadySweep,
    Convergence,
    Purcell,
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Experiment::Emission => "emission",
            Experiment::Scattering => "scattering",
            Experiment::SteadySweep => "steady_sweep",
            Experiment::Convergence => "convergence",
            Experiment::Purcell => "purcell",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Dde,
    Me,
    Mcwf,
    Chain,
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Backend::Dde => "dde",
            Backend::Me => "me",
            Backend::Mcwf => "mcwf",
            Backend::Chain => "chain",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalConfig {
    /// Delay in units of 1/Gamma.
    pub gamma_tau: f64,
    pub phi: f64,
    /// L / x0 before snapping to a half-wavelength multiple.
    #[serde(default = "default_ratio")]
    pub ratio: f64,
    /// omega0 tau = phi + 2 pi winding.
    #[serde(default = "default_winding")]
    pub winding: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(rename = "N_A", default = "default_n_a")]
    pub n_a: Vec<usize>,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    /// Optional cap on total quanta (atom + photons); steady_sweep only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub excitation_cap: Option<usize>,
    #[serde(default)]
    pub frame: Frame,
    #[serde(default)]
    pub jump_mode: JumpMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseConfig {
    #[serde(rename = "W")]
    pub w: f64,
    pub n_ph: f64,
    /// Defaults to 5 / W.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t0: Option<f64>,
    #[serde(default)]
    pub delta_in: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveConfig {
    #[serde(rename = "Omega_D", default)]
    pub omega_d: Vec<f64>,
    #[serde(default)]
    pub kappa: f64,
    #[serde(default)]
    pub kappa_phi: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pulse: Option<PulseConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backend: Option<Backend>,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(default = "default_n_traj")]
    pub n_traj: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_rtol")]
    pub rtol: f64,
    #[serde(default = "default_atol")]
    pub atol: f64,
    #[serde(default = "default_sites")]
    pub sites_per_delay: usize,
    /// Scattering runs abort (exit 4) when the top Fock population exceeds this.
    #[serde(default = "default_leakage_abort")]
    pub leakage_abort: f64,
    #[serde(default)]
    pub execution: Execution,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            backend: None,
            dt: default_dt(),
            t_max: None,
            n_traj: default_n_traj(),
            seed: 0,
            rtol: default_rtol(),
            atol: default_atol(),
            sites_per_delay: default_sites(),
            leakage_abort: default_leakage_abort(),
            execution: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Phases for the purcell experiment.
    #[serde(default = "default_purcell_phi")]
    pub phi: Vec<f64>,
    /// Points per axis of the (Omega_D, kappa, kappa_phi) grid for the
    /// Markovian steady-state region.
    #[serde(default = "default_ellipse_points")]
    pub ellipse_points: usize,
    #[serde(default = "default_ellipse_min")]
    pub ellipse_min: f64,
    #[serde(default = "default_ellipse_max")]
    pub ellipse_max: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            phi: default_purcell_phi(),
            ellipse_points: default_ellipse_points(),
            ellipse_min: default_ellipse_min(),
            ellipse_max: default_ellipse_max(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: String,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: default_dir(), formats: default_formats() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<Experiment>,
    pub physical: PhysicalConfig,
    #[serde(default = "ModelConfig::default")]
    pub model: ModelConfig,
    #[serde(default)]
    pub drive: DriveConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { n_a: default_n_a(), n_max: default_n_max(), excitation_cap: None, frame: Frame::default(), jump_mode: JumpMode::default() }
    }
}

fn default_ratio() -> f64 {
    2.0
}
fn default_winding() -> u32 {
    100
}
fn default_n_a() -> Vec<usize> {
    vec![0]
}
fn default_n_max() -> usize {
    1
}
fn default_dt() -> f64 {
    0.01
}
fn default_n_traj() -> usize {
    1000
}
fn default_rtol() -> f64 {
    1e-8
}
fn default_atol() -> f64 {
    1e-10
}
fn default_sites() -> usize {
    40
}
fn default_leakage_abort() -> f64 {
    0.05
}
fn default_purcell_phi() -> Vec<f64> {
    vec![0.5 * PI, PI, 1.5 * PI]
}
fn default_ellipse_points() -> usize {
    20
}
fn default_ellipse_min() -> f64 {
    0.01
}
fn default_ellipse_max() -> f64 {
    100.0
}
fn default_dir() -> String {
    "runs".into()
}
fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json]
}

/// A config problem, located by its path in the tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() || self.path == "." {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

fn err(path: &str, message: impl Into<String>) -> ConfigError {
    ConfigError { path: path.into(), message: message.into() }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let de = toml::Deserializer::parse(text).map_err(|e| err("", e.to_string().trim_end().to_string()))?;
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            err(&path, e.into_inner().message().trim_end().to_string())
        })
    }

    pub fn tau(&self) -> f64 {
        self.physical.gamma_tau
    }

    /// Default run window per experiment.
    pub fn t_max(&self, experiment: Experiment) -> f64 {
        self.solver.t_max.unwrap_or(match experiment {
            Experiment::Emission | Experiment::Convergence => 6.0,
            Experiment::Scattering => {
                let t0 = self.drive.pulse.as_ref().map_or(2.0, |p| p.t0.unwrap_or(5.0 / p.w));
                t0 + 3.0 * self.tau() + 4.0
            }
            Experiment::Purcell | Experiment::SteadySweep => 0.0,
        })
    }

    pub fn backend(&self, experiment: Experiment) -> Backend {
        self.solver.backend.unwrap_or(match experiment {
            Experiment::Scattering => Backend::Mcwf,
            Experiment::Emission | Experiment::SteadySweep | Experiment::Convergence | Experiment::Purcell => Backend::Me,
        })
    }

    /// Fill every optional value so the echo records what actually ran.
    pub fn resolve(&mut self, experiment: Experiment) {
        self.experiment = Some(experiment);
        self.solver.backend = Some(self.backend(experiment));
        if !matches!(experiment, Experiment::Purcell | Experiment::SteadySweep) {
            self.solver.t_max = Some(self.t_max(experiment));
        }
        if let Some(p) = &mut self.drive.pulse {
            p.t0.get_or_insert(5.0 / p.w);
        }
    }

    pub fn validate(&self, experiment: Experiment) -> Result<(), ConfigError> {
        if let Some(e) = self.experiment {
            if e != experiment {
                return Err(err("experiment", format!("config is for `{e}` but `{experiment}` was requested")));
            }
        }
        let positive = |path: &str, x: f64| {
            if x.is_finite() && x > 0.0 {
                Ok(())
            } else {
                Err(err(path, format!("must be a positive number, got {x}")))
            }
        };
        let non_negative = |path: &str, x: f64| {
            if x.is_finite() && x >= 0.0 {
                Ok(())
            } else {
                Err(err(path, format!("must be >= 0, got {x}")))
            }
        };
        positive("physical.gamma_tau", self.physical.gamma_tau)?;
        if !self.physical.phi.is_finite() {
            return Err(err("physical.phi", "must be finite"));
        }
        if !(self.physical.ratio.is_finite() && self.physical.ratio >= 1.0) {
            return Err(err("physical.ratio", format!("must be >= 1, got {}", self.physical.ratio)));
        }
        if self.model.n_a.is_empty() {
            return Err(err("model.N_A", "needs at least one truncation order"));
        }
        if self.model.n_max == 0 {
            return Err(err("model.n_max", "must be >= 1"));
        }
        if let Some(c) = self.model.excitation_cap {
            if c == 0 {
                return Err(err("model.excitation_cap", "must be >= 1"));
            }
            if experiment != Experiment::SteadySweep {
                return Err(err("model.excitation_cap", format!("only steady_sweep takes an excitation cap, not {experiment}")));
            }
        }
        positive("solver.dt", self.solver.dt)?;
        if let Some(t) = self.solver.t_max {
            positive("solver.t_max", t)?;
        }
        positive("solver.rtol", self.solver.rtol)?;
        positive("solver.atol", self.solver.atol)?;
        positive("solver.leakage_abort", self.solver.leakage_abort)?;
        non_negative("drive.kappa", self.drive.kappa)?;
        non_negative("drive.kappa_phi", self.drive.kappa_phi)?;
        for (i, o) in self.drive.omega_d.iter().enumerate() {
            if !o.is_finite() {
                return Err(err(&format!("drive.Omega_D[{i}]"), "must be finite"));
            }
        }
        if let Some(p) = &self.drive.pulse {
            positive("drive.pulse.W", p.w)?;
            non_negative("drive.pulse.n_ph", p.n_ph)?;
            if !p.delta_in.is_finite() || !p.t0.is_none_or(f64::is_finite) {
                return Err(err("drive.pulse", "t0 and delta_in must be finite"));
            }
        }
        if self.output.formats.is_empty() {
            return Err(err("output.formats", "needs at least one format"));
        }

        let backend = self.backend(experiment);
        let allowed: &[Backend] = match experiment {
            Experiment::Emission => &[Backend::Dde, Backend::Me, Backend::Mcwf, Backend::Chain],
            Experiment::Scattering => &[Backend::Me, Backend::Mcwf],
            Experiment::SteadySweep | Experiment::Convergence => &[Backend::Me],
            Experiment::Purcell => &[Backend::Dde, Backend::Me],
        };
        if !allowed.contains(&backend) {
            let names: Vec<String> = allowed.iter().map(ToString::to_string).collect();
            return Err(err("solver.backend", format!("`{backend}` cannot run {experiment}; use one of {}", names.join(", "))));
        }
        if backend == Backend::Mcwf && self.solver.n_traj == 0 {
            return Err(err("solver.n_traj", "must be >= 1"));
        }
        if backend == Backend::Chain && self.solver.sites_per_delay == 0 {
            return Err(err("solver.sites_per_delay", "must be >= 1"));
        }
        if matches!(experiment, Experiment::Emission | Experiment::Convergence | Experiment::Purcell) {
            let steps = self.tau() / self.solver.dt;
            if (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) || steps.round() < 3.0 {
                return Err(err("solver.dt", format!("must divide tau = {} into at least 3 equal steps", self.tau())));
            }
        }
        match experiment {
            Experiment::Scattering if self.drive.pulse.is_none() => {
                return Err(err("drive.pulse", "scattering needs a pulse (W, n_ph)"));
            }
            Experiment::SteadySweep => {
                if self.drive.omega_d.is_empty() {
                    return Err(err("drive.Omega_D", "steady_sweep needs at least one Rabi frequency"));
                }
                if self.sweep.ellipse_points == 0 {
                    return Err(err("sweep.ellipse_points", "must be >= 1"));
                }
                positive("sweep.ellipse_min", self.sweep.ellipse_min)?;
                if !(self.sweep.ellipse_max >= self.sweep.ellipse_min) {
                    return Err(err("sweep.ellipse_max", "must be >= sweep.ellipse_min"));
                }
            }
            Experiment::Purcell if self.sweep.phi.is_empty() => {
                return Err(err("sweep.phi", "purcell needs at least one phase"));
            }
            _ => {}
        }
        Ok(())
    }
}
