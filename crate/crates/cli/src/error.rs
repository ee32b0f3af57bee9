use std::io;

use thiserror::Error;

use crate::config::ConfigError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("numerical failure: {0}")]
    Numerical(wqed_core::Error),
    #[error("truncation abort: {0}")]
    Truncation(String),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) | CliError::Io(_) => 3,
            CliError::Truncation(_) => 4,
        }
    }
}

impl From<wqed_core::Error> for CliError {
    fn from(e: wqed_core::Error) -> Self {
        use wqed_core::Error as E;
        match e {
            // parameter sets the core rejects before doing any numerics
            E::InvalidParameter { .. }
            | E::InfeasibleGeometry { .. }
            | E::Geometry { .. }
            | E::ResonanceCondition { .. }
            | E::Grid { .. }
            | E::Resolution { .. }
            | E::Calibration(_) => CliError::Config(ConfigError { path: String::new(), message: e.to_string() }),
            E::SectorTooLarge { .. } => CliError::Truncation(e.to_string()),
            other => CliError::Numerical(other),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
