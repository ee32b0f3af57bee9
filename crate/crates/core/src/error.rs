use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("no half-wavelength multiple above x0 = {x0} is below {limit} (omega0 too small for this geometry)")]
    InfeasibleGeometry { x0: f64, limit: f64 },

    #[error("block length L = {l} must exceed the atom-mirror distance x0 = {x0}")]
    Geometry { l: f64, x0: f64 },

    #[error("block length L = {l} is not a multiple of lambda0/2 = {half} (L/(lambda0/2) = {ratio})")]
    ResonanceCondition { l: f64, half: f64, ratio: f64 },

    #[error("time step {dt} does not divide the delay {tau}")]
    Grid { dt: f64, tau: f64 },

    #[error("time step {dt} too coarse for delay {tau} (need at least {min_steps} steps per delay)")]
    Resolution { dt: f64, tau: f64, min_steps: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("frame mismatch: {0}")]
    FrameMismatch(String),

    #[error("operator is not Hermitian (max |H - H^dag| = {0:e})")]
    NonHermitian(f64),

    #[error("negative rate {0} for a dissipator")]
    NegativeRate(f64),

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("steady state is not unique (second singular value {sigma:e} vs scale {scale:e})")]
    NonUniqueSteadyState { sigma: f64, scale: f64 },

    #[error("steady-state residual {0:e} above tolerance")]
    SteadyStateResidual(f64),

    #[error("chain calibration failed: {0}")]
    Calibration(String),

    #[error("sector dimension {dim} exceeds cap {cap}")]
    SectorTooLarge { dim: usize, cap: usize },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("space has no bosonic modes, collective operator unavailable")]
    MissingCollectiveOperator,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn positive(name: &'static str, x: f64) -> Result<f64> {
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(Error::InvalidParameter { name, reason: format!("must be finite and > 0, got {x}") })
    }
}

pub(crate) fn non_negative(name: &'static str, x: f64) -> Result<f64> {
    if x.is_finite() && x >= 0.0 {
        Ok(x)
    } else {
        Err(Error::InvalidParameter { name, reason: format!("must be finite and >= 0, got {x}") })
    }
}
