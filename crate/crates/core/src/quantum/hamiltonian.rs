use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{non_negative, Error, Result};
use crate::model::{EffectiveModel, Frame};
use crate::quantum::operator::QuantumOperator;
use crate::quantum::space::CompositeSpace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JumpMode {
    /// gamma D[alpha_0] on the resonant mode only.
    SingleMode,
    /// gamma D[A] with A the sum of all retained modes.
    #[default]
    Collective,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveDissipationSpec {
    #[serde(rename = "Omega_D")]
    pub omega_d: f64,
    pub kappa: f64,
    pub kappa_phi: f64,
    pub gamma: f64,
    pub jump_mode: JumpMode,
    pub frame: Frame,
}

impl DriveDissipationSpec {
    /// No drive, no atomic rates, block loss taken from the model.
    pub fn for_model(model: &EffectiveModel) -> Self {
        Self {
            omega_d: 0.0,
            kappa: 0.0,
            kappa_phi: 0.0,
            gamma: model.gamma,
            jump_mode: JumpMode::Collective,
            frame: model.frame,
        }
    }

    pub fn with_rabi(mut self, omega_d: f64) -> Self {
        self.omega_d = omega_d;
        self
    }

    pub fn with_jump_mode(mut self, mode: JumpMode) -> Self {
        self.jump_mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.omega_d.is_finite() {
            return Err(Error::InvalidParameter { name: "Omega_D", reason: "must be finite".into() });
        }
        non_negative("kappa", self.kappa)?;
        non_negative("kappa_phi", self.kappa_phi)?;
        non_negative("gamma", self.gamma)?;
        Ok(())
    }
}

/// A dissipator rate * D[op].
#[derive(Debug, Clone, PartialEq)]
pub struct Jump {
    pub label: String,
    pub rate: f64,
    pub op: QuantumOperator,
}

impl Jump {
    pub fn new(label: impl Into<String>, rate: f64, op: QuantumOperator) -> Self {
        Self { label: label.into(), rate, op }
    }
}

fn check_space(model: &EffectiveModel, space: &CompositeSpace) -> Result<()> {
    if !space.mode_nus().eq(model.nus()) {
        return Err(Error::DimensionMismatch { expected: model.n_modes(), got: space.n_modes() });
    }
    Ok(())
}

/// Sum of all retained mode operators.
pub fn collective_mode(space: &Arc<CompositeSpace>) -> Result<QuantumOperator> {
    let nus: Vec<i32> = space.mode_nus().collect();
    if nus.is_empty() {
        return Err(Error::MissingCollectiveOperator);
    }
    let mut a = QuantumOperator::zero(space);
    for nu in nus {
        a = a.add(&QuantumOperator::annihilation(space, nu)?);
    }
    Ok(a)
}

/// Atom, retained modes and their exchange couplings, plus a static Rabi
/// drive (Omega_D / 2) sigma_x.
pub fn build_hamiltonian(
    model: &EffectiveModel,
    drive: &DriveDissipationSpec,
    space: &Arc<CompositeSpace>,
) -> Result<QuantumOperator> {
    drive.validate()?;
    if drive.frame != model.frame {
        return Err(Error::FrameMismatch(format!("model is in {:?} frame, drive spec in {:?}", model.frame, drive.frame)));
    }
    if model.frame == Frame::Lab && drive.omega_d != 0.0 {
        return Err(Error::FrameMismatch("a static Rabi term only exists in the rotating frame".into()));
    }
    check_space(model, space)?;
    let sm = QuantumOperator::sigma_minus(space);
    let sp = sm.adjoint();
    let mut h = sp.mul(&sm).scale(model.atom_frequency());
    for m in &model.modes {
        let a = QuantumOperator::annihilation(space, m.nu)?;
        let ad = a.adjoint();
        let w = model.mode_frequency(m.nu).expect("mode present");
        h = h.add(&ad.mul(&a).scale(w));
        h = h.add(&ad.mul(&sm).add(&sp.mul(&a)).scale(m.g_nu));
    }
    if drive.omega_d != 0.0 {
        h = h.add(&sm.add(&sp).scale(0.5 * drive.omega_d));
    }
    Ok(h)
}

/// Dissipators implied by the spec; zero rates are skipped.
pub fn jump_operators(
    model: &EffectiveModel,
    drive: &DriveDissipationSpec,
    space: &Arc<CompositeSpace>,
) -> Result<Vec<Jump>> {
    drive.validate()?;
    check_space(model, space)?;
    let mut jumps = atomic_jumps(drive.kappa, drive.kappa_phi, space);
    if drive.gamma > 0.0 {
        let op = match drive.jump_mode {
            JumpMode::Collective => collective_mode(space)?,
            JumpMode::SingleMode => QuantumOperator::annihilation(space, 0)?,
        };
        jumps.push(Jump::new("block", drive.gamma, op));
    }
    Ok(jumps)
}

fn atomic_jumps(kappa: f64, kappa_phi: f64, space: &Arc<CompositeSpace>) -> Vec<Jump> {
    let sm = QuantumOperator::sigma_minus(space);
    let mut jumps = Vec::new();
    if kappa > 0.0 {
        jumps.push(Jump::new("decay", kappa, sm.clone()));
    }
    if kappa_phi > 0.0 {
        jumps.push(Jump::new("dephasing", kappa_phi, sm.adjoint().mul(&sm)));
    }
    jumps
}

/// Bare qubit with Rabi drive, decay and pure dephasing.
pub fn driven_qubit(omega_d: f64, kappa: f64, kappa_phi: f64) -> Result<(QuantumOperator, Vec<Jump>)> {
    non_negative("kappa", kappa)?;
    non_negative("kappa_phi", kappa_phi)?;
    let space = Arc::new(CompositeSpace::qubit());
    let sm = QuantumOperator::sigma_minus(&space);
    let h = sm.add(&sm.adjoint()).scale(0.5 * omega_d);
    Ok((h, atomic_jumps(kappa, kappa_phi, &space)))
}
