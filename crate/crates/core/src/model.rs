//! Physical parameters and the truncated multimode model of block A.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{positive, Error, Result};

const RESONANCE_RTOL: f64 = 1e-12;

/// Atom-mirror setup together with the derived triple (Gamma, tau, phi).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct PhysicalParams {
    pub omega0: f64,
    pub v: f64,
    pub x0: f64,
    pub g: f64,
    #[serde(rename = "Gamma")]
    pub gamma: f64,
    pub tau: f64,
    /// Raw round-trip phase 2 k0 x0 (not reduced).
    pub phi: f64,
}

#[derive(Deserialize)]
struct RawParams {
    omega0: f64,
    v: f64,
    x0: f64,
    g: f64,
    #[serde(rename = "Gamma")]
    gamma: Option<f64>,
    tau: Option<f64>,
    phi: Option<f64>,
}

impl TryFrom<RawParams> for PhysicalParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        let p = derive_params(raw.omega0, raw.v, raw.x0, raw.g)?;
        for (name, stored, derived) in [
            ("Gamma", raw.gamma, p.gamma),
            ("tau", raw.tau, p.tau),
            ("phi", raw.phi, p.phi),
        ] {
            if let Some(s) = stored {
                if (s - derived).abs() > 1e-12 * derived.abs().max(1.0) {
                    return Err(Error::InvalidParameter {
                        name,
                        reason: format!("stored value {s} disagrees with derived value {derived}"),
                    });
                }
            }
        }
        Ok(p)
    }
}

/// Build the parameter set from the bare setup.
pub fn derive_params(omega0: f64, v: f64, x0: f64, g: f64) -> Result<PhysicalParams> {
    positive("omega0", omega0)?;
    positive("v", v)?;
    positive("x0", x0)?;
    positive("g", g)?;
    Ok(PhysicalParams {
        omega0,
        v,
        x0,
        g,
        gamma: 2.0 * g * g / v,
        tau: 2.0 * x0 / v,
        phi: 2.0 * (omega0 / v) * x0,
    })
}

impl PhysicalParams {
    /// Solve for a setup with the requested (Gamma, tau, phi) in units v = 1.
    ///
    /// The phase is realized as `phi + 2 pi winding`; a large winding keeps
    /// lambda0/2 small against x0 so the block length can be snapped close to
    /// any requested ratio.
    pub fn from_dimensionless(gamma: f64, tau: f64, phi: f64, winding: u32) -> Result<Self> {
        positive("Gamma", gamma)?;
        positive("tau", tau)?;
        if !phi.is_finite() {
            return Err(Error::InvalidParameter { name: "phi", reason: "must be finite".into() });
        }
        let phi_raw = phi + 2.0 * PI * f64::from(winding);
        if phi_raw <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "phi",
                reason: format!("phi + 2 pi winding = {phi_raw} must be > 0; raise the winding"),
            });
        }
        let v = 1.0;
        let x0 = 0.5 * tau * v;
        derive_params(phi_raw * v / (2.0 * x0), v, x0, (0.5 * gamma * v).sqrt())
    }

    pub fn k0(&self) -> f64 {
        self.omega0 / self.v
    }

    pub fn phi_mod_2pi(&self) -> f64 {
        self.phi.rem_euclid(2.0 * PI)
    }

    pub fn gamma_tau(&self) -> f64 {
        self.gamma * self.tau
    }

    /// lambda0 / 2 = pi v / omega0.
    pub fn half_wavelength(&self) -> f64 {
        PI * self.v / self.omega0
    }
}

/// Multiple of lambda0/2 closest to `ratio * x0` that still exceeds x0.
pub fn snap_block_length(params: &PhysicalParams, ratio: f64) -> Result<f64> {
    if !ratio.is_finite() || ratio < 1.0 {
        return Err(Error::InvalidParameter { name: "ratio", reason: format!("must be >= 1, got {ratio}") });
    }
    let half = params.half_wavelength();
    let x0 = params.x0;
    let mut m = ((ratio * x0 / half).round() as u64).max(1);
    while (m as f64) * half <= x0 * (1.0 + RESONANCE_RTOL) {
        m += 1;
    }
    let l = m as f64 * half;
    let limit = 10.0 * ratio * x0;
    if l >= limit {
        return Err(Error::InfeasibleGeometry { x0, limit });
    }
    Ok(l)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    Lab,
    /// Rotating at omega0: the atom term drops out and mode nu sits at v nu pi / L.
    #[default]
    Rotating,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub nu: i32,
    #[serde(rename = "Omega_nu")]
    pub omega_nu: f64,
    pub g_nu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel")]
pub struct EffectiveModel {
    pub params: PhysicalParams,
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "N_A")]
    pub n_a: usize,
    pub gamma: f64,
    /// Ordered by ascending nu.
    pub modes: Vec<Mode>,
    pub frame: Frame,
}

#[derive(Deserialize)]
struct RawModel {
    params: PhysicalParams,
    #[serde(rename = "L")]
    l: f64,
    #[serde(rename = "N_A")]
    n_a: usize,
    #[serde(default)]
    frame: Frame,
}

impl TryFrom<RawModel> for EffectiveModel {
    type Error = Error;

    fn try_from(raw: RawModel) -> Result<Self> {
        Ok(build_effective_model(&raw.params, raw.l, raw.n_a)?.with_frame(raw.frame))
    }
}

/// Coupling of mode nu for block length `l`.
pub fn mode_coupling(params: &PhysicalParams, l: f64, nu: i32) -> f64 {
    let sign = if nu.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    let arg = f64::from(nu) * PI * params.x0 / l + 0.5 * params.phi;
    params.g * sign * (2.0 / l).sqrt() * arg.sin()
}

pub fn build_effective_model(params: &PhysicalParams, l: f64, n_a: usize) -> Result<EffectiveModel> {
    if !(l.is_finite() && l > params.x0) {
        return Err(Error::Geometry { l, x0: params.x0 });
    }
    let half = params.half_wavelength();
    let ratio = l / half;
    if (ratio - ratio.round()).abs() > RESONANCE_RTOL * ratio.round().max(1.0) {
        return Err(Error::ResonanceCondition { l, half, ratio });
    }
    let n = n_a as i32;
    let modes = (-n..=n)
        .map(|nu| Mode {
            nu,
            omega_nu: params.omega0 + params.v * f64::from(nu) * PI / l,
            g_nu: mode_coupling(params, l, nu),
        })
        .collect();
    Ok(EffectiveModel { params: *params, l, n_a, gamma: 2.0 * params.v / l, modes, frame: Frame::Rotating })
}

impl EffectiveModel {
    pub fn with_frame(mut self, frame: Frame) -> Self {
        self.frame = frame;
        self
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn nus(&self) -> impl Iterator<Item = i32> + '_ {
        self.modes.iter().map(|m| m.nu)
    }

    /// Storage index of mode `nu`.
    pub fn index_of(&self, nu: i32) -> Option<usize> {
        self.modes.iter().position(|m| m.nu == nu)
    }

    pub fn mode(&self, nu: i32) -> Option<&Mode> {
        self.index_of(nu).map(|i| &self.modes[i])
    }

    /// Mode frequency as seen in this model's frame.
    pub fn mode_frequency(&self, nu: i32) -> Option<f64> {
        let m = self.mode(nu)?;
        Some(match self.frame {
            Frame::Lab => m.omega_nu,
            Frame::Rotating => self.params.v * f64::from(nu) * PI / self.l,
        })
    }

    pub fn atom_frequency(&self) -> f64 {
        match self.frame {
            Frame::Lab => self.params.omega0,
            Frame::Rotating => 0.0,
        }
    }

    pub fn coupling_bound(&self) -> f64 {
        self.params.g * (2.0 / self.l).sqrt()
    }
}
