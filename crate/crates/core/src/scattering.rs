//! Coherent Gaussian pulses on the block modes and the reconstructed output
//! field.
//!
//! Output convention: O(t) = E_in(t) - i sqrt(gamma) A with A the collective
//! mode, paired with the drive H_D = sqrt(gamma) (E_in A^dag + h.c.). With this
//! pairing an empty, strongly damped block is transparent (I_out -> |E_in|^2)
//! and the emitted flux balances the loss of system excitations exactly.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{non_negative, positive, Error, Result};
use crate::model::{EffectiveModel, Frame};
use crate::quantum::evolve::{EvolutionResult, Probe};
use crate::quantum::hamiltonian::collective_mode;
use crate::quantum::liouvillian::DriveTerm;
use crate::quantum::space::CompositeSpace;
use crate::sparse::CsrMatrix;
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec {
    /// Bandwidth, in units of Gamma.
    #[serde(rename = "W")]
    pub w: f64,
    pub t0: f64,
    pub n_ph: f64,
    /// Carrier detuning from omega0.
    #[serde(default)]
    pub delta_in: f64,
}

impl PulseSpec {
    /// Pulse centred 5/W after t = 0, resonant.
    pub fn new(w: f64, n_ph: f64) -> Result<Self> {
        let s = Self { w, t0: 5.0 / w, n_ph, delta_in: 0.0 };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        positive("W", self.w)?;
        non_negative("n_ph", self.n_ph)?;
        if !(self.t0.is_finite() && self.delta_in.is_finite()) {
            return Err(Error::InvalidParameter { name: "t0", reason: "t0 and delta_in must be finite".into() });
        }
        Ok(())
    }

    pub fn peak_amplitude(&self) -> f64 {
        self.n_ph.sqrt() * (self.w * self.w / (2.0 * PI)).powf(0.25)
    }
}

/// E_in(t) = sqrt(n_ph) (W^2 / 2pi)^{1/4} exp(-W^2 (t - t0)^2 / 4) exp(-i delta_in t).
pub fn gaussian_envelope(spec: &PulseSpec, t: f64) -> C64 {
    let x = t - spec.t0;
    let mag = spec.peak_amplitude() * (-0.25 * spec.w * spec.w * x * x).exp();
    C64::from_polar(mag, -spec.delta_in * t)
}

/// sqrt(gamma) (E_in(t) A^dag + h.c.), same coefficient on every retained mode.
pub fn build_drive_term(model: &EffectiveModel, spec: &PulseSpec, space: &Arc<CompositeSpace>) -> Result<DriveTerm> {
    spec.validate()?;
    if model.frame != Frame::Rotating {
        return Err(Error::FrameMismatch("pulse envelopes are defined in the frame rotating at omega0".into()));
    }
    let a = collective_mode(space)?;
    let spec = *spec;
    Ok(DriveTerm {
        label: "pulse".into(),
        op: a.adjoint().scale(model.gamma.sqrt()),
        coeff: Arc::new(move |t| gaussian_envelope(&spec, t)),
    })
}

#[derive(Debug)]
struct FieldOps {
    spec: PulseSpec,
    /// sqrt(gamma) A and the normally ordered moments needed for I_out and G2.
    a: CsrMatrix,
    a2: CsrMatrix,
    ada: CsrMatrix,
    ada2: CsrMatrix,
    ad2a2: CsrMatrix,
}

/// Output intensity <O^dag O>, column `I_out`.
#[derive(Debug, Clone)]
pub struct OutputIntensity(Arc<FieldOps>);

/// Unnormalized two-photon correlation <O^dag O^dag O O>, column `G2`.
#[derive(Debug, Clone)]
pub struct OutputCorrelation(Arc<FieldOps>);

pub fn output_observables(
    model: &EffectiveModel,
    spec: &PulseSpec,
    space: &Arc<CompositeSpace>,
) -> Result<(OutputIntensity, OutputCorrelation)> {
    spec.validate()?;
    let a = collective_mode(space)?.matrix().scale(C64::new(model.gamma.sqrt(), 0.0));
    let ad = a.adjoint();
    let a2 = a.mul(&a);
    let ops = Arc::new(FieldOps {
        spec: *spec,
        ada: ad.mul(&a),
        ada2: ad.mul(&a2),
        ad2a2: ad.mul(&ad).mul(&a2),
        a2,
        a,
    });
    Ok((OutputIntensity(ops.clone()), OutputCorrelation(ops)))
}

struct Moments {
    m1: C64,
    m2: C64,
    n: f64,
    m21: C64,
    n2: f64,
}

impl FieldOps {
    fn intensity(&self, e: C64, m: &Moments) -> f64 {
        e.norm_sqr() + m.n + 2.0 * (C64::i() * e * m.m1.conj()).re
    }

    fn correlation(&self, e: C64, m: &Moments) -> f64 {
        let e2 = e.norm_sqr();
        e2 * e2 + 4.0 * e2 * m.n + m.n2
            + 2.0 * (C64::new(0.0, 2.0 * e2) * e * m.m1.conj()).re
            - 2.0 * (e * e * m.m2.conj()).re
            + 2.0 * (C64::new(0.0, 2.0) * e * m.m21.conj()).re
    }

    fn rho_moments(&self, rho: &[C64]) -> Moments {
        Moments {
            m1: self.a.trace_product(rho),
            m2: self.a2.trace_product(rho),
            n: self.ada.trace_product(rho).re,
            m21: self.ada2.trace_product(rho),
            n2: self.ad2a2.trace_product(rho).re,
        }
    }

    /// |O psi|^2 for a normalized psi.
    fn psi_intensity(&self, e: C64, psi: &[C64]) -> f64 {
        let mut a1 = vec![C64::new(0.0, 0.0); psi.len()];
        self.a.matvec(psi, &mut a1);
        let i = C64::i();
        psi.iter().zip(&a1).map(|(p, x)| (e * p - i * x).norm_sqr()).sum()
    }

    /// |O^2 psi|^2 for a normalized psi.
    fn psi_correlation(&self, e: C64, psi: &[C64]) -> f64 {
        let n = psi.len();
        let mut a1 = vec![C64::new(0.0, 0.0); n];
        let mut a2 = vec![C64::new(0.0, 0.0); n];
        self.a.matvec(psi, &mut a1);
        self.a.matvec(&a1, &mut a2);
        let two_ie = C64::new(0.0, 2.0) * e;
        let e2 = e * e;
        psi.iter().zip(a1.iter().zip(&a2)).map(|(p, (x, y))| (e2 * p - two_ie * x - y).norm_sqr()).sum()
    }
}

impl Probe for OutputIntensity {
    fn name(&self) -> &str {
        "I_out"
    }

    fn eval_rho(&self, t: f64, rho: &[C64]) -> C64 {
        let e = gaussian_envelope(&self.0.spec, t);
        C64::new(self.0.intensity(e, &self.0.rho_moments(rho)), 0.0)
    }

    fn eval_psi(&self, t: f64, psi: &[C64]) -> C64 {
        let e = gaussian_envelope(&self.0.spec, t);
        C64::new(self.0.psi_intensity(e, psi), 0.0)
    }
}

impl Probe for OutputCorrelation {
    fn name(&self) -> &str {
        "G2"
    }

    fn eval_rho(&self, t: f64, rho: &[C64]) -> C64 {
        let e = gaussian_envelope(&self.0.spec, t);
        C64::new(self.0.correlation(e, &self.0.rho_moments(rho)), 0.0)
    }

    fn eval_psi(&self, t: f64, psi: &[C64]) -> C64 {
        let e = gaussian_envelope(&self.0.spec, t);
        C64::new(self.0.psi_correlation(e, psi), 0.0)
    }
}

pub fn trapezoid(t: &[f64], y: &[f64]) -> f64 {
    t.windows(2).zip(y.windows(2)).map(|(t, y)| 0.5 * (t[1] - t[0]) * (y[0] + y[1])).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FluxBalance {
    pub n_ph: f64,
    /// Integral of I_out over the run.
    pub emitted: f64,
    /// System excitation left at the final time.
    pub residual: f64,
    /// Largest top-Fock population recorded.
    pub leakage: f64,
    /// n_ph - emitted - residual - leakage.
    pub mismatch: f64,
}

/// Photon bookkeeping for a run that recorded `I_out` and `sys_excitation`.
pub fn flux_balance(result: &EvolutionResult, n_ph: f64) -> Result<FluxBalance> {
    let i_out = result
        .values("I_out")
        .ok_or(Error::InvalidParameter { name: "result", reason: "missing I_out column".into() })?;
    let sys = result
        .values("sys_excitation")
        .ok_or(Error::InvalidParameter { name: "result", reason: "missing sys_excitation column".into() })?;
    let emitted = trapezoid(&result.t, i_out);
    let residual = *sys.last().unwrap();
    let leakage = result.diagnostics.max_leakage;
    Ok(FluxBalance { n_ph, emitted, residual, leakage, mismatch: n_ph - emitted - residual - leakage })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EchoPeaks {
    pub prompt_t: f64,
    pub prompt_value: f64,
    pub delayed_t: f64,
    pub delayed_value: f64,
    pub separation: f64,
}

/// Prompt peak: maximum of `y` up to t0 + tau/2. Delayed peak: maximum over
/// (t_p + tau/2, t_p + 3 tau/2], accepted only if it is a strict interior
/// local maximum of that window.
pub fn echo_peaks(t: &[f64], y: &[f64], t0: f64, tau: f64) -> Option<EchoPeaks> {
    let argmax = |lo: f64, hi: f64| {
        t.iter()
            .enumerate()
            .filter(|(_, &s)| s > lo && s <= hi)
            .max_by(|a, b| y[a.0].partial_cmp(&y[b.0]).unwrap())
            .map(|(i, _)| i)
    };
    let p = argmax(f64::NEG_INFINITY, t0 + 0.5 * tau)?;
    let (lo, hi) = (t[p] + 0.5 * tau, t[p] + 1.5 * tau);
    let d = argmax(lo, hi)?;
    let interior = d > 0 && d + 1 < t.len() && t[d - 1] > lo && t[d + 1] <= hi;
    if !interior || !(y[d] > y[d - 1] && y[d] > y[d + 1]) {
        return None;
    }
    Some(EchoPeaks {
        prompt_t: t[p],
        prompt_value: y[p],
        delayed_t: t[d],
        delayed_value: y[d],
        separation: t[d] - t[p],
    })
}
