use std::io::{self, Write};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quantum::liouvillian::Liouvillian;
use crate::quantum::ode::{Dopri5, OdeOptions};
use crate::quantum::operator::QuantumOperator;
use crate::quantum::space::CompositeSpace;
use crate::quantum::state::DensityMatrix;
use crate::sparse::CsrMatrix;
use crate::C64;

/// How a complex expectation value becomes a reported column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reduction {
    Real,
    Abs,
}

/// A linear functional of the state, possibly time dependent.
pub trait Probe: Send + Sync {
    fn name(&self) -> &str;

    fn reduction(&self) -> Reduction {
        Reduction::Real
    }

    /// tr(O(t) rho) for a row-major density matrix.
    fn eval_rho(&self, t: f64, rho: &[C64]) -> C64;

    /// <psi| O(t) |psi> for a normalized state.
    fn eval_psi(&self, t: f64, psi: &[C64]) -> C64;
}

#[derive(Debug, Clone)]
pub struct OperatorProbe {
    name: String,
    op: CsrMatrix,
    reduction: Reduction,
}

impl OperatorProbe {
    pub fn new(name: impl Into<String>, op: &QuantumOperator, reduction: Reduction) -> Self {
        Self { name: name.into(), op: op.matrix().clone(), reduction }
    }

    /// Excited-state population, column `rho_ee`.
    pub fn atom_population(space: &Arc<CompositeSpace>) -> Self {
        let sm = QuantumOperator::sigma_minus(space);
        Self::new("rho_ee", &sm.adjoint().mul(&sm), Reduction::Real)
    }

    /// |rho_eg|, column `abs_rho_eg`.
    pub fn atom_coherence(space: &Arc<CompositeSpace>) -> Self {
        Self::new("abs_rho_eg", &QuantumOperator::sigma_minus(space), Reduction::Abs)
    }

    /// Total number of quanta, atom plus every mode; column `sys_excitation`.
    pub fn total_excitation(space: &Arc<CompositeSpace>) -> Result<Self> {
        let sm = QuantumOperator::sigma_minus(space);
        let mut n = sm.adjoint().mul(&sm);
        for nu in space.mode_nus().collect::<Vec<_>>() {
            n = n.add(&QuantumOperator::number(space, nu)?);
        }
        Ok(Self::new("sys_excitation", &n, Reduction::Real))
    }

    pub fn mode_photons(space: &Arc<CompositeSpace>, nu: i32) -> Result<Self> {
        Ok(Self::new(format!("n_{nu}"), &QuantumOperator::number(space, nu)?, Reduction::Real))
    }
}

impl Probe for OperatorProbe {
    fn name(&self) -> &str {
        &self.name
    }

    fn reduction(&self) -> Reduction {
        self.reduction
    }

    fn eval_rho(&self, _t: f64, rho: &[C64]) -> C64 {
        self.op.trace_product(rho)
    }

    fn eval_psi(&self, _t: f64, psi: &[C64]) -> C64 {
        self.op.expect(psi)
    }
}

/// Population in states where some mode occupies its top Fock level.
#[derive(Debug, Clone)]
pub struct LeakageProbe {
    states: Vec<usize>,
    dim: usize,
}

impl LeakageProbe {
    pub fn new(space: &CompositeSpace) -> Self {
        Self { states: space.leakage_states(), dim: space.dim() }
    }

    pub fn rho(&self, rho: &[C64]) -> f64 {
        self.states.iter().map(|&i| rho[i * self.dim + i].re).sum()
    }

    pub fn psi(&self, psi: &[C64]) -> f64 {
        self.states.iter().map(|&i| psi[i].norm_sqr()).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub values: Vec<f64>,
    pub stderr: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    /// max |tr rho - 1| over the sampled times (ME only).
    pub max_trace_error: f64,
    /// Smallest eigenvalue of rho over the sampled times, when checked.
    pub min_eigenvalue: Option<f64>,
    /// Largest top-Fock population seen (any trajectory, any time).
    pub max_leakage: f64,
    pub n_traj: Option<usize>,
    pub n_jumps: Option<u64>,
    pub steps: usize,
    /// Closed-system runs: max |norm - 1| and max |<H>(t) - <H>(0)|.
    pub max_norm_error: Option<f64>,
    pub max_energy_drift: Option<f64>,
    pub warnings: Vec<String>,
}

/// Observable time series on a fixed grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionResult {
    pub t: Vec<f64>,
    pub series: Vec<Series>,
    /// Top-Fock population per sample; absent for closed sector runs.
    pub leakage: Option<Vec<f64>>,
    pub diagnostics: Diagnostics,
}

impl EvolutionResult {
    pub fn series(&self, name: &str) -> Option<&Series> {
        self.series.iter().find(|s| s.name == name)
    }

    pub fn values(&self, name: &str) -> Option<&[f64]> {
        self.series(name).map(|s| s.values.as_slice())
    }

    /// Header `t`, one column per series, then `<name>_stderr` columns for
    /// series that carry one, then `leakage` when recorded.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let mut header = vec!["t".to_string()];
        header.extend(self.series.iter().map(|s| s.name.clone()));
        header.extend(self.series.iter().filter(|s| s.stderr.is_some()).map(|s| format!("{}_stderr", s.name)));
        if self.leakage.is_some() {
            header.push("leakage".into());
        }
        writeln!(w, "{}", header.join(","))?;
        for (k, t) in self.t.iter().enumerate() {
            let mut row = vec![t.to_string()];
            row.extend(self.series.iter().map(|s| s.values[k].to_string()));
            row.extend(self.series.iter().filter_map(|s| s.stderr.as_ref().map(|e| e[k].to_string())));
            if let Some(l) = &self.leakage {
                row.push(l[k].to_string());
            }
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

pub(crate) fn reduce(z: C64, r: Reduction) -> f64 {
    match r {
        Reduction::Real => z.re,
        Reduction::Abs => z.norm(),
    }
}

pub(crate) fn check_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() || t_grid.windows(2).any(|w| !(w[1] > w[0])) || !t_grid.iter().all(|t| t.is_finite()) {
        return Err(Error::InvalidParameter { name: "t_grid", reason: "must be non-empty, finite and strictly increasing".into() });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeOptions {
    pub ode: OdeOptions,
    /// Positivity is checked by full diagonalization up to this dimension.
    pub eig_check_max_dim: usize,
}

impl Default for MeOptions {
    fn default() -> Self {
        Self { ode: OdeOptions::default(), eig_check_max_dim: 64 }
    }
}

/// Integrate the master equation and sample probes on `t_grid`.
///
/// The trace is never renormalized; its drift is reported in the diagnostics.
pub fn integrate_me(
    l: &Liouvillian,
    rho0: &DensityMatrix,
    t_grid: &[f64],
    probes: &[&dyn Probe],
    opts: &MeOptions,
) -> Result<EvolutionResult> {
    check_grid(t_grid)?;
    if rho0.dim() != l.dim() {
        return Err(Error::DimensionMismatch { expected: l.dim(), got: rho0.dim() });
    }
    rho0.validate(1e-8, 1e-10, 1e-8)?;
    let n = l.dim();
    let leak = LeakageProbe::new(l.space());
    let mut values = vec![Vec::with_capacity(t_grid.len()); probes.len()];
    let mut leakage = Vec::with_capacity(t_grid.len());
    let mut diag = Diagnostics::default();
    let check_eig = n <= opts.eig_check_max_dim;
    let mut min_eig = f64::INFINITY;
    let space = l.space().clone();

    let mut record = |t: f64, rho: &[C64], diag: &mut Diagnostics| {
        for (p, v) in probes.iter().zip(values.iter_mut()) {
            v.push(reduce(p.eval_rho(t, rho), p.reduction()));
        }
        let lk = leak.rho(rho);
        leakage.push(lk);
        diag.max_leakage = diag.max_leakage.max(lk);
        let tr: C64 = (0..n).map(|i| rho[i * n + i]).sum();
        diag.max_trace_error = diag.max_trace_error.max((tr - C64::new(1.0, 0.0)).norm());
        if check_eig {
            let dm = DensityMatrix { space: space.clone(), data: rho.to_vec() };
            min_eig = min_eig.min(dm.min_eigenvalue());
        }
    };

    let mut scratch = Vec::new();
    let rhs = |t: f64, y: &[C64], dy: &mut [C64]| l.apply_hermitian(t, y, dy, &mut scratch);
    let mut ode = Dopri5::new(rhs, t_grid[0], rho0.data.clone(), opts.ode);
    let mut buf = vec![C64::new(0.0, 0.0); n * n];
    record(t_grid[0], &rho0.data, &mut diag);
    let t_end = *t_grid.last().unwrap();
    let mut k = 1;
    while k < t_grid.len() {
        ode.step(t_end)?;
        while k < t_grid.len() && t_grid[k] <= ode.t() {
            if t_grid[k] == ode.t() {
                buf.copy_from_slice(ode.y());
            } else {
                ode.dense(t_grid[k], &mut buf);
            }
            record(t_grid[k], &buf, &mut diag);
            k += 1;
        }
    }
    diag.steps = ode.accepted;
    if check_eig {
        diag.min_eigenvalue = Some(min_eig);
    }
    let series = probes
        .iter()
        .zip(values)
        .map(|(p, v)| Series { name: p.name().to_string(), values: v, stderr: None })
        .collect();
    Ok(EvolutionResult { t: t_grid.to_vec(), series, leakage: Some(leakage), diagnostics: diag })
}

/// Evolve the state itself to `t_end` (no sampling).
pub fn evolve_state(l: &Liouvillian, rho0: &DensityMatrix, t0: f64, t_end: f64, opts: &OdeOptions) -> Result<DensityMatrix> {
    let mut scratch = Vec::new();
    let rhs = |t: f64, y: &[C64], dy: &mut [C64]| l.apply_hermitian(t, y, dy, &mut scratch);
    let mut ode = Dopri5::new(rhs, t0, rho0.data.clone(), *opts);
    while ode.t() < t_end {
        ode.step(t_end)?;
    }
    Ok(DensityMatrix { space: rho0.space.clone(), data: ode.y().to_vec() })
}

/// Uniform grid 0, dt, ..., n dt.
pub fn uniform_grid(t_end: f64, n_intervals: usize) -> Vec<f64> {
    (0..=n_intervals).map(|k| t_end * k as f64 / n_intervals as f64).collect()
}
