use std::f64::consts::PI;
use std::sync::Arc;

use wqed_core::exec::Execution;
use wqed_core::model::{build_effective_model, snap_block_length, EffectiveModel, PhysicalParams};
use wqed_core::quantum::{
    build_hamiltonian, build_liouvillian, driven_qubit, integrate_me, jump_operators, mcwf_evolve, uniform_grid,
    CompositeSpace, DriveDissipationSpec, EvolutionResult, JumpMode, Liouvillian, McwfOptions, MeOptions, OperatorProbe,
    Probe, StateVector,
};
use wqed_core::scattering::{build_drive_term, PulseSpec};
use wqed_core::C64;

fn model(gamma: f64, tau: f64, phi: f64, ratio: f64, n_a: usize) -> EffectiveModel {
    let p = PhysicalParams::from_dimensionless(gamma, tau, phi, 100).unwrap();
    build_effective_model(&p, snap_block_length(&p, ratio).unwrap(), n_a).unwrap()
}

fn opts(n_traj: usize, seed: u64) -> McwfOptions {
    McwfOptions { n_traj, seed, ..Default::default() }
}

/// Largest |mcwf - me| in units of the trajectory standard error (floored).
fn worst_sigma(mc: &EvolutionResult, me: &EvolutionResult, name: &str) -> f64 {
    let s = mc.series(name).unwrap();
    let err = s.stderr.as_ref().unwrap();
    s.values
        .iter()
        .zip(err)
        .zip(me.values(name).unwrap())
        .map(|((m, e), x)| (m - x).abs() / e.max(1e-6))
        .fold(0.0, f64::max)
}

fn compare(l: &Liouvillian, psi0: &StateVector, grid: &[f64], probes: &[&dyn Probe], n_traj: usize) {
    let me = integrate_me(l, &psi0.to_density(), grid, probes, &MeOptions::default()).unwrap();
    let mc = mcwf_evolve(l, psi0, grid, probes, &opts(n_traj, 11)).unwrap();
    for p in probes {
        let w = worst_sigma(&mc, &me, p.name());
        assert!(w < 3.0, "{}: {w} standard errors", p.name());
    }
}

#[test]
fn without_jumps_every_trajectory_is_the_same() {
    let (h, _) = driven_qubit(1.7, 0.0, 0.0).unwrap();
    let l = build_liouvillian(&h, &[]).unwrap();
    let s = h.space().clone();
    let psi0 = StateVector::ground_vacuum(&s);
    let grid = uniform_grid(4.0, 40);
    let probe = OperatorProbe::atom_population(&s);
    let mc = mcwf_evolve(&l, &psi0, &grid, &[&probe], &opts(50, 3)).unwrap();
    let me = integrate_me(&l, &psi0.to_density(), &grid, &[&probe], &MeOptions::default()).unwrap();
    let series = mc.series("rho_ee").unwrap();
    assert!(series.stderr.as_ref().unwrap().iter().all(|e| *e < 1e-12));
    assert_eq!(mc.diagnostics.n_jumps, Some(0));
    for (a, b) in series.values.iter().zip(me.values("rho_ee").unwrap()) {
        assert!((a - b).abs() < 1e-6);
    }
}

#[test]
fn qubit_decay_within_three_standard_errors() {
    let (h, jumps) = driven_qubit(0.0, 1.0, 0.0).unwrap();
    let l = build_liouvillian(&h, &jumps).unwrap();
    let s = h.space().clone();
    let grid = uniform_grid(4.0, 20);
    let probe = OperatorProbe::atom_population(&s);
    let mc = mcwf_evolve(&l, &StateVector::excited_vacuum(&s), &grid, &[&probe], &opts(1000, 5)).unwrap();
    let series = mc.series("rho_ee").unwrap();
    for ((t, m), e) in grid.iter().zip(&series.values).zip(series.stderr.as_ref().unwrap()) {
        assert!((m - (-t).exp()).abs() <= 3.0 * e.max(1e-6), "t = {t}");
    }
    // each trajectory jumps at most once; about 1 - e^{-4} of them by t = 4
    let jumps = mc.diagnostics.n_jumps.unwrap() as f64;
    assert!((jumps / 1000.0 - (1.0 - (-4.0f64).exp())).abs() < 0.02);
}

#[test]
fn agrees_with_master_equation_for_dephased_qubit() {
    let (h, jumps) = driven_qubit(1.5, 1.0, 0.5).unwrap();
    let l = build_liouvillian(&h, &jumps).unwrap();
    let s = h.space().clone();
    let probes = [OperatorProbe::atom_population(&s), OperatorProbe::atom_coherence(&s)];
    let p: Vec<&dyn Probe> = probes.iter().map(|p| p as &dyn Probe).collect();
    compare(&l, &StateVector::ground_vacuum(&s), &uniform_grid(5.0, 20), &p, 1000);
}

#[test]
fn agrees_with_master_equation_for_driven_single_mode() {
    let m = model(1.0, 0.25, PI, 1.0, 0);
    let s = Arc::new(CompositeSpace::for_model(&m, 3).unwrap());
    let spec = DriveDissipationSpec::for_model(&m).with_rabi(2.0).with_jump_mode(JumpMode::SingleMode);
    let h = build_hamiltonian(&m, &spec, &s).unwrap();
    let l = build_liouvillian(&h, &jump_operators(&m, &spec, &s).unwrap()).unwrap();
    let probes = [OperatorProbe::atom_population(&s), OperatorProbe::mode_photons(&s, 0).unwrap()];
    let p: Vec<&dyn Probe> = probes.iter().map(|p| p as &dyn Probe).collect();
    compare(&l, &StateVector::ground_vacuum(&s), &uniform_grid(3.0, 15), &p, 1000);
}

#[test]
fn agrees_with_master_equation_for_pulsed_multimode_block() {
    let m = model(1.0, 2.0, PI / 2.0, 2.0, 1);
    let s = Arc::new(CompositeSpace::for_model(&m, 2).unwrap());
    let pulse = PulseSpec::new(2.5, 0.5).unwrap();
    let spec = DriveDissipationSpec::for_model(&m);
    let h = build_hamiltonian(&m, &spec, &s).unwrap();
    let l = build_liouvillian(&h, &jump_operators(&m, &spec, &s).unwrap())
        .unwrap()
        .with_drive(build_drive_term(&m, &pulse, &s).unwrap())
        .unwrap();
    // I_out and G2 are heavy-tailed per trajectory, so their sample standard
    // error is unreliable at this size; they are checked in the scattering tests.
    let pop = OperatorProbe::atom_population(&s);
    let exc = OperatorProbe::total_excitation(&s).unwrap();
    compare(&l, &StateVector::ground_vacuum(&s), &uniform_grid(6.0, 24), &[&pop, &exc], 1000);
}

#[test]
fn seeded_runs_are_bitwise_reproducible_on_both_backends() {
    let (h, jumps) = driven_qubit(1.2, 0.7, 0.3).unwrap();
    let l = build_liouvillian(&h, &jumps).unwrap();
    let s = h.space().clone();
    let grid = uniform_grid(3.0, 12);
    let probe = OperatorProbe::atom_population(&s);
    let run = |execution, batch| {
        let o = McwfOptions { execution, batch, ..opts(300, 42) };
        mcwf_evolve(&l, &StateVector::ground_vacuum(&s), &grid, &[&probe], &o).unwrap()
    };
    let a = run(Execution::Parallel, 64);
    let b = run(Execution::Sequential, 64);
    let c = run(Execution::Parallel, 64);
    assert_eq!(a, b);
    assert_eq!(a, c);
    let other = mcwf_evolve(&l, &StateVector::ground_vacuum(&s), &grid, &[&probe], &opts(300, 43)).unwrap();
    assert_ne!(a.series, other.series);
}

#[test]
fn cutoff_saturation_raises_a_warning() {
    let m = model(1.0, 2.0, PI / 2.0, 2.0, 0);
    let s = Arc::new(CompositeSpace::for_model(&m, 1).unwrap());
    let pulse = PulseSpec::new(2.5, 4.0).unwrap();
    let spec = DriveDissipationSpec::for_model(&m);
    let h = build_hamiltonian(&m, &spec, &s).unwrap();
    let l = build_liouvillian(&h, &jump_operators(&m, &spec, &s).unwrap())
        .unwrap()
        .with_drive(build_drive_term(&m, &pulse, &s).unwrap())
        .unwrap();
    let pop = OperatorProbe::atom_population(&s);
    let r = mcwf_evolve(&l, &StateVector::ground_vacuum(&s), &uniform_grid(4.0, 8), &[&pop], &opts(20, 1)).unwrap();
    assert!(r.diagnostics.max_leakage > 1e-3);
    assert!(r.diagnostics.warnings.iter().any(|w| w.contains("truncation")));
}

#[test]
fn rejects_bad_inputs() {
    let (h, jumps) = driven_qubit(1.0, 1.0, 0.0).unwrap();
    let l = build_liouvillian(&h, &jumps).unwrap();
    let s = h.space().clone();
    let probe = OperatorProbe::atom_population(&s);
    let unnormalized = StateVector::new(&s, vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)]).unwrap();
    assert!(mcwf_evolve(&l, &unnormalized, &[0.0, 1.0], &[&probe], &opts(10, 0)).is_err());
    assert!(mcwf_evolve(&l, &StateVector::ground_vacuum(&s), &[0.0, 1.0], &[&probe], &opts(0, 0)).is_err());
    assert!(mcwf_evolve(&l, &StateVector::ground_vacuum(&s), &[1.0, 0.0], &[&probe], &opts(10, 0)).is_err());
}
