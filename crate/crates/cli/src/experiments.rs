//! Experiment runners. Each writes its data into a run directory and returns
//! a JSON summary of the headline numbers.

use std::sync::Arc;

use serde::Serialize;
use serde_json::{json, Value};
use wqed_core::chain::{calibrate_chain, evolve_sector, Occupation, DEFAULT_BAND_WINDOW};
use wqed_core::dde::{fit_decay_rate, markovian_rate, purcell_rate, solve_delay_ode, AmplitudeSeries};
use wqed_core::exec::Execution;
use wqed_core::model::{build_effective_model, snap_block_length, EffectiveModel, PhysicalParams};
use wqed_core::quantum::ode::OdeOptions;
use wqed_core::quantum::{
    build_hamiltonian, build_liouvillian, driven_qubit, integrate_me, jump_operators, mcwf_evolve, steady_state,
    uniform_grid, CompositeSpace, DriveDissipationSpec, EvolutionResult, Liouvillian, McwfOptions, MeOptions,
    OperatorProbe, Probe, StateVector, SteadyOptions,
};
use wqed_core::scattering::{build_drive_term, echo_peaks, flux_balance, output_observables, PulseSpec};
use wqed_core::C64;

use crate::config::{Backend, Experiment, ExperimentConfig};
use crate::error::{CliError, CliResult};
use crate::output::RunDir;

fn params(cfg: &ExperimentConfig) -> CliResult<(PhysicalParams, f64)> {
    let p = PhysicalParams::from_dimensionless(1.0, cfg.physical.gamma_tau, cfg.physical.phi, cfg.physical.winding)?;
    let l = snap_block_length(&p, cfg.physical.ratio)?;
    Ok((p, l))
}

fn effective_model(cfg: &ExperimentConfig, n_a: usize) -> CliResult<EffectiveModel> {
    let (p, l) = params(cfg)?;
    Ok(build_effective_model(&p, l, n_a)?.with_frame(cfg.model.frame))
}

fn dissipation(cfg: &ExperimentConfig, m: &EffectiveModel, omega_d: f64) -> DriveDissipationSpec {
    DriveDissipationSpec {
        kappa: cfg.drive.kappa,
        kappa_phi: cfg.drive.kappa_phi,
        ..DriveDissipationSpec::for_model(m).with_rabi(omega_d).with_jump_mode(cfg.model.jump_mode)
    }
}

fn generator(m: &EffectiveModel, spec: &DriveDissipationSpec, space: &Arc<CompositeSpace>) -> CliResult<Liouvillian> {
    let h = build_hamiltonian(m, spec, space)?;
    Ok(build_liouvillian(&h, &jump_operators(m, spec, space)?)?)
}

fn ode(cfg: &ExperimentConfig) -> OdeOptions {
    OdeOptions { rtol: cfg.solver.rtol, atol: cfg.solver.atol, ..OdeOptions::default() }
}

fn me_options(cfg: &ExperimentConfig) -> MeOptions {
    MeOptions { ode: ode(cfg), ..MeOptions::default() }
}

fn mcwf_options(cfg: &ExperimentConfig) -> McwfOptions {
    McwfOptions {
        n_traj: cfg.solver.n_traj,
        seed: cfg.solver.seed,
        ode: ode(cfg),
        execution: cfg.solver.execution,
        ..McwfOptions::default()
    }
}

fn dde(cfg: &ExperimentConfig, t_max: f64) -> CliResult<AmplitudeSeries> {
    Ok(solve_delay_ode(1.0, cfg.physical.gamma_tau, cfg.physical.phi, t_max, cfg.solver.dt)?)
}

fn max_error(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Single-excitation emission from |e, vac> with the effective model.
fn emission_run(cfg: &ExperimentConfig, n_a: usize, backend: Backend, grid: &[f64]) -> CliResult<EvolutionResult> {
    let m = effective_model(cfg, n_a)?;
    let space = Arc::new(CompositeSpace::for_model(&m, cfg.model.n_max)?.with_excitation_cap(1));
    let l = generator(&m, &dissipation(cfg, &m, 0.0), &space)?;
    let probe = OperatorProbe::atom_population(&space);
    let psi0 = StateVector::excited_vacuum(&space);
    Ok(match backend {
        Backend::Mcwf => mcwf_evolve(&l, &psi0, grid, &[&probe], &mcwf_options(cfg))?,
        _ => integrate_me(&l, &psi0.to_density(), grid, &[&probe], &me_options(cfg))?,
    })
}

fn collect_warnings(out: &mut RunDir, label: &str, r: &EvolutionResult) {
    for w in &r.diagnostics.warnings {
        out.warn(format!("{label}: {w}"));
    }
}

#[derive(Serialize)]
struct CurveError {
    label: String,
    max_error_vs_dde: f64,
}

pub fn run_emission(cfg: &ExperimentConfig, out: &mut RunDir) -> CliResult<Value> {
    let backend = cfg.backend(Experiment::Emission);
    let t_max = cfg.t_max(Experiment::Emission);
    let exact = dde(cfg, t_max)?;
    out.csv("dde.csv", |w| exact.write_csv(w))?;
    let mut errors = Vec::new();
    match backend {
        Backend::Dde => {}
        Backend::Me | Backend::Mcwf => {
            for &n_a in &cfg.model.n_a {
                let r = emission_run(cfg, n_a, backend, &exact.t)?;
                let name = format!("{backend}_NA{n_a}.csv");
                out.csv(&name, |w| r.write_csv(w))?;
                collect_warnings(out, &name, &r);
                let err = max_error(r.values("rho_ee").unwrap(), &exact.population);
                errors.push(CurveError { label: format!("N_A={n_a}"), max_error_vs_dde: err });
            }
        }
        Backend::Chain => {
            let spec = calibrate_chain(
                1.0,
                cfg.physical.gamma_tau,
                cfg.physical.phi,
                cfg.solver.sites_per_delay,
                t_max,
                DEFAULT_BAND_WINDOW,
            )?;
            let r = evolve_sector(&spec, &[(Occupation::atom_excited(), C64::new(1.0, 0.0))], &exact.t, 1)?;
            out.csv("chain.csv", |w| r.write_csv(w))?;
            collect_warnings(out, "chain.csv", &r);
            let err = max_error(r.values("atomic_population").unwrap(), &exact.population);
            errors.push(CurveError { label: format!("chain N={}", spec.n_sites), max_error_vs_dde: err });
        }
    }
    let plateau = exact.plateau(1e-6).map(|(t, p)| json!({ "t": t, "population": p }));
    let summary = json!({ "dde_plateau": plateau, "errors": errors });
    out.json("summary.json", &summary)?;
    Ok(summary)
}

pub fn run_convergence(cfg: &ExperimentConfig, out: &mut RunDir) -> CliResult<Value> {
    let t_max = cfg.t_max(Experiment::Convergence);
    let exact = dde(cfg, t_max)?;
    let errors = cfg
        .model
        .n_a
        .iter()
        .map(|&n_a| {
            let r = emission_run(cfg, n_a, Backend::Me, &exact.t)?;
            Ok(max_error(r.values("rho_ee").unwrap(), &exact.population))
        })
        .collect::<CliResult<Vec<f64>>>()?;
    // a step is flagged when the error grows against the previous truncation
    let flags: Vec<bool> = (0..errors.len()).map(|i| i > 0 && errors[i] > errors[i - 1]).collect();
    out.csv("convergence.csv", |w| {
        writeln!(w, "N_A,max_error,non_monotonic")?;
        for ((n_a, e), f) in cfg.model.n_a.iter().zip(&errors).zip(&flags) {
            writeln!(w, "{n_a},{e},{}", u8::from(*f))?;
        }
        Ok(())
    })?;
    let rows: Vec<Value> = cfg
        .model
        .n_a
        .iter()
        .zip(&errors)
        .zip(&flags)
        .map(|((n, e), f)| json!({ "N_A": n, "max_error": e, "non_monotonic": f }))
        .collect();
    if flags.iter().any(|&f| f) {
        out.warn("convergence is not monotonic in N_A");
    }
    let summary = json!({ "convergence": rows });
    out.json("summary.json", &summary)?;
    Ok(summary)
}

pub fn run_purcell(cfg: &ExperimentConfig, out: &mut RunDir) -> CliResult<Value> {
    let mut rows = Vec::new();
    for &phi in &cfg.sweep.phi {
        let mut c = cfg.clone();
        c.physical.phi = phi;
        let theory = markovian_rate(1.0, phi);
        // fit over [0, 2/Gamma'], capped for phases near the nodes
        let cap = cfg.solver.t_max.unwrap_or(50.0);
        let t_fit = if theory > 0.0 { (2.0 / theory).min(cap) } else { cap };
        let steps = (t_fit / cfg.solver.dt).round().max(1.0) as usize;
        let exact = dde(&c, steps as f64 * cfg.solver.dt)?;
        let dde_rate = fit_decay_rate(&exact.t, &exact.population)?;
        let m = effective_model(&c, 0)?;
        let grid = uniform_grid(t_fit, 200);
        let r = emission_run(&c, 0, Backend::Me, &grid)?;
        let me_rate = fit_decay_rate(&grid, r.values("rho_ee").unwrap())?;
        let pr = purcell_rate(m.modes[0].g_nu, m.gamma)?;
        rows.push([phi, theory, dde_rate, me_rate, pr]);
    }
    out.csv("purcell.csv", |w| {
        writeln!(w, "phi,theory,dde_rate,me_rate,purcell_rate")?;
        for r in &rows {
            writeln!(w, "{},{},{},{},{}", r[0], r[1], r[2], r[3], r[4])?;
        }
        Ok(())
    })?;
    let rows: Vec<Value> = rows
        .iter()
        .map(|r| json!({ "phi": r[0], "theory": r[1], "dde_rate": r[2], "me_rate": r[3], "purcell_rate": r[4] }))
        .collect();
    let summary = json!({ "purcell": rows });
    out.json("summary.json", &summary)?;
    Ok(summary)
}

/// (rho_ee, |rho_eg|, population on the truncation boundary)
fn steady_point(cfg: &ExperimentConfig, n_a: usize, omega_d: f64) -> CliResult<[f64; 3]> {
    let m = effective_model(cfg, n_a)?;
    let mut space = CompositeSpace::for_model(&m, cfg.model.n_max)?;
    if let Some(c) = cfg.model.excitation_cap {
        space = space.with_excitation_cap(c);
    }
    let space = Arc::new(space);
    let l = generator(&m, &dissipation(cfg, &m, omega_d), &space)?;
    let rho = steady_state(&l, &SteadyOptions::default())?;
    let edge: Vec<usize> = match cfg.model.excitation_cap {
        Some(c) => (0..space.dim()).filter(|&i| space.excitation(i) == c).collect(),
        None => space.leakage_states(),
    };
    let boundary = edge.iter().map(|&i| rho.get(i, i).re).sum();
    Ok([rho.rho_ee(), rho.rho_eg().norm(), boundary])
}

/// Log-spaced points from `lo` to `hi`.
pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

pub fn run_steady_sweep(cfg: &ExperimentConfig, out: &mut RunDir) -> CliResult<Value> {
    let exec = cfg.solver.execution;
    let omegas = &cfg.drive.omega_d;
    let n_a_list = &cfg.model.n_a;
    let n_o = omegas.len();
    let points = exec.map(0..n_a_list.len() * n_o, |k| steady_point(cfg, n_a_list[k / n_o], omegas[k % n_o]));
    let points = points.into_iter().collect::<CliResult<Vec<_>>>()?;
    let mut ladders = Vec::new();
    for (i, n_a) in n_a_list.iter().enumerate() {
        let pts = &points[i * n_o..(i + 1) * n_o];
        out.csv(&format!("steady_NA{n_a}.csv"), |w| {
            writeln!(w, "Omega_D,rho_ee,abs_rho_eg,truncation")?;
            for (o, p) in omegas.iter().zip(pts) {
                writeln!(w, "{o},{},{},{}", p[0], p[1], p[2])?;
            }
            Ok(())
        })?;
        let monotonic = pts.windows(2).all(|p| p[1][0] > p[0][0]);
        let rho_ee: Vec<f64> = pts.iter().map(|p| p[0]).collect();
        let truncation = pts.iter().map(|p| p[2]).fold(0.0, f64::max);
        ladders.push(json!({ "N_A": n_a, "rho_ee": rho_ee, "monotonic": monotonic, "max_truncation": truncation }));
    }

    let axis = logspace(cfg.sweep.ellipse_min, cfg.sweep.ellipse_max, cfg.sweep.ellipse_points);
    let n = axis.len();
    let ellipse = exec.map(0..n * n * n, |k| -> CliResult<[f64; 5]> {
        let (o, ka, kp) = (axis[k / (n * n)], axis[(k / n) % n], axis[k % n]);
        let (h, jumps) = driven_qubit(o, ka, kp)?;
        let rho = steady_state(&build_liouvillian(&h, &jumps)?, &SteadyOptions::default())?;
        Ok([o, ka, kp, rho.rho_ee(), rho.rho_eg().norm()])
    });
    let ellipse = ellipse.into_iter().collect::<CliResult<Vec<_>>>()?;
    out.csv("ellipse.csv", |w| {
        writeln!(w, "Omega_D,kappa,kappa_phi,rho_ee,abs_rho_eg")?;
        for p in &ellipse {
            writeln!(w, "{},{},{},{},{}", p[0], p[1], p[2], p[3], p[4])?;
        }
        Ok(())
    })?;
    let ellipse_max = ellipse.iter().map(|p| p[3]).fold(0.0, f64::max);
    let summary = json!({ "ladders": ladders, "ellipse_max_rho_ee": ellipse_max });
    out.json("summary.json", &summary)?;
    Ok(summary)
}

pub fn run_scattering(cfg: &ExperimentConfig, out: &mut RunDir) -> CliResult<Value> {
    let backend = cfg.backend(Experiment::Scattering);
    let p = cfg.drive.pulse.as_ref().expect("validated");
    let pulse = PulseSpec { w: p.w, t0: p.t0.unwrap_or(5.0 / p.w), n_ph: p.n_ph, delta_in: p.delta_in };
    let t_max = cfg.t_max(Experiment::Scattering);
    let grid = uniform_grid(t_max, (t_max / cfg.solver.dt).round().max(1.0) as usize);
    let mut reports = Vec::new();
    for &n_a in &cfg.model.n_a {
        let m = effective_model(cfg, n_a)?;
        let space = Arc::new(CompositeSpace::for_model(&m, cfg.model.n_max)?);
        let l = generator(&m, &dissipation(cfg, &m, 0.0), &space)?.with_drive(build_drive_term(&m, &pulse, &space)?)?;
        let (i_out, g2) = output_observables(&m, &pulse, &space)?;
        let sys = OperatorProbe::total_excitation(&space)?;
        let atom = OperatorProbe::atom_population(&space);
        let probes: [&dyn Probe; 4] = [&i_out, &g2, &sys, &atom];
        let psi0 = StateVector::ground_vacuum(&space);
        let r = match backend {
            Backend::Mcwf => mcwf_evolve(&l, &psi0, &grid, &probes, &mcwf_options(cfg))?,
            _ => integrate_me(&l, &psi0.to_density(), &grid, &probes, &me_options(cfg))?,
        };
        let leak = r.diagnostics.max_leakage;
        if leak > cfg.solver.leakage_abort {
            return Err(CliError::Truncation(format!(
                "N_A = {n_a}: top Fock population {leak:e} exceeds solver.leakage_abort = {}; raise model.n_max",
                cfg.solver.leakage_abort
            )));
        }
        let name = format!("scattering_NA{n_a}.csv");
        out.csv(&name, |w| r.write_csv(w))?;
        collect_warnings(out, &name, &r);
        let flux = flux_balance(&r, pulse.n_ph)?;
        let i = r.values("I_out").unwrap();
        let echo = echo_peaks(&r.t, i, pulse.t0, cfg.physical.gamma_tau);
        let g = r.values("G2").unwrap();
        let (k_g2, g2_max) = g.iter().copied().enumerate().fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
        let report = json!({
            "N_A": n_a,
            "flux_balance": flux,
            "echo": echo,
            "g2_max": g2_max,
            "t_g2_max": r.t[k_g2],
            "jumps": r.diagnostics.n_jumps,
        });
        out.json(&format!("scattering_NA{n_a}.json"), &report)?;
        reports.push(report);
    }
    let summary = json!({ "scattering": reports });
    Ok(summary)
}

pub fn run(experiment: Experiment, cfg: &ExperimentConfig, out: &mut RunDir) -> CliResult<Value> {
    match experiment {
        Experiment::Emission => run_emission(cfg, out),
        Experiment::Scattering => run_scattering(cfg, out),
        Experiment::SteadySweep => run_steady_sweep(cfg, out),
        Experiment::Convergence => run_convergence(cfg, out),
        Experiment::Purcell => run_purcell(cfg, out),
    }
}

/// Sequential or parallel, honoring builds without rayon.
pub fn effective_threads(exec: Execution) -> usize {
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return rayon::current_num_threads();
    }
    let _ = exec;
    1
}
