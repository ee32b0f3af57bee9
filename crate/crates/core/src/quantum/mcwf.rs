//! Monte-Carlo wave-function unraveling of a Lindblad generator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::quantum::evolve::{check_grid, reduce, Diagnostics, EvolutionResult, LeakageProbe, Probe, Reduction, Series};
use crate::quantum::liouvillian::Liouvillian;
use crate::quantum::ode::{Dopri5, OdeOptions};
use crate::quantum::state::StateVector;
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McwfOptions {
    pub n_traj: usize,
    pub seed: u64,
    pub ode: OdeOptions,
    /// Jump times are bisected on the dense output to this width.
    pub jump_time_tol: f64,
    pub execution: Execution,
    /// Trajectories handed out per batch; results are folded batch by batch in
    /// trajectory order.
    pub batch: usize,
    pub leakage_warn: f64,
}

impl Default for McwfOptions {
    fn default() -> Self {
        Self {
            n_traj: 1000,
            seed: 0,
            ode: OdeOptions { rtol: 1e-7, atol: 1e-9, ..Default::default() },
            jump_time_tol: 1e-6,
            execution: Execution::default(),
            batch: 256,
            leakage_warn: 1e-3,
        }
    }
}

struct Trajectory {
    /// probe-major: values[p * n_t + k]
    values: Vec<C64>,
    leakage: Vec<f64>,
    max_leakage: f64,
    jumps: u64,
}

/// RNG for trajectory `index`: one ChaCha stream per trajectory under a
/// common seed.
pub fn trajectory_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn norm_sqr(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

fn run_trajectory(
    l: &Liouvillian,
    psi0: &[C64],
    t_grid: &[f64],
    probes: &[&dyn Probe],
    leak: &LeakageProbe,
    opts: &McwfOptions,
    index: usize,
) -> Result<Trajectory> {
    let n = psi0.len();
    let n_t = t_grid.len();
    let mut rng = trajectory_rng(opts.seed, index);
    let mut out = Trajectory { values: vec![C64::new(0.0, 0.0); probes.len() * n_t], leakage: vec![0.0; n_t], max_leakage: 0.0, jumps: 0 };
    let mut unit = vec![C64::new(0.0, 0.0); n];
    let mut record = |k: usize, t: f64, psi: &[C64], out: &mut Trajectory| {
        let s = norm_sqr(psi).sqrt();
        for (u, p) in unit.iter_mut().zip(psi) {
            *u = p / s;
        }
        for (pi, p) in probes.iter().enumerate() {
            out.values[pi * n_t + k] = p.eval_psi(t, &unit);
        }
        let lk = leak.psi(&unit);
        out.leakage[k] = lk;
        out.max_leakage = out.max_leakage.max(lk);
    };

    let minus_i = C64::new(0.0, -1.0);
    let mut scratch = Vec::new();
    let rhs = |t: f64, y: &[C64], dy: &mut [C64]| {
        l.heff_apply(t, y, dy, &mut scratch);
        dy.iter_mut().for_each(|z| *z *= minus_i);
    };
    let mut ode = Dopri5::new(rhs, t_grid[0], psi0.to_vec(), opts.ode);
    let mut buf = vec![C64::new(0.0, 0.0); n];
    let mut jumped = vec![C64::new(0.0, 0.0); n];
    record(0, t_grid[0], psi0, &mut out);
    let t_end = t_grid[n_t - 1];
    let mut threshold: f64 = rng.random();
    let mut k = 1;
    while k < n_t {
        ode.step(t_end)?;
        let (t_lo, t_hi) = (ode.t_old(), ode.t());
        if norm_sqr(ode.y()) > threshold {
            while k < n_t && t_grid[k] <= t_hi {
                if t_grid[k] == t_hi {
                    buf.copy_from_slice(ode.y());
                } else {
                    ode.dense(t_grid[k], &mut buf);
                }
                record(k, t_grid[k], &buf, &mut out);
                k += 1;
            }
            continue;
        }
        let (mut lo, mut hi) = (t_lo, t_hi);
        while hi - lo > opts.jump_time_tol {
            let mid = 0.5 * (lo + hi);
            ode.dense(mid, &mut buf);
            if norm_sqr(&buf) > threshold {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let t_jump = hi;
        while k < n_t && t_grid[k] < t_jump {
            ode.dense(t_grid[k], &mut buf);
            record(k, t_grid[k], &buf, &mut out);
            k += 1;
        }
        if t_jump == t_hi {
            buf.copy_from_slice(ode.y());
        } else {
            ode.dense(t_jump, &mut buf);
        }
        // Channel choice: cumulative weights in jump-index order.
        let weights: Vec<f64> = l
            .jumps()
            .map(|(_, op)| {
                op.matvec(&buf, &mut jumped);
                norm_sqr(&jumped)
            })
            .collect();
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidState(format!("trajectory {index}: norm decayed with no open jump channel")));
        }
        let u = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut chosen = weights.len() - 1;
        for (c, w) in weights.iter().enumerate() {
            acc += w;
            if u < acc {
                chosen = c;
                break;
            }
        }
        let (_, op) = l.jumps().nth(chosen).expect("channel index in range");
        op.matvec(&buf, &mut jumped);
        let s = norm_sqr(&jumped).sqrt();
        jumped.iter_mut().for_each(|z| *z /= s);
        ode.reset(t_jump, &jumped);
        out.jumps += 1;
        threshold = rng.random();
    }
    Ok(out)
}

/// Trajectory average of the probes on `t_grid`, with standard errors.
pub fn mcwf_evolve(
    l: &Liouvillian,
    psi0: &StateVector,
    t_grid: &[f64],
    probes: &[&dyn Probe],
    opts: &McwfOptions,
) -> Result<EvolutionResult> {
    check_grid(t_grid)?;
    if psi0.data.len() != l.dim() {
        return Err(Error::DimensionMismatch { expected: l.dim(), got: psi0.data.len() });
    }
    if (psi0.norm() - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidState(format!("initial state norm {} is not 1", psi0.norm())));
    }
    if opts.n_traj == 0 {
        return Err(Error::InvalidParameter { name: "n_traj", reason: "must be >= 1".into() });
    }
    let n_t = t_grid.len();
    let n_p = probes.len();
    let leak = LeakageProbe::new(l.space());
    // Welford accumulators, updated in trajectory order.
    let mut mean = vec![C64::new(0.0, 0.0); n_p * n_t];
    let mut m2_re = vec![0.0; n_p * n_t];
    let mut m2_im = vec![0.0; n_p * n_t];
    let mut count = 0.0;
    let mut leak_sum = vec![0.0; n_t];
    let mut diag = Diagnostics { n_traj: Some(opts.n_traj), ..Default::default() };
    let mut jumps = 0u64;
    let batch = opts.batch.max(1);
    let mut start = 0;
    while start < opts.n_traj {
        let end = (start + batch).min(opts.n_traj);
        let results = opts
            .execution
            .map(start..end, |i| run_trajectory(l, &psi0.data, t_grid, probes, &leak, opts, i));
        for r in results {
            let tr = r?;
            count += 1.0;
            for (j, v) in tr.values.iter().enumerate() {
                let d = v - mean[j];
                mean[j] += d / count;
                let d2 = v - mean[j];
                m2_re[j] += d.re * d2.re;
                m2_im[j] += d.im * d2.im;
            }
            for (a, b) in leak_sum.iter_mut().zip(&tr.leakage) {
                *a += b;
            }
            diag.max_leakage = diag.max_leakage.max(tr.max_leakage);
            jumps += tr.jumps;
        }
        start = end;
    }
    let nf = opts.n_traj as f64;
    let var = |m2: f64| if opts.n_traj < 2 { 0.0 } else { m2.max(0.0) / (nf - 1.0) };
    let series = probes
        .iter()
        .enumerate()
        .map(|(p, probe)| {
            let mut values = Vec::with_capacity(n_t);
            let mut stderr = Vec::with_capacity(n_t);
            for k in 0..n_t {
                let j = p * n_t + k;
                values.push(reduce(mean[j], probe.reduction()));
                let v = match probe.reduction() {
                    Reduction::Real => var(m2_re[j]),
                    Reduction::Abs => var(m2_re[j]) + var(m2_im[j]),
                };
                stderr.push((v / nf).sqrt());
            }
            Series { name: probe.name().to_string(), values, stderr: Some(stderr) }
        })
        .collect();
    diag.n_jumps = Some(jumps);
    if diag.max_leakage > opts.leakage_warn {
        diag.warnings.push(format!(
            "truncation: top Fock level population reached {:.3e} (threshold {:.1e})",
            diag.max_leakage, opts.leakage_warn
        ));
    }
    Ok(EvolutionResult {
        t: t_grid.to_vec(),
        series,
        leakage: Some(leak_sum.into_iter().map(|s| s / nf).collect()),
        diagnostics: diag,
    })
}
