use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::quantum::evolve::evolve_state;
use crate::quantum::liouvillian::Liouvillian;
use crate::quantum::ode::OdeOptions;
use crate::quantum::state::DensityMatrix;
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyOptions {
    /// Largest Hilbert dimension solved through the dense dim^2 x dim^2 generator.
    pub dense_max_dim: usize,
    /// Second-smallest singular value below this times the largest one means
    /// the kernel is degenerate.
    pub uniqueness_rtol: f64,
    pub residual_tol: f64,
    /// Restart length and matvec budget of the Krylov solve used above the
    /// dense cap.
    pub krylov_restart: usize,
    pub krylov_max_matvec: usize,
    /// Time budget of the integration fallback.
    pub fallback_t_max: f64,
}

impl Default for SteadyOptions {
    fn default() -> Self {
        Self { dense_max_dim: 24, uniqueness_rtol: 1e-8, residual_tol: 1e-10, krylov_restart: 40, krylov_max_matvec: 20_000, fallback_t_max: 1e5 }
    }
}

fn residual(l: &Liouvillian, rho: &DensityMatrix) -> f64 {
    let mut out = vec![C64::new(0.0, 0.0); rho.data.len()];
    l.apply(0.0, &rho.data, &mut out, &mut Vec::new());
    out.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn tidy(mut rho: DensityMatrix) -> DensityMatrix {
    let n = rho.dim();
    for i in 0..n {
        for j in i..n {
            let a = 0.5 * (rho.data[i * n + j] + rho.data[j * n + i].conj());
            rho.data[i * n + j] = a;
            rho.data[j * n + i] = a.conj();
        }
    }
    let tr = rho.trace().re;
    rho.data.iter_mut().for_each(|z| *z /= tr);
    rho
}

/// Stationary state of a time-independent generator.
pub fn steady_state(l: &Liouvillian, opts: &SteadyOptions) -> Result<DensityMatrix> {
    if l.is_time_dependent() {
        return Err(Error::InvalidParameter { name: "liouvillian", reason: "steady state needs a time-independent generator".into() });
    }
    if l.dim() <= opts.dense_max_dim {
        return dense_steady_state(l, opts);
    }
    let n = l.dim();
    let mut data = vec![C64::new(0.0, 0.0); n * n];
    for i in 0..n {
        data[i * n + i] = C64::new(1.0 / n as f64, 0.0);
    }
    let start = DensityMatrix { space: l.space().clone(), data };
    match krylov_steady_state(l, &start, opts) {
        Ok(rho) => Ok(rho),
        Err(near) => integrated_steady_state(l, near, opts),
    }
}

fn dense_steady_state(l: &Liouvillian, opts: &SteadyOptions) -> Result<DensityMatrix> {
    let n = l.dim();
    let s = l.to_dense(0.0);
    let scale = s.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
    let sv = s.clone().svd(false, false).singular_values;
    let mut sorted: Vec<f64> = sv.iter().copied().collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let sigma_max = *sorted.last().unwrap();
    if sorted.len() > 1 && sorted[1] <= opts.uniqueness_rtol * sigma_max {
        return Err(Error::NonUniqueSteadyState { sigma: sorted[1], scale: sigma_max });
    }
    // Row (0,0) of the generator is minus the sum of the other diagonal rows,
    // so it can carry the trace condition instead.
    let mut a: DMatrix<C64> = s;
    for c in 0..n * n {
        a[(0, c)] = C64::new(0.0, 0.0);
    }
    for i in 0..n {
        a[(0, i * n + i)] = C64::new(1.0, 0.0);
    }
    let mut b = DVector::zeros(n * n);
    b[0] = C64::new(1.0, 0.0);
    let x = a.lu().solve(&b).ok_or(Error::NonUniqueSteadyState { sigma: 0.0, scale: sigma_max })?;
    let rho = tidy(DensityMatrix { space: l.space().clone(), data: x.iter().copied().collect() });
    let r = residual(l, &rho);
    if r > opts.residual_tol * scale.max(1.0) {
        return Err(Error::SteadyStateResidual(r));
    }
    Ok(rho)
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm2(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Inverse of the shifted coherent part X -> -i H_eff X + i X H_eff^dag - sigma X,
/// applied through a Schur form of H_eff (Bartels-Stewart).
struct CoherentInverse {
    n: usize,
    q: DMatrix<C64>,
    /// -i T - sigma/2, upper triangular
    a: DMatrix<C64>,
    /// i T^dag - sigma/2, lower triangular
    b: DMatrix<C64>,
}

impl CoherentInverse {
    fn new(l: &Liouvillian) -> Option<Self> {
        let n = l.dim();
        let heff = l.effective_hamiltonian().to_dense();
        let (q, t) = nalgebra::Schur::try_new(heff, 1e-14, 10_000)?.unpack();
        // decay rates set the shift; pure Hamiltonian blocks get unit scale
        let sigma = (0..n).map(|i| -t[(i, i)].im).fold(0.0, f64::max).max(1e-12);
        let half = C64::new(0.5 * sigma, 0.0);
        let i = C64::i();
        let a = t.map(|z| -i * z) - DMatrix::from_diagonal_element(n, n, half);
        let b = t.adjoint().map(|z| i * z) - DMatrix::from_diagonal_element(n, n, half);
        Some(Self { n, q, a, b })
    }

    fn apply(&self, r: &[C64]) -> Vec<C64> {
        let n = self.n;
        let rt = self.q.adjoint() * DMatrix::from_row_slice(n, n, r) * &self.q;
        let mut x = DMatrix::<C64>::zeros(n, n);
        for j in (0..n).rev() {
            let mut rhs: Vec<C64> = rt.column(j).iter().copied().collect();
            for k in j + 1..n {
                let bkj = self.b[(k, j)];
                if bkj != C64::new(0.0, 0.0) {
                    rhs.iter_mut().zip(x.column(k).iter()).for_each(|(y, xk)| *y -= xk * bkj);
                }
            }
            let shift = self.b[(j, j)];
            for i in (0..n).rev() {
                let mut s = rhs[i];
                for c in i + 1..n {
                    s -= self.a[(i, c)] * x[(c, j)];
                }
                x[(i, j)] = s / (self.a[(i, i)] + shift);
            }
        }
        let x = &self.q * x * self.q.adjoint();
        let mut out = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = x[(i, j)];
            }
        }
        out
    }
}

/// Right-preconditioned restarted GMRES on L x = -L rho. Iterates are
/// renormalized to unit trace at each restart. On failure the best iterate
/// is handed back for the integration fallback.
fn krylov_steady_state(l: &Liouvillian, rho0: &DensityMatrix, opts: &SteadyOptions) -> std::result::Result<DensityMatrix, DensityMatrix> {
    let nn = rho0.data.len();
    let n = rho0.dim();
    let m = opts.krylov_restart.max(2);
    let pre = CoherentInverse::new(l);
    let precondition = |v: &[C64]| match &pre {
        Some(p) => p.apply(v),
        None => v.to_vec(),
    };
    let mut scratch = Vec::new();
    let mut rho = rho0.clone();
    let mut r = vec![C64::new(0.0, 0.0); nn];
    let mut matvecs = 0;
    let mut best = f64::INFINITY;
    loop {
        let tr: C64 = (0..n).map(|i| rho.data[i * n + i]).sum();
        rho.data.iter_mut().for_each(|z| *z /= tr);
        l.apply(0.0, &rho.data, &mut r, &mut scratch);
        matvecs += 1;
        r.iter_mut().for_each(|z| *z = -*z);
        let beta = norm2(&r);
        let res = r.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if res <= opts.residual_tol {
            return Ok(tidy(rho));
        }
        // a restart cycle that gains less than 1% is stagnation
        if matvecs >= opts.krylov_max_matvec || res > 0.99 * best {
            return Err(tidy(rho));
        }
        best = best.min(res);

        let mut v: Vec<Vec<C64>> = Vec::with_capacity(m + 1);
        v.push(r.iter().map(|z| z / beta).collect());
        let mut h = vec![vec![C64::new(0.0, 0.0); m]; m + 1];
        let mut cs = vec![0.0; m];
        let mut sn = vec![C64::new(0.0, 0.0); m];
        let mut g = vec![C64::new(0.0, 0.0); m + 1];
        g[0] = C64::new(beta, 0.0);
        let mut k = 0;
        while k < m && matvecs < opts.krylov_max_matvec {
            let z = precondition(&v[k]);
            let mut w = vec![C64::new(0.0, 0.0); nn];
            l.apply(0.0, &z, &mut w, &mut scratch);
            matvecs += 1;
            for (i, vi) in v.iter().enumerate() {
                let hik = dot(vi, &w);
                w.iter_mut().zip(vi).for_each(|(x, y)| *x -= hik * y);
                h[i][k] = hik;
            }
            let hn = norm2(&w);
            h[k + 1][k] = C64::new(hn, 0.0);
            for i in 0..k {
                let (a, b) = (h[i][k], h[i + 1][k]);
                h[i][k] = cs[i] * a + sn[i] * b;
                h[i + 1][k] = -sn[i].conj() * a + cs[i] * b;
            }
            let (a, b) = (h[k][k], h[k + 1][k]);
            let nrm = (a.norm_sqr() + b.norm_sqr()).sqrt();
            if a.norm() == 0.0 {
                cs[k] = 0.0;
                sn[k] = C64::new(1.0, 0.0);
            } else {
                cs[k] = a.norm() / nrm;
                sn[k] = a / a.norm() * b.conj() / nrm;
            }
            h[k][k] = cs[k] * a + sn[k] * b;
            h[k + 1][k] = C64::new(0.0, 0.0);
            g[k + 1] = -sn[k].conj() * g[k];
            g[k] *= cs[k];
            k += 1;
            // the 2-norm bounds the max-norm residual checked at restart
            if g[k].norm() <= 0.1 * opts.residual_tol || hn == 0.0 {
                break;
            }
            v.push(w.iter().map(|z| z / hn).collect());
        }
        let mut y = vec![C64::new(0.0, 0.0); k];
        for i in (0..k).rev() {
            let s: C64 = (i + 1..k).map(|j| h[i][j] * y[j]).sum();
            y[i] = (g[i] - s) / h[i][i];
        }
        let mut u = vec![C64::new(0.0, 0.0); nn];
        for (yi, vi) in y.iter().zip(&v) {
            u.iter_mut().zip(vi).for_each(|(x, b)| *x += yi * b);
        }
        rho.data.iter_mut().zip(precondition(&u)).for_each(|(x, d)| *x += d);
    }
}

fn integrated_steady_state(l: &Liouvillian, start: DensityMatrix, opts: &SteadyOptions) -> Result<DensityMatrix> {
    let mut rho = start;
    let ode = OdeOptions { rtol: 1e-10, atol: 1e-13, ..Default::default() };
    let (mut t, mut dt) = (0.0, 1.0);
    loop {
        rho = tidy(evolve_state(l, &rho, t, t + dt, &ode)?);
        t += dt;
        let r = residual(l, &rho);
        if r <= opts.residual_tol {
            return Ok(rho);
        }
        if t >= opts.fallback_t_max {
            return Err(Error::SteadyStateResidual(r));
        }
        dt *= 2.0;
    }
}
