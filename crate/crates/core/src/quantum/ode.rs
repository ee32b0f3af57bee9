//! Dormand-Prince 5(4) with step-size control and the fourth-order dense output.

use crate::error::{Error, Result};
use crate::C64;

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
const A6: [f64; 5] = [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0];
const B: [f64; 6] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rtol: 1e-8, atol: 1e-10, h_max: f64::INFINITY, max_steps: 50_000_000 }
    }
}

/// Adaptive integrator for y' = f(t, y) over complex vectors.
///
/// `step` advances by one accepted step; afterwards `dense` interpolates
/// anywhere inside the step just taken.
pub struct Dopri5<F> {
    f: F,
    opts: OdeOptions,
    t: f64,
    y: Vec<C64>,
    h: f64,
    k: [Vec<C64>; 7],
    stage: Vec<C64>,
    y_new: Vec<C64>,
    fsal: bool,
    t_old: f64,
    h_old: f64,
    rcont: [Vec<C64>; 5],
    pub accepted: usize,
    pub rejected: usize,
}

fn axpy_stage(y: &[C64], h: f64, coeffs: &[f64], k: &[Vec<C64>; 7], out: &mut [C64]) {
    out.copy_from_slice(y);
    for (j, &a) in coeffs.iter().enumerate() {
        if a != 0.0 {
            let s = h * a;
            for (o, kk) in out.iter_mut().zip(&k[j]) {
                *o += kk * s;
            }
        }
    }
}

impl<F: FnMut(f64, &[C64], &mut [C64])> Dopri5<F> {
    pub fn new(f: F, t0: f64, y0: Vec<C64>, opts: OdeOptions) -> Self {
        let n = y0.len();
        let z = || vec![C64::new(0.0, 0.0); n];
        Self {
            f,
            opts,
            t: t0,
            y: y0,
            h: 0.0,
            k: [z(), z(), z(), z(), z(), z(), z()],
            stage: z(),
            y_new: z(),
            fsal: false,
            t_old: t0,
            h_old: 0.0,
            rcont: [z(), z(), z(), z(), z()],
            accepted: 0,
            rejected: 0,
        }
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> &[C64] {
        &self.y
    }

    /// Start of the most recent accepted step.
    pub fn t_old(&self) -> f64 {
        self.t_old
    }

    /// Replace the state (e.g. after a quantum jump); derivative history is discarded.
    pub fn reset(&mut self, t: f64, y: &[C64]) {
        self.t = t;
        self.t_old = t;
        self.h_old = 0.0;
        self.y.copy_from_slice(y);
        self.fsal = false;
    }

    fn weight(&self, a: C64, b: C64) -> f64 {
        self.opts.atol + self.opts.rtol * a.norm().max(b.norm())
    }

    fn initial_step(&mut self, span: f64) -> f64 {
        let n = self.y.len().max(1) as f64;
        let d0 = (self.y.iter().map(|y| (y.norm() / self.weight(*y, *y)).powi(2)).sum::<f64>() / n).sqrt();
        let d1 = (self.y.iter().zip(&self.k[0]).map(|(y, k)| (k.norm() / self.weight(*y, *y)).powi(2)).sum::<f64>() / n).sqrt();
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let h0 = h0.min(span);
        for (s, (y, k)) in self.stage.iter_mut().zip(self.y.iter().zip(&self.k[0])) {
            *s = y + k * h0;
        }
        (self.f)(self.t + h0, &self.stage, &mut self.k[1]);
        let d2 = (self
            .y
            .iter()
            .zip(self.k[1].iter().zip(&self.k[0]))
            .map(|(y, (k1, k0))| ((k1 - k0).norm() / self.weight(*y, *y)).powi(2))
            .sum::<f64>()
            / n)
            .sqrt()
            / h0;
        let m = d1.max(d2);
        let h1 = if m <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / m).powf(0.2) };
        (100.0 * h0).min(h1).min(self.opts.h_max)
    }

    /// Take one accepted step without passing `t_limit`.
    pub fn step(&mut self, t_limit: f64) -> Result<()> {
        let span = t_limit - self.t;
        if span <= 0.0 {
            return Ok(());
        }
        if !self.fsal {
            (self.f)(self.t, &self.y, &mut self.k[0]);
            self.fsal = true;
            if self.h == 0.0 {
                self.h = self.initial_step(span);
            }
        }
        loop {
            if self.accepted + self.rejected >= self.opts.max_steps {
                return Err(Error::StepSizeUnderflow { t: self.t, h: self.h });
            }
            let last = self.h >= span;
            let h = if last { span } else { self.h };
            if h < 1e-14 * self.t.abs().max(1.0) {
                return Err(Error::StepSizeUnderflow { t: self.t, h });
            }
            let t = self.t;
            let rows: [&[f64]; 5] = [&A2, &A3, &A4, &A5, &A6];
            for (s, coeffs) in rows.iter().enumerate() {
                axpy_stage(&self.y, h, coeffs, &self.k, &mut self.stage);
                let (_, rest) = self.k.split_at_mut(s + 1);
                (self.f)(t + C[s + 1] * h, &self.stage, &mut rest[0]);
            }
            axpy_stage(&self.y, h, &B, &self.k, &mut self.y_new);
            {
                let (_, rest) = self.k.split_at_mut(6);
                (self.f)(t + h, &self.y_new, &mut rest[0]);
            }
            let n = self.y.len().max(1) as f64;
            let mut acc = 0.0;
            for i in 0..self.y.len() {
                let mut e = C64::new(0.0, 0.0);
                for (j, &ej) in E.iter().enumerate() {
                    if ej != 0.0 {
                        e += self.k[j][i] * ej;
                    }
                }
                let w = self.weight(self.y[i], self.y_new[i]);
                acc += ((e * h).norm() / w).powi(2);
            }
            let err = (acc / n).sqrt();
            if err <= 1.0 {
                self.prepare_dense(h);
                self.t_old = t;
                self.h_old = h;
                self.t = if last { t_limit } else { t + h };
                std::mem::swap(&mut self.y, &mut self.y_new);
                self.k.swap(0, 6);
                self.accepted += 1;
                let fac = if err == 0.0 { 10.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 10.0) };
                if !last || h * fac > self.h {
                    self.h = (h * fac).min(self.opts.h_max);
                }
                return Ok(());
            }
            self.rejected += 1;
            self.h = h * (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
        }
    }

    fn prepare_dense(&mut self, h: f64) {
        let [r0, r1, r2, r3, r4] = &mut self.rcont;
        for i in 0..self.y.len() {
            let y0 = self.y[i];
            let y1 = self.y_new[i];
            let dy = y1 - y0;
            let bspl = self.k[0][i] * h - dy;
            r0[i] = y0;
            r1[i] = dy;
            r2[i] = bspl;
            r3[i] = dy - self.k[6][i] * h - bspl;
            let mut s = C64::new(0.0, 0.0);
            for (j, &dj) in D.iter().enumerate() {
                if dj != 0.0 {
                    s += self.k[j][i] * dj;
                }
            }
            r4[i] = s * h;
        }
    }

    /// State at `t` inside the last accepted step.
    pub fn dense(&self, t: f64, out: &mut [C64]) {
        if self.h_old == 0.0 {
            out.copy_from_slice(&self.y);
            return;
        }
        let th = ((t - self.t_old) / self.h_old).clamp(0.0, 1.0);
        let th1 = 1.0 - th;
        let [r0, r1, r2, r3, r4] = &self.rcont;
        for i in 0..out.len() {
            out[i] = r0[i] + (r1[i] + (r2[i] + (r3[i] + r4[i] * th1) * th) * th1) * th;
        }
    }
}
