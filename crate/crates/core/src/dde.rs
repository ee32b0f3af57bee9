//! Single-excitation amplitude of an atom in front of a mirror.
//!
//! eps'(t) = -Gamma/2 eps(t) + Gamma/2 e^{i phi} eps(t - tau) Theta(t - tau), eps(0) = 1.

use std::io::{self, Write};

use crate::error::{positive, Error, Result};
use crate::C64;

/// Gauss-Legendre nodes and weights on [-1, 1], 8 points.
const GL8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_3, 0.101_228_536_290_376_3),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_5),
    (-0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362_0),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362_0),
    (0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_5),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_3),
];

const MIN_STEPS_PER_DELAY: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeSeries {
    pub t: Vec<f64>,
    pub eps: Vec<C64>,
    pub population: Vec<f64>,
    pub tau: f64,
}

impl AmplitudeSeries {
    pub fn dt(&self) -> f64 {
        self.t[1] - self.t[0]
    }

    /// Grid points per delay.
    pub fn steps_per_delay(&self) -> usize {
        (self.tau / self.dt()).round() as usize
    }

    /// Population at arbitrary `t` by linear interpolation on the grid.
    pub fn population_at(&self, t: f64) -> f64 {
        let x = t / self.dt();
        let i = (x.floor() as usize).min(self.t.len() - 2);
        let f = x - i as f64;
        self.population[i] * (1.0 - f) + self.population[i + 1] * f
    }

    /// First time where the population has moved by less than `tol` against
    /// its value one delay earlier, for every point of a full delay window.
    /// Returns the time and the population there.
    pub fn plateau(&self, tol: f64) -> Option<(f64, f64)> {
        let m = self.steps_per_delay();
        let mut run = 0usize;
        for j in m..self.population.len() {
            if (self.population[j] - self.population[j - m]).abs() < tol {
                run += 1;
                if run > m {
                    return Some((self.t[j], self.population[j]));
                }
            } else {
                run = 0;
            }
        }
        None
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,Re(eps),Im(eps),population")?;
        for ((t, e), p) in self.t.iter().zip(&self.eps).zip(&self.population) {
            writeln!(w, "{t},{},{},{p}", e.re, e.im)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayEquation {
    pub gamma: f64,
    pub tau: f64,
    pub phi: f64,
    /// With the mirror removed the atom decays as e^{-Gamma t}.
    pub feedback: bool,
}

impl DelayEquation {
    pub fn new(gamma: f64, tau: f64, phi: f64) -> Result<Self> {
        positive("Gamma", gamma)?;
        positive("tau", tau)?;
        if !phi.is_finite() {
            return Err(Error::InvalidParameter { name: "phi", reason: "must be finite".into() });
        }
        Ok(Self { gamma, tau, phi, feedback: true })
    }

    pub fn without_feedback(mut self) -> Self {
        self.feedback = false;
        self
    }

    /// Fixed-step exponential integrator on a delay-commensurate grid.
    ///
    /// The linear part is integrated exactly; the delayed forcing is read at
    /// exact grid indices one delay back and represented by a cubic Lagrange
    /// interpolant whose stencil never crosses a multiple of tau, where the
    /// history has derivative kinks.
    pub fn solve(&self, t_max: f64, dt: f64) -> Result<AmplitudeSeries> {
        positive("dt", dt)?;
        if !(t_max.is_finite() && t_max >= self.tau) {
            return Err(Error::InvalidParameter { name: "t_max", reason: format!("must be >= tau = {}", self.tau) });
        }
        if dt > self.tau {
            return Err(Error::Resolution { dt, tau: self.tau, min_steps: MIN_STEPS_PER_DELAY });
        }
        let ratio = self.tau / dt;
        let m = ratio.round() as usize;
        if (ratio - m as f64).abs() > 1e-9 * ratio {
            return Err(Error::Grid { dt, tau: self.tau });
        }
        if m < MIN_STEPS_PER_DELAY {
            return Err(Error::Resolution { dt, tau: self.tau, min_steps: MIN_STEPS_PER_DELAY });
        }
        let h = self.tau / m as f64;
        let n = (t_max / h - 1e-9).ceil() as usize;
        let lambda = 0.5 * self.gamma;
        let decay = (-lambda * h).exp();
        let coupling = C64::from_polar(0.5 * self.gamma, self.phi);
        let weights = forcing_weights(lambda, h);

        let mut eps = Vec::with_capacity(n + 1);
        for j in 0..=n.min(m) {
            eps.push(C64::new((-lambda * j as f64 * h).exp(), 0.0));
        }
        for j in m..n {
            let next = if self.feedback {
                let i = j - m;
                let lo = (i / m) * m;
                let s0 = i.saturating_sub(1).clamp(lo, lo + m - 3);
                let w = &weights[i - s0];
                let f: C64 = (0..4).map(|q| eps[s0 + q] * w[q]).sum();
                eps[j] * decay + coupling * f
            } else {
                C64::new((-lambda * (j + 1) as f64 * h).exp(), 0.0)
            };
            eps.push(next);
        }
        let t = (0..=n).map(|j| j as f64 * h).collect();
        let population = eps.iter().map(|e| e.norm_sqr()).collect();
        Ok(AmplitudeSeries { t, eps, population, tau: self.tau })
    }
}

/// `w[o][q]` integrates e^{-lambda (h - s)} against the Lagrange basis
/// polynomial of node `q` (nodes at 0, h, 2h, 3h) over [o h, (o + 1) h].
fn forcing_weights(lambda: f64, h: f64) -> [[f64; 4]; 3] {
    let mut w = [[0.0; 4]; 3];
    for (o, row) in w.iter_mut().enumerate() {
        for &(x, wx) in &GL8 {
            let sigma = 0.5 * (x + 1.0);
            let u = o as f64 + sigma;
            let kernel = (-lambda * h * (1.0 - sigma)).exp() * 0.5 * wx * h;
            for (q, wq) in row.iter_mut().enumerate() {
                let mut basis = 1.0;
                for r in 0..4 {
                    if r != q {
                        basis *= (u - r as f64) / (q as f64 - r as f64);
                    }
                }
                *wq += kernel * basis;
            }
        }
    }
    w
}

pub fn solve_delay_ode(gamma: f64, tau: f64, phi: f64, t_max: f64, dt: f64) -> Result<AmplitudeSeries> {
    DelayEquation::new(gamma, tau, phi)?.solve(t_max, dt)
}

/// Closed-form amplitude as a finite sum over delay windows.
pub fn analytic_series(gamma: f64, tau: f64, phi: f64, t: f64) -> Result<C64> {
    positive("Gamma", gamma)?;
    positive("tau", tau)?;
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidParameter { name: "t", reason: format!("must be >= 0, got {t}") });
    }
    let n_max = (t / tau).floor() as usize;
    let ln_half_gamma = (0.5 * gamma).ln();
    let mut ln_fact = 0.0;
    let mut sum = C64::new((-0.5 * gamma * t).exp(), 0.0);
    for n in 1..=n_max {
        ln_fact += (n as f64).ln();
        let s = t - n as f64 * tau;
        if s <= 0.0 {
            break;
        }
        let nf = n as f64;
        let ln_mag = nf * ln_half_gamma + nf * s.ln() - ln_fact - 0.5 * gamma * s;
        sum += C64::from_polar(ln_mag.exp(), nf * phi);
    }
    Ok(sum)
}

/// Population decay rate in the Markovian limit, 2 Gamma sin^2(phi/2).
pub fn markovian_rate(gamma: f64, phi: f64) -> f64 {
    let s = (0.5 * phi).sin();
    2.0 * gamma * s * s
}

/// Bad-cavity population decay rate 4 g0^2 / gamma.
pub fn purcell_rate(g0: f64, gamma: f64) -> Result<f64> {
    positive("gamma", gamma)?;
    Ok(4.0 * g0 * g0 / gamma)
}

/// Least-squares slope of ln p(t), returned as a positive decay rate.
pub fn fit_decay_rate(t: &[f64], population: &[f64]) -> Result<f64> {
    let pts: Vec<(f64, f64)> = t
        .iter()
        .zip(population)
        .filter(|(_, &p)| p > 0.0)
        .map(|(&t, &p)| (t, p.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::InvalidParameter { name: "population", reason: "need two positive samples".into() });
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt) * (p.0 - mt)).sum();
    Ok(-sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn weights_integrate_polynomials_exactly_without_decay() {
        let w = forcing_weights(0.0, 1.0);
        for (o, row) in w.iter().enumerate() {
            // integral of u^2 over [o, o + 1] from nodal values q^2
            let got: f64 = (0..4).map(|q| row[q] * (q * q) as f64).sum();
            let want = ((o + 1).pow(3) - o.pow(3)) as f64 / 3.0;
            assert!((got - want).abs() < 1e-13);
        }
    }

    #[test]
    fn pre_feedback_window_is_exact() {
        let s = solve_delay_ode(1.0, 2.0, 1.3, 2.0, 0.01).unwrap();
        for (t, p) in s.t.iter().zip(&s.population) {
            if *t < 2.0 {
                assert!((p - (-t).exp()).abs() <= 1e-10);
            }
        }
        assert_eq!(s.eps[0], C64::new(1.0, 0.0));
    }

    #[test]
    fn grid_errors() {
        assert!(matches!(solve_delay_ode(1.0, 2.0, 0.0, 4.0, 0.3), Err(Error::Grid { .. })));
        assert!(matches!(solve_delay_ode(1.0, 2.0, 0.0, 4.0, 3.0), Err(Error::Resolution { .. })));
        assert!(matches!(solve_delay_ode(1.0, 2.0, 0.0, 4.0, 1.0), Err(Error::Resolution { .. })));
    }

    #[test]
    fn analytic_single_term_before_delay() {
        let e = analytic_series(1.0, 2.0, 0.4, 1.5).unwrap();
        assert!((e - C64::new((-0.75f64).exp(), 0.0)).norm() < 1e-15);
    }

    #[test]
    fn no_mirror_is_pure_decay() {
        let s = DelayEquation::new(1.0, 2.0, PI).unwrap().without_feedback().solve(10.0, 0.01).unwrap();
        for (t, p) in s.t.iter().zip(&s.population) {
            assert!((p - (-t).exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn rates() {
        assert!((markovian_rate(1.0, PI) - 2.0).abs() < 1e-15);
        assert!(markovian_rate(1.0, 2.0 * PI).abs() < 1e-15);
        assert!((markovian_rate(1.0, PI / 2.0) - 1.0).abs() < 1e-15);
        assert_eq!(purcell_rate(0.0, 2.0).unwrap(), 0.0);
        assert!(purcell_rate(1.0, 0.0).is_err());
    }

    #[test]
    fn fit_recovers_exponential() {
        let t: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let p: Vec<f64> = t.iter().map(|t| 0.9 * (-1.7 * t).exp()).collect();
        assert!((fit_decay_rate(&t, &p).unwrap() - 1.7).abs() < 1e-12);
    }
}
