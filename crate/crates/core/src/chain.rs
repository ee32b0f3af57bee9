//! Discretized semi-infinite waveguide: a tight-binding chain with a hard wall
//! before site 1 and the atom coupled at site n0, evolved exactly in sectors
//! of at most two quanta.
//!
//! Lattice units: spacing 1, hopping J = 1. Frequencies are written in the
//! frame rotating at the atomic frequency omega0 = omega_c - 2 J cos k0, so the
//! atom carries no energy and every site sits at 2 J cos k0.

use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{positive, Error, Result};
use crate::model::mode_coupling;
use crate::model::derive_params;
use crate::quantum::evolve::{check_grid, Diagnostics, EvolutionResult, Series};
use crate::sparse::CsrMatrix;
use crate::C64;

/// Allowed window for the resonant wavevector, in units of pi.
pub const DEFAULT_BAND_WINDOW: (f64, f64) = (0.2, 0.8);
pub const DEFAULT_SECTOR_CAP: usize = 2_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    #[serde(rename = "N")]
    pub n_sites: usize,
    pub omega_c: f64,
    #[serde(rename = "J")]
    pub j: f64,
    pub g_disc: f64,
    pub n0: usize,
    pub k0: f64,
    #[serde(rename = "N_A_sites")]
    pub n_a_sites: usize,
    /// Lattice time per unit of physical time.
    pub time_scale: f64,
}

impl ChainSpec {
    pub fn group_velocity(&self) -> f64 {
        2.0 * self.j * self.k0.sin()
    }

    pub fn site_energy(&self) -> f64 {
        2.0 * self.j * self.k0.cos()
    }

    /// Round-trip delay in lattice time.
    pub fn lattice_delay(&self) -> f64 {
        2.0 * self.n0 as f64 / self.group_velocity()
    }

    /// Lattice decay rate g_disc^2 * 2 / v.
    pub fn lattice_gamma(&self) -> f64 {
        2.0 * self.g_disc * self.g_disc / self.group_velocity()
    }

    /// Round-trip phase 2 k0 n0.
    pub fn phase(&self) -> f64 {
        2.0 * self.k0 * self.n0 as f64
    }

    /// Latest physical time before anything reflected off the far end of the
    /// chain can return to the atom.
    pub fn wrap_free_time(&self) -> f64 {
        2.0 * (self.n_sites - self.n0) as f64 / (2.0 * self.j) / self.time_scale
    }

    pub fn validate(&self) -> Result<()> {
        positive("J", self.j)?;
        if !(self.g_disc.is_finite() && self.g_disc >= 0.0) {
            return Err(Error::InvalidParameter { name: "g_disc", reason: "must be >= 0".into() });
        }
        positive("time_scale", self.time_scale)?;
        if !(1 <= self.n0 && self.n0 <= self.n_a_sites && self.n_a_sites < self.n_sites) {
            return Err(Error::InvalidParameter {
                name: "N_A_sites",
                reason: format!("need 1 <= n0 ({}) <= N_A_sites ({}) < N ({})", self.n0, self.n_a_sites, self.n_sites),
            });
        }
        Ok(())
    }
}

/// Lattice parameters reproducing (Gamma, tau, phi) with `sites_per_delay`
/// sites between the wall and the atom, long enough that nothing reflected at
/// the far end returns to the atom before `t_window`.
///
/// Admissible wavevectors are k0 = (phi + 2 pi m) / (2 n0) inside `window`
/// (units of pi); the branch nearest the band centre is used.
pub fn calibrate_chain(
    gamma: f64,
    tau: f64,
    phi: f64,
    sites_per_delay: usize,
    t_window: f64,
    window: (f64, f64),
) -> Result<ChainSpec> {
    positive("Gamma", gamma)?;
    positive("tau", tau)?;
    if !(t_window.is_finite() && t_window >= 0.0) {
        return Err(Error::InvalidParameter { name: "t_window", reason: "must be >= 0".into() });
    }
    if sites_per_delay == 0 {
        return Err(Error::Calibration("sites_per_delay must be >= 1".into()));
    }
    let n0 = sites_per_delay as f64;
    let (lo, hi) = (window.0 * PI, window.1 * PI);
    let m_lo = ((2.0 * n0 * lo - phi) / (2.0 * PI)).ceil() as i64;
    let m_hi = ((2.0 * n0 * hi - phi) / (2.0 * PI)).floor() as i64;
    let k0 = (m_lo..=m_hi)
        .map(|m| (phi + 2.0 * PI * m as f64) / (2.0 * n0))
        .filter(|k| *k >= lo && *k <= hi)
        .fold(None, |best: Option<f64>, k| match best {
            // ties go to the smaller wavevector
            Some(b) if (k - 0.5 * PI).abs() >= (b - 0.5 * PI).abs() - 1e-12 => Some(b),
            _ => Some(k),
        })
        .ok_or_else(|| {
            Error::Calibration(format!(
                "no branch (phi + 2 pi m) / (2 n0) with n0 = {sites_per_delay} falls inside [{}, {}] pi",
                window.0, window.1
            ))
        })?;
    let j = 1.0;
    let v = 2.0 * j * k0.sin();
    let time_scale = (2.0 * n0 / v) / tau;
    let gamma_lattice = gamma / time_scale;
    let n_sites = sites_per_delay + (2.0 * j * t_window * time_scale).ceil() as usize + 20;
    Ok(ChainSpec {
        n_sites,
        omega_c: 0.0,
        j,
        g_disc: (0.5 * gamma_lattice * v).sqrt(),
        n0: sites_per_delay,
        k0,
        n_a_sites: (2 * sites_per_delay).min(n_sites - 1),
        time_scale,
    })
}

/// Atom state and photon positions (sites 1..=N, with repetition).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Occupation {
    pub excited: bool,
    pub sites: Vec<usize>,
}

impl Occupation {
    pub fn atom_excited() -> Self {
        Self { excited: true, sites: Vec::new() }
    }

    pub fn photon(site: usize) -> Self {
        Self { excited: false, sites: vec![site] }
    }
}

type Key = (bool, usize, usize);

/// Photon positions padded with zeros (site 0 does not exist), sorted.
fn key_of(excited: bool, sites: &[usize]) -> Option<Key> {
    let mut s = sites.to_vec();
    s.sort_unstable();
    match s.len() {
        0 => Some((excited, 0, 0)),
        1 => Some((excited, 0, s[0])),
        2 => Some((excited, s[0], s[1])),
        _ => None,
    }
}

fn sites_of(key: &Key) -> Vec<usize> {
    [key.1, key.2].into_iter().filter(|&s| s > 0).collect()
}

/// Basis of all states with at most `max_exc` quanta.
pub struct SectorBasis {
    states: Vec<Key>,
    index: HashMap<Key, usize>,
}

impl SectorBasis {
    pub fn new(n_sites: usize, max_exc: usize, cap: usize) -> Result<Self> {
        if !(1..=2).contains(&max_exc) {
            return Err(Error::InvalidParameter { name: "max_excitations", reason: "must be 1 or 2".into() });
        }
        let n = n_sites;
        let dim = 2 + n + if max_exc == 2 { n + n * (n + 1) / 2 } else { 0 };
        if dim > cap {
            return Err(Error::SectorTooLarge { dim, cap });
        }
        let mut states = vec![(false, 0, 0), (true, 0, 0)];
        states.extend((1..=n).map(|s| (false, 0, s)));
        if max_exc == 2 {
            states.extend((1..=n).map(|s| (true, 0, s)));
            for a in 1..=n {
                states.extend((a..=n).map(|b| (false, a, b)));
            }
        }
        let index = states.iter().enumerate().map(|(i, k)| (*k, i)).collect();
        Ok(Self { states, index })
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn index_of(&self, occ: &Occupation) -> Option<usize> {
        key_of(occ.excited, &occ.sites).and_then(|k| self.index.get(&k).copied())
    }

    pub fn occupation(&self, i: usize) -> Occupation {
        let k = self.states[i];
        Occupation { excited: k.0, sites: sites_of(&k) }
    }
}

fn count(sites: &[usize], s: usize) -> usize {
    sites.iter().filter(|&&x| x == s).count()
}

/// Sector Hamiltonian (real symmetric, stored complex).
pub fn sector_hamiltonian(spec: &ChainSpec, basis: &SectorBasis) -> CsrMatrix {
    let eps = spec.site_energy();
    let mut trip = Vec::new();
    for (i, key) in basis.states.iter().enumerate() {
        let sites = sites_of(key);
        if !sites.is_empty() {
            trip.push((i, i, C64::new(eps * sites.len() as f64, 0.0)));
        }
        let mut distinct = sites.clone();
        distinct.dedup();
        for &s in &distinct {
            let c = count(&sites, s) as f64;
            let mut rest = sites.clone();
            rest.remove(rest.iter().position(|&x| x == s).unwrap());
            for t in [s.wrapping_sub(1), s + 1] {
                if t == 0 || t > spec.n_sites {
                    continue;
                }
                let ct = count(&rest, t) as f64;
                let mut moved = rest.clone();
                moved.push(t);
                if let Some(&j) = key_of(key.0, &moved).and_then(|k| basis.index.get(&k)) {
                    trip.push((j, i, C64::new(-spec.j * c.sqrt() * (ct + 1.0).sqrt(), 0.0)));
                }
            }
        }
        let c0 = count(&sites, spec.n0) as f64;
        if !key.0 && c0 > 0.0 {
            let mut rest = sites.clone();
            rest.remove(rest.iter().position(|&x| x == spec.n0).unwrap());
            if let Some(&j) = key_of(true, &rest).and_then(|k| basis.index.get(&k)) {
                trip.push((j, i, C64::new(spec.g_disc * c0.sqrt(), 0.0)));
            }
        }
        if key.0 {
            let mut more = sites.clone();
            more.push(spec.n0);
            if let Some(&j) = key_of(false, &more).and_then(|k| basis.index.get(&k)) {
                trip.push((j, i, C64::new(spec.g_disc * (c0 + 1.0).sqrt(), 0.0)));
            }
        }
    }
    CsrMatrix::from_triplets(basis.dim(), basis.dim(), trip)
}

/// Bessel functions J_0..=J_kmax at x by Miller's downward recurrence.
pub fn bessel_j_sequence(x: f64, kmax: usize) -> Vec<f64> {
    if x == 0.0 {
        let mut v = vec![0.0; kmax + 1];
        v[0] = 1.0;
        return v;
    }
    let start = {
        let m = kmax.max(x.ceil() as usize) + 40 + (x.sqrt() * 10.0) as usize;
        m + (m % 2)
    };
    let mut j = vec![0.0; start + 2];
    j[start] = 1e-300;
    for k in (1..=start).rev() {
        j[k - 1] = 2.0 * k as f64 / x * j[k] - j[k + 1];
        if j[k - 1].abs() > 1e250 {
            for v in j[k - 1..].iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    let norm = j[0] + 2.0 * j.iter().skip(2).step_by(2).sum::<f64>();
    j.truncate(kmax + 1);
    j.iter_mut().for_each(|v| *v /= norm);
    j
}

/// exp(-i H dt) by a Chebyshev expansion on a Gershgorin-bounded spectrum.
struct ChebyshevPropagator<'a> {
    h: &'a CsrMatrix,
    centre: f64,
    half_width: f64,
}

impl<'a> ChebyshevPropagator<'a> {
    fn new(h: &'a CsrMatrix) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..h.nrows() {
            let mut d = 0.0;
            let mut r = 0.0;
            for (j, v) in h.row(i) {
                if i == j {
                    d = v.re;
                } else {
                    r += v.norm();
                }
            }
            lo = lo.min(d - r);
            hi = hi.max(d + r);
        }
        let half_width = (0.5 * (hi - lo)).max(1e-12) * 1.01;
        Self { h, centre: 0.5 * (hi + lo), half_width }
    }

    fn coefficients(&self, dt: f64) -> Vec<C64> {
        let x = self.half_width * dt;
        let kmax = (x + 20.0 + 6.0 * x.cbrt()).ceil() as usize;
        let j = bessel_j_sequence(x, kmax);
        let mut out = Vec::with_capacity(kmax + 1);
        let mut phase = C64::new(1.0, 0.0);
        for (k, jk) in j.iter().enumerate() {
            let w = if k == 0 { 1.0 } else { 2.0 };
            out.push(phase * w * jk);
            phase *= C64::new(0.0, -1.0);
            if k as f64 > x && jk.abs() < 1e-17 {
                break;
            }
        }
        let global = C64::from_polar(1.0, -self.centre * dt);
        out.iter_mut().for_each(|c| *c *= global);
        out
    }

    /// H_scaled v = (H - centre) v / half_width.
    fn scaled(&self, v: &[C64], out: &mut [C64]) {
        self.h.matvec(v, out);
        let inv = 1.0 / self.half_width;
        for (o, x) in out.iter_mut().zip(v) {
            *o = (*o - x * self.centre) * inv;
        }
    }

    fn apply(&self, coeffs: &[C64], psi: &mut [C64]) {
        let n = psi.len();
        let mut t_prev = psi.to_vec();
        let mut t_cur = vec![C64::new(0.0, 0.0); n];
        let mut t_next = vec![C64::new(0.0, 0.0); n];
        let mut acc: Vec<C64> = psi.iter().map(|x| x * coeffs[0]).collect();
        if coeffs.len() > 1 {
            self.scaled(&t_prev, &mut t_cur);
            for (a, x) in acc.iter_mut().zip(&t_cur) {
                *a += x * coeffs[1];
            }
        }
        for c in coeffs.iter().skip(2) {
            self.scaled(&t_cur, &mut t_next);
            for ((nx, p), a) in t_next.iter_mut().zip(&t_prev).zip(acc.iter_mut()) {
                *nx = 2.0 * *nx - p;
                *a += *nx * c;
            }
            std::mem::swap(&mut t_prev, &mut t_cur);
            std::mem::swap(&mut t_cur, &mut t_next);
        }
        psi.copy_from_slice(&acc);
    }
}

/// Exact evolution in the sector of at most `max_excitations` quanta.
///
/// `t_grid` is in physical time. Columns: `atomic_population`, `photons_A`
/// (sites 1..=N_A_sites) and `photons_B` (the rest).
pub fn evolve_sector(
    spec: &ChainSpec,
    psi0: &[(Occupation, C64)],
    t_grid: &[f64],
    max_excitations: usize,
) -> Result<EvolutionResult> {
    evolve_sector_capped(spec, psi0, t_grid, max_excitations, DEFAULT_SECTOR_CAP)
}

pub fn evolve_sector_capped(
    spec: &ChainSpec,
    psi0: &[(Occupation, C64)],
    t_grid: &[f64],
    max_excitations: usize,
    cap: usize,
) -> Result<EvolutionResult> {
    spec.validate()?;
    check_grid(t_grid)?;
    let basis = SectorBasis::new(spec.n_sites, max_excitations, cap)?;
    let mut psi = vec![C64::new(0.0, 0.0); basis.dim()];
    for (occ, amp) in psi0 {
        let i = basis
            .index_of(occ)
            .ok_or_else(|| Error::InvalidState(format!("{occ:?} is outside the sector")))?;
        psi[i] += amp;
    }
    let norm0 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm0 == 0.0 {
        return Err(Error::InvalidState("initial state is zero".into()));
    }
    psi.iter_mut().for_each(|z| *z /= norm0);

    let h = sector_hamiltonian(spec, &basis);
    let prop = ChebyshevPropagator::new(&h);
    let atom: Vec<f64> = (0..basis.dim()).map(|i| if basis.states[i].0 { 1.0 } else { 0.0 }).collect();
    let in_a: Vec<f64> =
        (0..basis.dim()).map(|i| sites_of(&basis.states[i]).iter().filter(|&&s| s <= spec.n_a_sites).count() as f64).collect();
    let in_b: Vec<f64> =
        (0..basis.dim()).map(|i| sites_of(&basis.states[i]).iter().filter(|&&s| s > spec.n_a_sites).count() as f64).collect();

    let weigh = |w: &[f64], psi: &[C64]| w.iter().zip(psi).map(|(w, z)| w * z.norm_sqr()).sum::<f64>();
    let mut cols = [Vec::new(), Vec::new(), Vec::new()];
    let mut diag = Diagnostics::default();
    let energy0 = h.expect(&psi).re;
    let (mut norm_err, mut drift): (f64, f64) = (0.0, 0.0);
    let mut coeffs: Option<(f64, Vec<C64>)> = None;
    for (k, &t) in t_grid.iter().enumerate() {
        if k > 0 {
            let dt = (t - t_grid[k - 1]) * spec.time_scale;
            let reuse = coeffs.as_ref().is_some_and(|(d, _)| (d - dt).abs() <= 1e-12 * dt);
            if !reuse {
                coeffs = Some((dt, prop.coefficients(dt)));
            }
            prop.apply(&coeffs.as_ref().unwrap().1, &mut psi);
        }
        cols[0].push(weigh(&atom, &psi));
        cols[1].push(weigh(&in_a, &psi));
        cols[2].push(weigh(&in_b, &psi));
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>();
        norm_err = norm_err.max((norm.sqrt() - 1.0).abs());
        drift = drift.max((h.expect(&psi).re - energy0).abs());
    }
    diag.max_norm_error = Some(norm_err);
    diag.max_energy_drift = Some(drift);
    if t_grid.last().copied().unwrap_or(0.0) > spec.wrap_free_time() {
        diag.warnings.push(format!(
            "run extends past {:.4} where reflections from the open end can reach the atom",
            spec.wrap_free_time()
        ));
    }
    let [a, pa, pb] = cols;
    let series = vec![
        Series { name: "atomic_population".into(), values: a, stderr: None },
        Series { name: "photons_A".into(), values: pa, stderr: None },
        Series { name: "photons_B".into(), values: pb, stderr: None },
    ];
    Ok(EvolutionResult { t: t_grid.to_vec(), series, leakage: None, diagnostics: diag })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeCoupling {
    pub nu: i32,
    /// Atom coupling to block-A mode m0 + nu, sign fixed by the mode convention.
    pub numeric: f64,
    /// Continuum-model coupling with L = N_A_sites + 1, x0 = n0, phi = phi_block.
    pub formula: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockReport {
    /// max |U^T U - 1|.
    pub unitarity_error: f64,
    /// max |U H' U^T - H|.
    pub reassembly_error: f64,
    /// Largest deviation of U^T H U from its predicted block structure.
    pub structure_error: f64,
    /// Block-A mode frequencies (rotating frame), ascending.
    pub omega_a: Vec<f64>,
    pub omega_b: Vec<f64>,
    /// Atom coupling to every block-A mode.
    pub g: Vec<f64>,
    /// Block-A mode amplitudes on the boundary site, times -J.
    pub xi: Vec<f64>,
    /// Block-B mode amplitudes on the boundary site.
    pub chi: Vec<f64>,
    /// Block-A mode closest to resonance (1-based).
    pub m0: usize,
    pub phi_block: f64,
    pub couplings: Vec<ModeCoupling>,
    /// max |numeric - formula| / (g_disc sqrt(2 / L)).
    pub max_coupling_error: f64,
}

fn hopping_block(n: usize, eps: f64, j: f64) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = eps;
        if i + 1 < n {
            m[(i, i + 1)] = -j;
            m[(i + 1, i)] = -j;
        }
    }
    m
}

/// Eigenpairs sorted ascending; each vector's entry at `anchor` made >= 0.
fn sorted_modes(m: DMatrix<f64>, anchor: usize) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let mut u = DMatrix::zeros(n, n);
    for (c, &k) in order.iter().enumerate() {
        let s = if eig.eigenvectors[(anchor, k)] < 0.0 { -1.0 } else { 1.0 };
        for r in 0..n {
            u[(r, c)] = s * eig.eigenvectors[(r, k)];
        }
    }
    (order.iter().map(|&k| eig.eigenvalues[k]).collect(), u)
}

/// Diagonalize blocks A (sites 1..=N_A_sites) and B (the rest) separately and
/// check the resulting representation of the single-excitation Hamiltonian.
///
/// Mode functions are signed so that they are positive on the A/B boundary.
pub fn block_transform(spec: &ChainSpec, nus: std::ops::RangeInclusive<i32>) -> Result<BlockReport> {
    spec.validate()?;
    let (na, nb) = (spec.n_a_sites, spec.n_sites - spec.n_a_sites);
    let eps = spec.site_energy();
    let dim = 1 + spec.n_sites;
    let mut h = DMatrix::zeros(dim, dim);
    h.view_mut((1, 1), (spec.n_sites, spec.n_sites)).copy_from(&hopping_block(spec.n_sites, eps, spec.j));
    h[(0, spec.n0)] = spec.g_disc;
    h[(spec.n0, 0)] = spec.g_disc;

    let (omega_a, ua) = sorted_modes(hopping_block(na, eps, spec.j), na - 1);
    let (omega_b, ub) = sorted_modes(hopping_block(nb, eps, spec.j), 0);
    let mut u = DMatrix::zeros(dim, dim);
    u[(0, 0)] = 1.0;
    u.view_mut((1, 1), (na, na)).copy_from(&ua);
    u.view_mut((1 + na, 1 + na), (nb, nb)).copy_from(&ub);

    let max_abs = |m: &DMatrix<f64>| m.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let unitarity_error = max_abs(&(u.transpose() * &u - DMatrix::identity(dim, dim)));
    let hp = u.transpose() * &h * &u;
    let reassembly_error = max_abs(&(&u * &hp * u.transpose() - &h));

    let g: Vec<f64> = (0..na).map(|m| spec.g_disc * ua[(spec.n0 - 1, m)]).collect();
    let xi: Vec<f64> = (0..na).map(|m| -spec.j * ua[(na - 1, m)]).collect();
    let chi: Vec<f64> = (0..nb).map(|q| ub[(0, q)]).collect();
    let mut predicted = DMatrix::zeros(dim, dim);
    for m in 0..na {
        predicted[(1 + m, 1 + m)] = omega_a[m];
        predicted[(0, 1 + m)] = g[m];
        predicted[(1 + m, 0)] = g[m];
        for q in 0..nb {
            predicted[(1 + m, 1 + na + q)] = xi[m] * chi[q];
            predicted[(1 + na + q, 1 + m)] = xi[m] * chi[q];
        }
    }
    for q in 0..nb {
        predicted[(1 + na + q, 1 + na + q)] = omega_b[q];
    }
    let structure_error = max_abs(&(&hp - predicted));

    let l = (na + 1) as f64;
    let m0 = ((spec.k0 * l / PI).round() as usize).clamp(1, na);
    let phi_block = 2.0 * (m0 as f64 * PI / l) * spec.n0 as f64;
    // Continuum couplings for a block of length L = N_A + 1 with the atom at
    // x0 = n0; omega0 = phi_block / (2 x0) places L exactly on a resonance.
    let cont = derive_params(phi_block / (2.0 * spec.n0 as f64), 1.0, spec.n0 as f64, spec.g_disc.max(f64::MIN_POSITIVE))?;
    let sign = if m0 % 2 == 1 { 1.0 } else { -1.0 };
    let scale = spec.g_disc * (2.0 / l).sqrt();
    let mut couplings = Vec::new();
    let mut max_err: f64 = 0.0;
    for nu in nus {
        let m = m0 as i64 + i64::from(nu);
        if m < 1 || m > na as i64 {
            continue;
        }
        let numeric = sign * g[(m - 1) as usize];
        let formula = if spec.g_disc > 0.0 { mode_coupling(&cont, l, nu) } else { 0.0 };
        max_err = max_err.max((numeric - formula).abs() / scale.max(f64::MIN_POSITIVE));
        couplings.push(ModeCoupling { nu, numeric, formula });
    }
    Ok(BlockReport {
        unitarity_error,
        reassembly_error,
        structure_error,
        omega_a,
        omega_b,
        g,
        xi,
        chi,
        m0,
        phi_block,
        couplings,
        max_coupling_error: max_err,
    })
}
