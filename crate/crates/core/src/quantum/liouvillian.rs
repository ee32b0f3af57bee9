use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::quantum::hamiltonian::Jump;
use crate::quantum::operator::QuantumOperator;
use crate::quantum::space::CompositeSpace;
use crate::sparse::CsrMatrix;
use crate::C64;

const HERMITIAN_TOL: f64 = 1e-12;

pub type Coefficient = Arc<dyn Fn(f64) -> C64 + Send + Sync>;

/// Time-dependent Hamiltonian piece c(t) X + conj(c(t)) X^dag.
#[derive(Clone)]
pub struct DriveTerm {
    pub label: String,
    pub op: QuantumOperator,
    pub coeff: Coefficient,
}

impl fmt::Debug for DriveTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DriveTerm").field("label", &self.label).finish_non_exhaustive()
    }
}

#[derive(Clone)]
struct CompiledDrive {
    coeff: Coefficient,
    x: CsrMatrix,
    x_dag: CsrMatrix,
}

/// Lindblad generator
/// rho' = -i[H(t), rho] + sum_k rate_k (L_k rho L_k^dag - {L_k^dag L_k, rho} / 2).
///
/// Jump operators are stored pre-scaled by sqrt(rate).
#[derive(Clone)]
pub struct Liouvillian {
    space: Arc<CompositeSpace>,
    h: CsrMatrix,
    heff: CsrMatrix,
    jumps: Vec<(String, CsrMatrix)>,
    /// L_k^dag, kept when H psi - (i/2) sum L^dag (L psi) is cheaper than
    /// the assembled H_eff.
    factored: Option<Vec<CsrMatrix>>,
    drives: Vec<CompiledDrive>,
}

impl fmt::Debug for Liouvillian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Liouvillian")
            .field("dim", &self.dim())
            .field("jumps", &self.jumps.iter().map(|j| &j.0).collect::<Vec<_>>())
            .field("drives", &self.drives.len())
            .finish()
    }
}

pub fn build_liouvillian(h: &QuantumOperator, jumps: &[Jump]) -> Result<Liouvillian> {
    let defect = h.hermitian_defect();
    if defect >= HERMITIAN_TOL {
        return Err(Error::NonHermitian(defect));
    }
    let mut heff = h.matrix().clone();
    let mut scaled = Vec::with_capacity(jumps.len());
    for j in jumps {
        if !(j.rate >= 0.0 && j.rate.is_finite()) {
            return Err(Error::NegativeRate(j.rate));
        }
        if j.op.dim() != h.dim() {
            return Err(Error::DimensionMismatch { expected: h.dim(), got: j.op.dim() });
        }
        if j.rate == 0.0 {
            continue;
        }
        let l = j.op.matrix().scale(C64::new(j.rate.sqrt(), 0.0));
        let ldl = l.adjoint().mul(&l);
        heff = heff.add(&ldl.scale(C64::new(0.0, -0.5)));
        scaled.push((j.label.clone(), l));
    }
    let split_cost = h.matrix().nnz() + 2 * scaled.iter().map(|(_, l)| l.nnz()).sum::<usize>();
    let factored = (split_cost < heff.nnz()).then(|| scaled.iter().map(|(_, l)| l.adjoint()).collect());
    Ok(Liouvillian { space: h.space().clone(), h: h.matrix().clone(), heff, jumps: scaled, factored, drives: Vec::new() })
}

impl Liouvillian {
    pub fn with_drive(mut self, term: DriveTerm) -> Result<Self> {
        if term.op.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: term.op.dim() });
        }
        let x = term.op.matrix().clone();
        self.drives.push(CompiledDrive { coeff: term.coeff, x_dag: x.adjoint(), x });
        Ok(self)
    }

    pub fn space(&self) -> &Arc<CompositeSpace> {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn hamiltonian(&self) -> &CsrMatrix {
        &self.h
    }

    /// Jump operators already multiplied by sqrt(rate).
    /// H - i/2 sum_k L_k^dag L_k, without drives.
    pub fn effective_hamiltonian(&self) -> &CsrMatrix {
        &self.heff
    }

    pub fn jumps(&self) -> impl Iterator<Item = (&str, &CsrMatrix)> {
        self.jumps.iter().map(|(l, m)| (l.as_str(), m))
    }

    pub fn n_jumps(&self) -> usize {
        self.jumps.len()
    }

    pub fn is_time_dependent(&self) -> bool {
        !self.drives.is_empty()
    }

    /// out = H_eff(t) psi with H_eff = H(t) - (i/2) sum_k L_k^dag L_k.
    pub fn heff_apply(&self, t: f64, psi: &[C64], out: &mut [C64], scratch: &mut Vec<C64>) {
        match &self.factored {
            Some(l_dag) => {
                self.h.matvec(psi, out);
                scratch.resize(psi.len(), C64::new(0.0, 0.0));
                for ((_, l), ld) in self.jumps.iter().zip(l_dag) {
                    l.matvec(psi, scratch);
                    ld.matvec_add(C64::new(0.0, -0.5), scratch, out);
                }
            }
            None => self.heff.matvec(psi, out),
        }
        for d in &self.drives {
            let c = (d.coeff)(t);
            d.x.matvec_add(c, psi, out);
            d.x_dag.matvec_add(c.conj(), psi, out);
        }
    }

    /// out = L(t) rho for a row-major square matrix; `scratch` is resized as needed.
    pub fn apply(&self, t: f64, rho: &[C64], out: &mut [C64], scratch: &mut Vec<C64>) {
        let zero = C64::new(0.0, 0.0);
        let mi = C64::new(0.0, -1.0);
        let pi = C64::new(0.0, 1.0);
        out.iter_mut().for_each(|z| *z = zero);
        self.heff.left_mul_add(mi, rho, out);
        self.heff.right_mul_adjoint_add(pi, rho, out);
        for d in &self.drives {
            let c = (d.coeff)(t);
            if c == zero {
                continue;
            }
            d.x.left_mul_add(mi * c, rho, out);
            d.x_dag.left_mul_add(mi * c.conj(), rho, out);
            d.x.right_mul_adjoint_add(pi * c.conj(), rho, out);
            d.x_dag.right_mul_adjoint_add(pi * c, rho, out);
        }
        scratch.resize(rho.len(), zero);
        for (_, l) in &self.jumps {
            scratch.iter_mut().for_each(|z| *z = zero);
            l.left_mul_add(C64::new(1.0, 0.0), rho, scratch);
            l.right_mul_adjoint_add(C64::new(1.0, 0.0), scratch, out);
        }
    }

    /// Same as [`Liouvillian::apply`] for Hermitian `rho`, at about half the
    /// cost: the coherent part is X + X^dag with X = -i H_eff(t) rho.
    pub fn apply_hermitian(&self, t: f64, rho: &[C64], out: &mut [C64], scratch: &mut Vec<C64>) {
        let zero = C64::new(0.0, 0.0);
        let mi = C64::new(0.0, -1.0);
        let n = self.dim();
        scratch.resize(rho.len(), zero);
        scratch.iter_mut().for_each(|z| *z = zero);
        self.heff.left_mul_add(mi, rho, scratch);
        for d in &self.drives {
            let c = (d.coeff)(t);
            if c != zero {
                d.x.left_mul_add(mi * c, rho, scratch);
                d.x_dag.left_mul_add(mi * c.conj(), rho, scratch);
            }
        }
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = scratch[i * n + j] + scratch[j * n + i].conj();
            }
        }
        for (_, l) in &self.jumps {
            scratch.iter_mut().for_each(|z| *z = zero);
            l.left_mul_add(C64::new(1.0, 0.0), rho, scratch);
            l.right_mul_adjoint_add(C64::new(1.0, 0.0), scratch, out);
        }
    }

    /// Dense dim^2 x dim^2 generator at time `t`, acting on row-major vec(rho).
    pub fn to_dense(&self, t: f64) -> DMatrix<C64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n * n, n * n);
        let mut basis = vec![C64::new(0.0, 0.0); n * n];
        let mut col = vec![C64::new(0.0, 0.0); n * n];
        let mut scratch = Vec::new();
        for k in 0..n * n {
            basis[k] = C64::new(1.0, 0.0);
            self.apply(t, &basis, &mut col, &mut scratch);
            basis[k] = C64::new(0.0, 0.0);
            for (r, v) in col.iter().enumerate() {
                m[(r, k)] = *v;
            }
        }
        m
    }

    /// max over columns of |sum_i L[(i,i), col]|: how far vec(1) is from a
    /// left null vector.
    pub fn trace_defect(&self, t: f64) -> f64 {
        let n = self.dim();
        let m = self.to_dense(t);
        (0..n * n)
            .map(|c| (0..n).map(|i| m[(i * n + i, c)]).sum::<C64>().norm())
            .fold(0.0, f64::max)
    }
}
