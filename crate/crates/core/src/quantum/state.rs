use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::quantum::operator::QuantumOperator;
use crate::quantum::space::CompositeSpace;
use crate::C64;

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub space: Arc<CompositeSpace>,
    pub data: Vec<C64>,
}

impl StateVector {
    pub fn new(space: &Arc<CompositeSpace>, data: Vec<C64>) -> Result<Self> {
        if data.len() != space.dim() {
            return Err(Error::DimensionMismatch { expected: space.dim(), got: data.len() });
        }
        Ok(Self { space: space.clone(), data })
    }

    /// Product basis state given by per-factor digits.
    pub fn basis(space: &Arc<CompositeSpace>, digits: &[usize]) -> Result<Self> {
        let i = space
            .index_of(digits)
            .ok_or_else(|| Error::InvalidState(format!("digits {digits:?} not in space")))?;
        let mut data = vec![C64::new(0.0, 0.0); space.dim()];
        data[i] = C64::new(1.0, 0.0);
        Ok(Self { space: space.clone(), data })
    }

    /// Atom excited, all modes empty.
    pub fn excited_vacuum(space: &Arc<CompositeSpace>) -> Self {
        let mut d = vec![0; space.factors().len()];
        d[0] = 1;
        Self::basis(space, &d).expect("excited state always present")
    }

    pub fn ground_vacuum(space: &Arc<CompositeSpace>) -> Self {
        Self::basis(space, &vec![0; space.factors().len()]).expect("ground state always present")
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalized(mut self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::InvalidState("cannot normalize a zero vector".into()));
        }
        self.data.iter_mut().for_each(|z| *z /= n);
        Ok(self)
    }

    pub fn to_density(&self) -> DensityMatrix {
        let n = self.data.len();
        let mut d = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                d[i * n + j] = self.data[i] * self.data[j].conj();
            }
        }
        DensityMatrix { space: self.space.clone(), data: d }
    }
}

/// Row-major density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    pub space: Arc<CompositeSpace>,
    pub data: Vec<C64>,
}

impl DensityMatrix {
    pub fn new(space: &Arc<CompositeSpace>, data: Vec<C64>) -> Result<Self> {
        let n = space.dim();
        if data.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, got: data.len() });
        }
        Ok(Self { space: space.clone(), data })
    }

    pub fn from_dense(space: &Arc<CompositeSpace>, m: &DMatrix<C64>) -> Result<Self> {
        let n = space.dim();
        if m.shape() != (n, n) {
            return Err(Error::DimensionMismatch { expected: n, got: m.nrows() });
        }
        Ok(Self { space: space.clone(), data: (0..n * n).map(|k| m[(k / n, k % n)]).collect() })
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.dim() + j]
    }

    pub fn trace(&self) -> C64 {
        let n = self.dim();
        (0..n).map(|i| self.data[i * n + i]).sum()
    }

    pub fn hermitian_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.data[i * n + j] - self.data[j * n + i].conj()).norm());
            }
        }
        worst
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let n = self.dim();
        DMatrix::from_row_slice(n, n, &self.data)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let m = self.to_dense();
        let h = (&m + m.adjoint()) * C64::new(0.5, 0.0);
        h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// tr(A rho).
    pub fn expect(&self, op: &QuantumOperator) -> C64 {
        op.matrix().trace_product(&self.data)
    }

    /// Checks trace, hermiticity and positivity at the given tolerances.
    pub fn validate(&self, trace_tol: f64, herm_tol: f64, eig_tol: f64) -> Result<()> {
        let tr = self.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > trace_tol {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let h = self.hermitian_defect();
        if h > herm_tol {
            return Err(Error::InvalidState(format!("hermiticity defect {h:e}")));
        }
        if self.dim() <= 128 {
            let e = self.min_eigenvalue();
            if e < -eig_tol {
                return Err(Error::InvalidState(format!("negative eigenvalue {e:e}")));
            }
        }
        Ok(())
    }

    /// Excited-state population of the atom.
    pub fn rho_ee(&self) -> f64 {
        let n = self.dim();
        (0..n).filter(|&i| self.space.digit(i, 0) == 1).map(|i| self.data[i * n + i].re).sum()
    }

    /// Atomic coherence <e| rho_atom |g> = <sigma_->.
    pub fn rho_eg(&self) -> C64 {
        self.expect(&QuantumOperator::sigma_minus(&self.space))
    }
}
