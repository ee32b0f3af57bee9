use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::quantum::space::CompositeSpace;
use crate::sparse::CsrMatrix;
use crate::C64;

/// Operator on a composite space, stored sparse.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumOperator {
    space: Arc<CompositeSpace>,
    matrix: CsrMatrix,
}

/// |g><e| in the (g, e) basis.
pub fn local_sigma_minus() -> DMatrix<C64> {
    let mut m = DMatrix::zeros(2, 2);
    m[(0, 1)] = C64::new(1.0, 0.0);
    m
}

/// Truncated annihilation operator on Fock states 0..levels.
pub fn local_destroy(levels: usize) -> DMatrix<C64> {
    let mut m = DMatrix::zeros(levels, levels);
    for n in 1..levels {
        m[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    m
}

/// Lift a local operator on `factor` to the whole space, identity elsewhere.
pub fn embed(local: &DMatrix<C64>, factor: usize, space: &Arc<CompositeSpace>) -> Result<QuantumOperator> {
    let f = space
        .factors()
        .get(factor)
        .ok_or(Error::DimensionMismatch { expected: space.factors().len(), got: factor })?;
    if local.nrows() != f.dim || local.ncols() != f.dim {
        return Err(Error::DimensionMismatch { expected: f.dim, got: local.nrows().max(local.ncols()) });
    }
    let stride = space.stride(factor);
    let zero = C64::new(0.0, 0.0);
    let mut trip = Vec::new();
    for i in 0..space.dim() {
        let full = space.full_index(i);
        let d = (full / stride) % f.dim;
        for r in 0..f.dim {
            let v = local[(r, d)];
            if v != zero {
                if let Some(j) = space.index_of_full(full - d * stride + r * stride) {
                    trip.push((j, i, v));
                }
            }
        }
    }
    Ok(QuantumOperator { matrix: CsrMatrix::from_triplets(space.dim(), space.dim(), trip), space: space.clone() })
}

impl QuantumOperator {
    pub fn from_matrix(space: &Arc<CompositeSpace>, matrix: CsrMatrix) -> Result<Self> {
        if matrix.nrows() != space.dim() || matrix.ncols() != space.dim() {
            return Err(Error::DimensionMismatch { expected: space.dim(), got: matrix.nrows() });
        }
        Ok(Self { space: space.clone(), matrix })
    }

    pub fn zero(space: &Arc<CompositeSpace>) -> Self {
        Self { space: space.clone(), matrix: CsrMatrix::zeros(space.dim(), space.dim()) }
    }

    pub fn identity(space: &Arc<CompositeSpace>) -> Self {
        Self { space: space.clone(), matrix: CsrMatrix::identity(space.dim()) }
    }

    pub fn sigma_minus(space: &Arc<CompositeSpace>) -> Self {
        embed(&local_sigma_minus(), 0, space).expect("qubit factor")
    }

    pub fn annihilation(space: &Arc<CompositeSpace>, nu: i32) -> Result<Self> {
        let k = space
            .mode_factor(nu)
            .ok_or(Error::InvalidParameter { name: "nu", reason: format!("mode {nu} not in space") })?;
        embed(&local_destroy(space.factors()[k].dim), k, space)
    }

    pub fn number(space: &Arc<CompositeSpace>, nu: i32) -> Result<Self> {
        let a = Self::annihilation(space, nu)?;
        Ok(a.adjoint().mul(&a))
    }

    pub fn space(&self) -> &Arc<CompositeSpace> {
        &self.space
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        self.matrix.to_dense()
    }

    fn same_space(&self, other: &Self) {
        assert!(
            Arc::ptr_eq(&self.space, &other.space) || self.space == other.space,
            "operators live on different spaces"
        );
    }

    pub fn adjoint(&self) -> Self {
        Self { space: self.space.clone(), matrix: self.matrix.adjoint() }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.same_space(other);
        Self { space: self.space.clone(), matrix: self.matrix.add(&other.matrix) }
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.same_space(other);
        Self { space: self.space.clone(), matrix: self.matrix.mul(&other.matrix) }
    }

    pub fn scale(&self, s: f64) -> Self {
        self.scale_c(C64::new(s, 0.0))
    }

    pub fn scale_c(&self, s: C64) -> Self {
        Self { space: self.space.clone(), matrix: self.matrix.scale(s) }
    }

    pub fn hermitian_defect(&self) -> f64 {
        self.matrix.hermitian_defect()
    }

    pub fn apply(&self, psi: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.dim()];
        self.matrix.matvec(psi, &mut out);
        out
    }
}
