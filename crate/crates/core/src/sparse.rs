//! Compressed-sparse-row complex matrices.
//!
//! Operators on the truncated Fock spaces are ladder-operator products with a
//! handful of entries per row, so everything is stored in CSR and only turned
//! dense on request. Dense square matrices passed in and out of the helpers
//! below are row-major slices of length n * n.

use nalgebra::DMatrix;

use crate::C64;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<C64>,
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, indptr: vec![0; nrows + 1], indices: Vec::new(), values: Vec::new() }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![C64::new(1.0, 0.0); n])
    }

    pub fn diagonal(d: &[C64]) -> Self {
        Self::from_triplets(d.len(), d.len(), d.iter().enumerate().map(|(i, &v)| (i, i, v)))
    }

    /// Duplicates are summed; entries that end up exactly zero are dropped.
    pub fn from_triplets<I>(nrows: usize, ncols: usize, triplets: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, C64)>,
    {
        let mut t: Vec<(usize, usize, C64)> = triplets.into_iter().collect();
        t.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut indptr = vec![0; nrows + 1];
        let mut indices = Vec::with_capacity(t.len());
        let mut values: Vec<C64> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        let mut rows = Vec::with_capacity(t.len());
        for (r, c, v) in t {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) outside {nrows}x{ncols}");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                rows.push(r);
                indices.push(c);
                values.push(v);
                last = Some((r, c));
            }
        }
        let mut keep_idx = Vec::with_capacity(indices.len());
        let mut keep_val = Vec::with_capacity(values.len());
        for ((r, c), v) in rows.into_iter().zip(indices).zip(values) {
            if v != C64::new(0.0, 0.0) {
                indptr[r + 1] += 1;
                keep_idx.push(c);
                keep_val.push(v);
            }
        }
        for r in 0..nrows {
            indptr[r + 1] += indptr[r];
        }
        Self { nrows, ncols, indptr, indices: keep_idx, values: keep_val }
    }

    pub fn from_dense(m: &DMatrix<C64>) -> Self {
        let (r, c) = m.shape();
        Self::from_triplets(r, c, (0..r).flat_map(|i| (0..c).map(move |j| (i, j, m[(i, j)]))))
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Entries of row `i` as (column, value).
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let r = self.indptr[i]..self.indptr[i + 1];
        self.indices[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.nrows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        let r = self.indptr[i]..self.indptr[i + 1];
        match self.indices[r.clone()].binary_search(&j) {
            Ok(k) => self.values[r.start + k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    pub fn adjoint(&self) -> Self {
        Self::from_triplets(self.ncols, self.nrows, self.triplets().map(|(i, j, v)| (j, i, v.conj())))
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out.drop_zeros()
    }

    fn drop_zeros(self) -> Self {
        if self.values.iter().all(|v| *v != C64::new(0.0, 0.0)) {
            return self;
        }
        Self::from_triplets(self.nrows, self.ncols, self.triplets())
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols), "shape mismatch in add");
        Self::from_triplets(self.nrows, self.ncols, self.triplets().chain(other.triplets()))
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.ncols, other.nrows, "shape mismatch in mul");
        let mut acc = vec![C64::new(0.0, 0.0); other.ncols];
        let mut touched = vec![false; other.ncols];
        let mut cols = Vec::new();
        let mut trip = Vec::new();
        for i in 0..self.nrows {
            for (k, a) in self.row(i) {
                for (j, b) in other.row(k) {
                    if !touched[j] {
                        touched[j] = true;
                        cols.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            for &j in &cols {
                trip.push((i, j, acc[j]));
                acc[j] = C64::new(0.0, 0.0);
                touched[j] = false;
            }
            cols.clear();
        }
        Self::from_triplets(self.nrows, other.ncols, trip)
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.triplets() {
            m[(i, j)] = v;
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.sub(other).max_abs()
    }

    /// max |A - A^dag|.
    pub fn hermitian_defect(&self) -> f64 {
        if self.nrows != self.ncols {
            return f64::INFINITY;
        }
        self.max_abs_diff(&self.adjoint())
    }

    /// y = A x.
    pub fn matvec(&self, x: &[C64], y: &mut [C64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.nrows) {
            *yi = self.row(i).map(|(j, v)| v * x[j]).sum();
        }
    }

    /// y += alpha A x.
    pub fn matvec_add(&self, alpha: C64, x: &[C64], y: &mut [C64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.nrows) {
            let s: C64 = self.row(i).map(|(j, v)| v * x[j]).sum();
            *yi += alpha * s;
        }
    }

    /// <x| A |x>.
    pub fn expect(&self, x: &[C64]) -> C64 {
        (0..self.nrows).map(|i| x[i].conj() * self.row(i).map(|(j, v)| v * x[j]).sum::<C64>()).sum()
    }

    /// out += alpha A rho for a square row-major `rho`.
    pub fn left_mul_add(&self, alpha: C64, rho: &[C64], out: &mut [C64]) {
        let n = self.ncols;
        for i in 0..self.nrows {
            let dst = &mut out[i * n..(i + 1) * n];
            for (k, v) in self.row(i) {
                let a = alpha * v;
                for (d, s) in dst.iter_mut().zip(&rho[k * n..(k + 1) * n]) {
                    *d += a * s;
                }
            }
        }
    }

    /// out += alpha rho A^dag for a square row-major `rho`.
    pub fn right_mul_adjoint_add(&self, alpha: C64, rho: &[C64], out: &mut [C64]) {
        let n = self.ncols;
        // (rho A^dag)[i, j] = sum_k rho[i, k] conj(A[j, k]), one row of rho at a time
        for (src, dst) in rho.chunks_exact(n).zip(out.chunks_exact_mut(n)) {
            for (j, d) in dst.iter_mut().enumerate().take(self.nrows) {
                let acc: C64 = self.row(j).map(|(k, v)| v.conj() * src[k]).sum();
                *d += alpha * acc;
            }
        }
    }

    /// tr(A rho) for a square row-major `rho`.
    pub fn trace_product(&self, rho: &[C64]) -> C64 {
        let n = self.ncols;
        self.triplets().map(|(i, j, v)| v * rho[j * n + i]).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn sample() -> CsrMatrix {
        CsrMatrix::from_triplets(3, 3, vec![(0, 1, c(1.0, 2.0)), (2, 0, c(-1.0, 0.5)), (1, 1, c(3.0, 0.0)), (0, 1, c(1.0, 0.0))])
    }

    #[test]
    fn duplicates_are_summed() {
        let a = sample();
        assert_eq!(a.get(0, 1), c(2.0, 2.0));
        assert_eq!(a.nnz(), 3);
    }

    #[test]
    fn products_match_dense() {
        let a = sample();
        let b = a.adjoint().add(&CsrMatrix::identity(3));
        let dense = a.to_dense() * b.to_dense();
        assert!((a.mul(&b).to_dense() - dense).norm() < 1e-14);
    }

    #[test]
    fn dense_helpers_match_nalgebra() {
        let a = sample();
        let rho: Vec<C64> = (0..9).map(|k| c(k as f64, 1.0 - k as f64)).collect();
        let rho_m = DMatrix::from_row_slice(3, 3, &rho);
        let mut out = vec![c(0.0, 0.0); 9];
        a.left_mul_add(c(1.0, 0.0), &rho, &mut out);
        a.right_mul_adjoint_add(c(0.0, 1.0), &rho, &mut out);
        let want = a.to_dense() * &rho_m + (&rho_m * a.to_dense().adjoint()) * c(0.0, 1.0);
        let got = DMatrix::from_row_slice(3, 3, &out);
        assert!((got - want).norm() < 1e-12);
        let tr = (a.to_dense() * &rho_m).trace();
        assert!((a.trace_product(&rho) - tr).norm() < 1e-12);
    }

    #[test]
    fn cancellation_drops_entries() {
        let a = sample();
        assert_eq!(a.sub(&a).nnz(), 0);
        assert!(a.add(&a.adjoint()).hermitian_defect() < 1e-15);
    }
}
