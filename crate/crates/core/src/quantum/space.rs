use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::EffectiveModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FactorKind {
    Qubit,
    Mode { nu: i32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Factor {
    pub kind: FactorKind,
    pub dim: usize,
}

/// Tensor product of one qubit (basis g = 0, e = 1) and truncated bosonic
/// modes, in mixed-radix order with the qubit as the most significant digit.
///
/// With an excitation cap only product states whose total quanta (atom plus
/// photons) do not exceed the cap are kept; operators embedded into such a
/// space are projected onto it.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeSpace {
    factors: Vec<Factor>,
    strides: Vec<usize>,
    full_dim: usize,
    n_max: usize,
    cap: Option<usize>,
    /// Retained full indices in ascending order; `None` keeps everything.
    basis: Option<Vec<usize>>,
}

impl CompositeSpace {
    /// Qubit followed by one mode per entry of `nus` (ascending), each with
    /// Fock states 0..=n_max.
    pub fn new(nus: &[i32], n_max: usize) -> Result<Self> {
        if n_max == 0 && !nus.is_empty() {
            return Err(Error::InvalidParameter { name: "n_max", reason: "must be >= 1".into() });
        }
        if nus.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter { name: "nus", reason: "modes must be strictly ascending".into() });
        }
        let mut factors = vec![Factor { kind: FactorKind::Qubit, dim: 2 }];
        factors.extend(nus.iter().map(|&nu| Factor { kind: FactorKind::Mode { nu }, dim: n_max + 1 }));
        let mut strides = vec![1; factors.len()];
        let mut full: usize = 1;
        for k in (0..factors.len()).rev() {
            strides[k] = full;
            full = full.checked_mul(factors[k].dim).ok_or(Error::InvalidParameter {
                name: "n_max",
                reason: "product dimension overflows".into(),
            })?;
        }
        Ok(Self { factors, strides, full_dim: full, n_max, cap: None, basis: None })
    }

    pub fn qubit() -> Self {
        Self::new(&[], 1).expect("qubit space")
    }

    pub fn for_model(model: &EffectiveModel, n_max: usize) -> Result<Self> {
        let nus: Vec<i32> = model.nus().collect();
        Self::new(&nus, n_max)
    }

    /// Keep only states with at most `cap` quanta in total.
    pub fn with_excitation_cap(mut self, cap: usize) -> Self {
        let mut basis = Vec::new();
        let mut digits = vec![0usize; self.factors.len()];
        self.enumerate(0, cap, &mut digits, &mut basis);
        self.cap = Some(cap);
        self.basis = Some(basis);
        self
    }

    fn enumerate(&self, k: usize, left: usize, digits: &mut Vec<usize>, out: &mut Vec<usize>) {
        if k == self.factors.len() {
            out.push(digits.iter().zip(&self.strides).map(|(d, s)| d * s).sum());
            return;
        }
        for d in 0..self.factors[k].dim.min(left + 1) {
            digits[k] = d;
            self.enumerate(k + 1, left - d, digits, out);
        }
        digits[k] = 0;
    }

    pub fn dim(&self) -> usize {
        self.basis.as_ref().map_or(self.full_dim, Vec::len)
    }

    pub fn full_dim(&self) -> usize {
        self.full_dim
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn excitation_cap(&self) -> Option<usize> {
        self.cap
    }

    pub fn n_modes(&self) -> usize {
        self.factors.len() - 1
    }

    pub fn mode_nus(&self) -> impl Iterator<Item = i32> + '_ {
        self.factors.iter().filter_map(|f| match f.kind {
            FactorKind::Mode { nu } => Some(nu),
            FactorKind::Qubit => None,
        })
    }

    /// Factor index of mode `nu`.
    pub fn mode_factor(&self, nu: i32) -> Option<usize> {
        self.factors.iter().position(|f| f.kind == FactorKind::Mode { nu })
    }

    pub fn stride(&self, factor: usize) -> usize {
        self.strides[factor]
    }

    pub fn full_index(&self, i: usize) -> usize {
        self.basis.as_ref().map_or(i, |b| b[i])
    }

    pub fn index_of_full(&self, full: usize) -> Option<usize> {
        match &self.basis {
            None => (full < self.full_dim).then_some(full),
            Some(b) => b.binary_search(&full).ok(),
        }
    }

    pub fn digit(&self, i: usize, factor: usize) -> usize {
        (self.full_index(i) / self.strides[factor]) % self.factors[factor].dim
    }

    pub fn digits(&self, i: usize) -> Vec<usize> {
        (0..self.factors.len()).map(|k| self.digit(i, k)).collect()
    }

    pub fn index_of(&self, digits: &[usize]) -> Option<usize> {
        if digits.len() != self.factors.len() || digits.iter().zip(&self.factors).any(|(d, f)| *d >= f.dim) {
            return None;
        }
        self.index_of_full(digits.iter().zip(&self.strides).map(|(d, s)| d * s).sum())
    }

    pub fn excitation(&self, i: usize) -> usize {
        self.digits(i).iter().sum()
    }

    /// States where some mode sits in its top Fock level while the per-mode
    /// cutoff (rather than the excitation cap) is what bounds it.
    pub fn leakage_states(&self) -> Vec<usize> {
        if self.n_modes() == 0 || self.cap.is_some_and(|c| c <= self.n_max) {
            return Vec::new();
        }
        (0..self.dim())
            .filter(|&i| (1..self.factors.len()).any(|k| self.digit(i, k) == self.n_max))
            .collect()
    }
}
