use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// The K x J coefficient matrix together with its support.
///
/// Entries outside the support are exactly `0.0`; every write goes through
/// [`CoefMatrix::set`] so the support bookkeeping cannot drift.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefMatrix<F> {
    values: Array2<F>,
    in_support: Vec<bool>,
    nnz: usize,
}

impl<F: Scalar> CoefMatrix<F> {
    pub fn zeros(n_outputs: usize, n_inputs: usize) -> Self {
        Self {
            values: Array2::zeros((n_outputs, n_inputs)),
            in_support: vec![false; n_outputs * n_inputs],
            nnz: 0,
        }
    }

    pub fn from_dense(values: Array2<F>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("coefficient matrix contains non-finite values"));
        }
        let in_support: Vec<bool> = values.iter().map(|v| *v != F::zero()).collect();
        let nnz = in_support.iter().filter(|&&s| s).count();
        // normalise negative zeros so "exactly zero" is bitwise 0.0
        let values = values.mapv(|v| if v == F::zero() { F::zero() } else { v });
        Ok(Self {
            values,
            in_support,
            nnz,
        })
    }

    /// Builds from `(k, j, beta)` triplets (0-based).
    pub fn from_triplets(
        n_outputs: usize,
        n_inputs: usize,
        triplets: impl IntoIterator<Item = (usize, usize, F)>,
    ) -> Result<Self> {
        let mut b = Self::zeros(n_outputs, n_inputs);
        for (k, j, v) in triplets {
            if k >= n_outputs || j >= n_inputs {
                return Err(Error::input(format!(
                    "coefficient ({}, {}) outside {n_outputs} x {n_inputs}",
                    k + 1,
                    j + 1
                )));
            }
            if !v.is_finite() {
                return Err(Error::input("non-finite coefficient"));
            }
            b.set(k, j, v);
        }
        Ok(b)
    }

    #[inline]
    pub fn n_outputs(&self) -> usize {
        self.values.nrows()
    }

    #[inline]
    pub fn n_inputs(&self) -> usize {
        self.values.ncols()
    }

    #[inline]
    pub fn get(&self, k: usize, j: usize) -> F {
        self.values[[k, j]]
    }

    #[inline]
    pub fn is_nonzero(&self, k: usize, j: usize) -> bool {
        self.in_support[k * self.n_inputs() + j]
    }

    /// Writes one coefficient, returning the previous value.
    #[inline]
    pub fn set(&mut self, k: usize, j: usize, v: F) -> F {
        let idx = k * self.n_inputs() + j;
        let old = self.values[[k, j]];
        let nz = v != F::zero();
        self.values[[k, j]] = if nz { v } else { F::zero() };
        match (self.in_support[idx], nz) {
            (false, true) => self.nnz += 1,
            (true, false) => self.nnz -= 1,
            _ => {}
        }
        self.in_support[idx] = nz;
        old
    }

    pub fn nnz(&self) -> usize {
        self.nnz
    }

    pub fn values(&self) -> ArrayView2<'_, F> {
        self.values.view()
    }

    pub fn into_dense(self) -> Array2<F> {
        self.values
    }

    /// Non-zero entries in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, F)> + '_ {
        let j = self.n_inputs();
        self.in_support
            .iter()
            .enumerate()
            .filter(|(_, &s)| s)
            .map(move |(idx, _)| (idx / j, idx % j, self.values[[idx / j, idx % j]]))
    }

    /// Support as a boolean mask in row-major order.
    pub fn support_mask(&self) -> &[bool] {
        &self.in_support
    }

    /// Checks that the support bookkeeping matches the stored values.
    pub fn support_consistent(&self) -> bool {
        let count = self.in_support.iter().filter(|&&s| s).count();
        count == self.nnz
            && self
                .values
                .iter()
                .zip(&self.in_support)
                .all(|(v, &s)| (*v != F::zero()) == s)
    }

    pub fn frobenius_sq(&self) -> F {
        self.values.iter().map(|v| *v * *v).sum()
    }

    /// L2 norm of `beta_k^g`.
    pub fn row_group_norm(&self, k: usize, g: &[usize]) -> F {
        g.iter()
            .map(|&j| {
                let v = self.values[[k, j]];
                v * v
            })
            .sum::<F>()
            .sqrt()
    }

    /// L2 norm of `beta_h^j`.
    pub fn col_group_norm(&self, h: &[usize], j: usize) -> F {
        h.iter()
            .map(|&k| {
                let v = self.values[[k, j]];
                v * v
            })
            .sum::<F>()
            .sqrt()
    }
}
