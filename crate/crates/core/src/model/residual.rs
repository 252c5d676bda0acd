use ndarray::{Array1, Array2, ArrayView1};

use super::{CoefMatrix, Dataset};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Residual matrix `R = Y - B X`, updated incrementally as single
/// coefficients change.
#[derive(Debug, Clone)]
pub struct ResidualState<F> {
    r: Array2<F>,
}

impl<F: Scalar> ResidualState<F> {
    pub fn new(ds: &Dataset<F>, b: &CoefMatrix<F>) -> Result<Self> {
        check_dims(ds, b)?;
        Ok(Self {
            r: full_residual(ds, b),
        })
    }

    pub fn matrix(&self) -> &Array2<F> {
        &self.r
    }

    #[inline]
    pub fn row(&self, k: usize) -> ArrayView1<'_, F> {
        self.r.row(k)
    }

    /// Accounts for `beta_k^j` changing by `delta`: `r_k -= delta * x_j`.
    #[inline]
    pub fn apply_delta(&mut self, k: usize, delta: F, x_j: ArrayView1<'_, F>) {
        if delta == F::zero() {
            return;
        }
        self.r
            .row_mut(k)
            .zip_mut_with(&x_j, |r, &x| *r -= delta * x);
    }

    /// `r_k . x_j`
    #[inline]
    pub fn dot_row(&self, k: usize, x_j: ArrayView1<'_, F>) -> F {
        self.r.row(k).dot(&x_j)
    }

    /// Recomputes `R` from scratch, discarding accumulated rounding error.
    pub fn resync(&mut self, ds: &Dataset<F>, b: &CoefMatrix<F>) {
        self.r = full_residual(ds, b);
    }

    /// `||R - (Y - B X)||_F`
    pub fn drift(&self, ds: &Dataset<F>, b: &CoefMatrix<F>) -> F {
        let exact = full_residual(ds, b);
        (&self.r - &exact).iter().map(|v| *v * *v).sum::<F>().sqrt()
    }

    /// `0.5 ||R||_F^2`
    pub fn half_sq_norm(&self) -> F {
        F::lit(0.5) * self.r.iter().map(|v| *v * *v).sum::<F>()
    }
}

pub(crate) fn check_dims<F: Scalar>(ds: &Dataset<F>, b: &CoefMatrix<F>) -> Result<()> {
    if b.n_outputs() != ds.n_outputs() {
        return Err(Error::dim(
            "coefficient rows vs outputs",
            b.n_outputs(),
            ds.n_outputs(),
        ));
    }
    if b.n_inputs() != ds.n_inputs() {
        return Err(Error::dim(
            "coefficient columns vs inputs",
            b.n_inputs(),
            ds.n_inputs(),
        ));
    }
    Ok(())
}

pub(crate) fn full_residual<F: Scalar>(ds: &Dataset<F>, b: &CoefMatrix<F>) -> Array2<F> {
    let mut r = ds.y().to_owned();
    // sparse B: only touch the support
    for (k, j, v) in b.triplets() {
        r.row_mut(k)
            .zip_mut_with(&ds.x_row(j), |ri, &x| *ri -= v * x);
    }
    r
}

/// The partial residual `r_k^j = y_k - sum_{l != j} beta_k^l x_l`, formed as
/// row `k` of `R` plus `beta_k^j x_j`.
pub fn partial_residual<F: Scalar>(
    rs: &ResidualState<F>,
    b: &CoefMatrix<F>,
    k: usize,
    j: usize,
    x_j: ArrayView1<'_, F>,
) -> Array1<F> {
    let beta = b.get(k, j);
    let mut out = rs.row(k).to_owned();
    if beta != F::zero() {
        out.zip_mut_with(&x_j, |o, &x| *o += beta * x);
    }
    out
}
