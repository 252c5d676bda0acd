use ndarray::Array2;

use super::{CoefMatrix, Dataset};
use crate::error::{Error, Result};
use crate::linalg::{cholesky, cholesky_solve};
use crate::scalar::Scalar;

pub const DEFAULT_RIDGE_LAMBDA: f64 = 1.0;

/// Row-wise ridge regression: each `beta_k` minimises
/// `0.5 ||y_k - beta_k X||^2 + (lambda / 2) ||beta_k||^2`.
///
/// All rows share the factorisation of `X X^T + lambda I`. Excluded inputs
/// are forced to zero.
pub fn ridge_init<F: Scalar>(ds: &Dataset<F>, ridge_lambda: F) -> Result<CoefMatrix<F>> {
    if !(ridge_lambda > F::zero()) || !ridge_lambda.is_finite() {
        return Err(Error::input(format!(
            "ridge lambda must be positive and finite, got {ridge_lambda}"
        )));
    }
    let j = ds.n_inputs();
    let mut gram = ds.x().dot(&ds.x().t());
    for i in 0..j {
        gram[[i, i]] += ridge_lambda;
    }
    let l = cholesky(gram.view())?;
    let rhs = ds.x().dot(&ds.y().t()); // J x K
    let mut values = Array2::<F>::zeros((ds.n_outputs(), j));
    for (k, col) in rhs.columns().into_iter().enumerate() {
        let sol = cholesky_solve(l.view(), col);
        if sol.iter().any(|v| !v.is_finite()) {
            return Err(Error::Solver("ridge solve produced non-finite values".into()));
        }
        values.row_mut(k).assign(&sol);
    }
    for (jj, &ex) in ds.excluded().iter().enumerate() {
        if ex {
            values.column_mut(jj).fill(F::zero());
        }
    }
    CoefMatrix::from_dense(values)
}
