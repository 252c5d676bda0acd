use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Per-row affine transform recorded by [`standardize_rows`] so that a
/// held-out matrix can be mapped into the same coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowScaling {
    pub means: Vec<f64>,
    /// L2 norm of each centred row; zero for constant rows.
    pub norms: Vec<f64>,
}

impl RowScaling {
    pub fn apply<F: Scalar>(&self, m: ArrayView2<'_, F>) -> Result<Array2<F>> {
        if m.nrows() != self.means.len() {
            return Err(Error::dim("row scaling", m.nrows(), self.means.len()));
        }
        let mut out = m.to_owned();
        for (i, mut row) in out.axis_iter_mut(Axis(0)).enumerate() {
            let mu = F::lit(self.means[i]);
            let nrm = self.norms[i];
            if nrm > 0.0 {
                let inv = F::lit(1.0 / nrm);
                row.mapv_inplace(|v| (v - mu) * inv);
            } else {
                row.fill(F::zero());
            }
        }
        Ok(out)
    }
}

/// Output of [`standardize_rows`].
#[derive(Debug, Clone)]
pub struct Standardized<F> {
    pub values: Array2<F>,
    pub scaling: RowScaling,
    /// `true` for zero-variance rows, which stay at zero after centring.
    pub constant: Vec<bool>,
}

impl<F> Standardized<F> {
    pub fn has_constant_rows(&self) -> bool {
        self.constant.iter().any(|&c| c)
    }
}

/// Centres every row and scales it to unit L2 norm.
///
/// Rows are scaled to unit norm (not unit sample variance) so that
/// `x_j x_j^T = 1`, which the coordinate update relies on.
pub fn standardize_rows<F: Scalar>(m: ArrayView2<'_, F>) -> Result<Standardized<F>> {
    if let Some(pos) = m.iter().position(|v| !v.is_finite()) {
        let ncols = m.ncols().max(1);
        return Err(Error::input(format!(
            "non-finite entry at row {}, column {}",
            pos / ncols + 1,
            pos % ncols + 1
        )));
    }
    let n = m.ncols();
    let mut values = Array2::<F>::zeros(m.raw_dim());
    let mut means = Vec::with_capacity(m.nrows());
    let mut norms = Vec::with_capacity(m.nrows());
    let mut constant = Vec::with_capacity(m.nrows());
    for (i, row) in m.axis_iter(Axis(0)).enumerate() {
        // accumulate in f64 so f32 inputs still centre accurately
        let mean = if n == 0 {
            0.0
        } else {
            row.iter().map(|v| v.as_f64()).sum::<f64>() / n as f64
        };
        let centred: Vec<f64> = row.iter().map(|v| v.as_f64() - mean).collect();
        let norm = centred.iter().map(|c| c * c).sum::<f64>().sqrt();
        // relative test: a row whose spread is at rounding level is constant
        let scale = row.iter().fold(0.0_f64, |a, v| a.max(v.as_f64().abs()));
        let is_const = norm <= scale * 1e-13 * (n.max(1) as f64) || norm == 0.0;
        let mut out = values.row_mut(i);
        if is_const {
            out.fill(F::zero());
            norms.push(0.0);
        } else {
            for (o, c) in out.iter_mut().zip(&centred) {
                *o = F::lit(c / norm);
            }
            norms.push(norm);
        }
        means.push(mean);
        constant.push(is_const);
    }
    Ok(Standardized {
        values,
        scaling: RowScaling { means, norms },
        constant,
    })
}

/// Sample-aligned inputs `X` (J x N) and responses `Y` (K x N).
#[derive(Debug, Clone)]
pub struct Dataset<F> {
    x: Array2<F>,
    y: Array2<F>,
    /// Input rows excluded from fitting (constant after centring).
    excluded: Vec<bool>,
    /// Inputs with index `>= n_marginals` are interaction terms and take the
    /// separate L1 weight `lambda4`.
    n_marginals: usize,
    pub sample_ids: Option<Vec<String>>,
    pub input_ids: Option<Vec<String>>,
    pub output_ids: Option<Vec<String>>,
    pub x_scaling: Option<RowScaling>,
    pub y_scaling: Option<RowScaling>,
}

impl<F: Scalar> Dataset<F> {
    /// Wraps raw matrices without standardizing them.
    pub fn new(x: Array2<F>, y: Array2<F>) -> Result<Self> {
        if x.ncols() != y.ncols() {
            return Err(Error::dim("X and Y sample counts", x.ncols(), y.ncols()));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::input("dataset contains non-finite values"));
        }
        let j = x.nrows();
        Ok(Self {
            excluded: vec![false; j],
            n_marginals: j,
            x,
            y,
            sample_ids: None,
            input_ids: None,
            output_ids: None,
            x_scaling: None,
            y_scaling: None,
        })
    }

    /// Builds a dataset whose rows of `X` and `Y` are centred and scaled to
    /// unit norm. Constant input rows are flagged and excluded from fitting.
    pub fn standardized(x: ArrayView2<'_, F>, y: ArrayView2<'_, F>) -> Result<Self> {
        if x.ncols() != y.ncols() {
            return Err(Error::dim("X and Y sample counts", x.ncols(), y.ncols()));
        }
        let sx = standardize_rows(x)?;
        let sy = standardize_rows(y)?;
        let n_const = sx.constant.iter().filter(|&&c| c).count();
        if n_const > 0 {
            log::warn!("{n_const} constant input row(s) excluded from fitting");
        }
        let mut ds = Self::new(sx.values, sy.values)?;
        ds.excluded = sx.constant;
        ds.x_scaling = Some(sx.scaling);
        ds.y_scaling = Some(sy.scaling);
        Ok(ds)
    }

    /// Re-standardizes this dataset in place of the current values.
    pub fn restandardize(&self) -> Result<Self> {
        let mut ds = Self::standardized(self.x.view(), self.y.view())?;
        ds.n_marginals = self.n_marginals;
        ds.sample_ids = self.sample_ids.clone();
        ds.input_ids = self.input_ids.clone();
        ds.output_ids = self.output_ids.clone();
        Ok(ds)
    }

    pub fn with_n_marginals(mut self, n_marginals: usize) -> Result<Self> {
        if n_marginals > self.n_inputs() {
            return Err(Error::input(format!(
                "n_marginals {n_marginals} exceeds input count {}",
                self.n_inputs()
            )));
        }
        self.n_marginals = n_marginals;
        Ok(self)
    }

    /// Marks input rows to be held at zero by every solver.
    pub fn with_excluded(mut self, excluded: Vec<bool>) -> Result<Self> {
        if excluded.len() != self.n_inputs() {
            return Err(Error::dim("excluded mask", excluded.len(), self.n_inputs()));
        }
        self.excluded = excluded;
        Ok(self)
    }

    pub fn x(&self) -> ArrayView2<'_, F> {
        self.x.view()
    }

    pub fn y(&self) -> ArrayView2<'_, F> {
        self.y.view()
    }

    pub fn x_row(&self, j: usize) -> ArrayView1<'_, F> {
        self.x.row(j)
    }

    pub fn y_row(&self, k: usize) -> ArrayView1<'_, F> {
        self.y.row(k)
    }

    /// J
    pub fn n_inputs(&self) -> usize {
        self.x.nrows()
    }

    /// K
    pub fn n_outputs(&self) -> usize {
        self.y.nrows()
    }

    /// N
    pub fn n_samples(&self) -> usize {
        self.x.ncols()
    }

    pub fn n_marginals(&self) -> usize {
        self.n_marginals
    }

    pub fn is_interaction(&self, j: usize) -> bool {
        j >= self.n_marginals
    }

    pub fn is_excluded(&self, j: usize) -> bool {
        self.excluded[j]
    }

    pub fn excluded(&self) -> &[bool] {
        &self.excluded
    }

    /// Restricts the dataset to the given sample columns (used for CV folds
    /// and validation splits). Excluded flags and labels carry over.
    pub fn select_samples(&self, cols: &[usize]) -> Self {
        let x = self.x.select(Axis(1), cols);
        let y = self.y.select(Axis(1), cols);
        Self {
            x,
            y,
            excluded: self.excluded.clone(),
            n_marginals: self.n_marginals,
            sample_ids: self
                .sample_ids
                .as_ref()
                .map(|ids| cols.iter().map(|&c| ids[c].clone()).collect()),
            input_ids: self.input_ids.clone(),
            output_ids: self.output_ids.clone(),
            x_scaling: self.x_scaling.clone(),
            y_scaling: self.y_scaling.clone(),
        }
    }

    /// `y_k x_j^T` for every pair, as a K x J matrix.
    pub fn cross_products(&self) -> Array2<F> {
        self.y.dot(&self.x.t())
    }

    /// Squared Frobenius norm of Y.
    pub fn y_sq_norm(&self) -> F {
        self.y.iter().map(|v| *v * *v).sum()
    }

    pub fn row_sq_norm(row: ArrayView1<'_, F>) -> F {
        row.dot(&row)
    }

    pub fn mean_sq(values: ArrayView2<'_, F>) -> F {
        let n = values.len();
        if n == 0 {
            return F::zero();
        }
        values.iter().map(|v| *v * *v).sum::<F>() / F::lit(n as f64)
    }

    pub fn into_matrices(self) -> (Array2<F>, Array2<F>) {
        (self.x, self.y)
    }
}
