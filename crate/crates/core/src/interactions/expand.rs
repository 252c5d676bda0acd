use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::network::CandidatePairSet;
use crate::error::{Error, Result};
use crate::model::Dataset;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputSource {
    Marginal(usize),
    Pair(usize, usize),
}

#[derive(Debug, Clone)]
pub struct ExpandedDesign<F> {
    pub ds: Dataset<F>,
    /// What each expanded input row holds.
    pub column_map: Vec<InputSource>,
}

/// Appends `x_r * x_s` for every candidate pair, computed on the raw rows,
/// then standardizes all rows. Pair rows come after the marginals in the
/// pair set's sorted order and take the interaction L1 weight.
pub fn expand_design<F: Scalar>(
    x_raw: ArrayView2<'_, F>,
    y_raw: ArrayView2<'_, F>,
    pairs: &CandidatePairSet,
) -> Result<ExpandedDesign<F>> {
    let j = x_raw.nrows();
    if let Some(m) = pairs.max_index() {
        if m >= j {
            return Err(Error::dim("pair index vs input rows", m + 1, j));
        }
    }
    let list = pairs.pairs();
    let mut x = Array2::zeros((j + list.len(), x_raw.ncols()));
    x.slice_mut(ndarray::s![..j, ..]).assign(&x_raw);
    for (u, &(r, s)) in list.iter().enumerate() {
        let prod = &x_raw.index_axis(Axis(0), r) * &x_raw.index_axis(Axis(0), s);
        x.row_mut(j + u).assign(&prod);
    }
    let ds = Dataset::standardized(x.view(), y_raw)?.with_n_marginals(j)?;
    let mut column_map: Vec<InputSource> = (0..j).map(InputSource::Marginal).collect();
    column_map.extend(list.iter().map(|&(r, s)| InputSource::Pair(r, s)));
    Ok(ExpandedDesign { ds, column_map })
}
