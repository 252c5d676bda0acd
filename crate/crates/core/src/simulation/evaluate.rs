use ndarray::{Array1, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::least_squares_rows;
use crate::model::{CoefMatrix, Dataset};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub tau: f64,
    pub precision: f64,
    pub recall: f64,
}

/// Precision and recall of `{|beta_est| > tau}` against the support of
/// `b_true`. Precision is 1 when nothing is predicted.
pub fn precision_recall_curve(
    b_est: &CoefMatrix<f64>,
    b_true: &CoefMatrix<f64>,
    thresholds: &[f64],
) -> Result<Vec<PrPoint>> {
    if b_est.n_outputs() != b_true.n_outputs() || b_est.n_inputs() != b_true.n_inputs() {
        return Err(Error::dim(
            "estimate vs truth coefficient count",
            b_est.n_outputs() * b_est.n_inputs(),
            b_true.n_outputs() * b_true.n_inputs(),
        ));
    }
    let n_true = b_true.nnz();
    if n_true == 0 {
        return Err(Error::input("true coefficient matrix has empty support; recall is undefined"));
    }
    let est = b_est.values();
    let truth = b_true.values();
    Ok(thresholds
        .iter()
        .map(|&tau| {
            let (mut tp, mut fp) = (0usize, 0usize);
            for (e, t) in est.iter().zip(truth.iter()) {
                if e.abs() > tau {
                    if *t != 0.0 {
                        tp += 1;
                    } else {
                        fp += 1;
                    }
                }
            }
            let precision = if tp + fp == 0 { 1.0 } else { tp as f64 / (tp + fp) as f64 };
            PrPoint {
                tau,
                precision,
                recall: tp as f64 / n_true as f64,
            }
        })
        .collect())
}

/// 0 plus every distinct nonzero `|beta|`, ascending. Each nonzero value
/// drops exactly its own entries from the prediction.
pub fn auto_thresholds(b_est: &CoefMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = b_est.triplets().map(|(_, _, b)| b.abs()).collect();
    v.push(0.0);
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Trapezoidal area under precision as a function of recall. The curve is
/// closed at recall 0 with the precision of the sparsest prediction.
pub fn aupr(curve: &[PrPoint]) -> f64 {
    let mut pts: Vec<(f64, f64)> = curve.iter().map(|p| (p.recall, p.precision)).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
    if let Some(&(r, p)) = pts.first() {
        if r > 0.0 {
            pts.insert(0, (0.0, p));
        }
    }
    pts.windows(2)
        .map(|w| (w[1].0 - w[0].0) * 0.5 * (w[0].1 + w[1].1))
        .sum()
}

/// Refits ordinary least squares per output on the inputs with
/// `|beta| > tau` (minimum-norm when rank deficient) and returns the mean
/// squared prediction error on `val`. An output with nothing selected
/// predicts 0.
pub fn refit_prediction_error(
    train: &Dataset<f64>,
    val: &Dataset<f64>,
    b_est: &CoefMatrix<f64>,
    tau: f64,
) -> Result<f64> {
    if train.n_inputs() != val.n_inputs() || train.n_outputs() != val.n_outputs() {
        return Err(Error::dim("training vs validation inputs", train.n_inputs(), val.n_inputs()));
    }
    if b_est.n_outputs() != train.n_outputs() || b_est.n_inputs() != train.n_inputs() {
        return Err(Error::dim("estimate vs data inputs", b_est.n_inputs(), train.n_inputs()));
    }
    let n_val = val.n_samples();
    if n_val == 0 {
        return Err(Error::input("validation set has no samples"));
    }
    let mut sse = 0.0;
    for k in 0..train.n_outputs() {
        let sel: Vec<usize> = (0..train.n_inputs())
            .filter(|&j| b_est.get(k, j).abs() > tau)
            .collect();
        let pred = if sel.is_empty() {
            Array1::zeros(n_val)
        } else {
            let a = train.x().select(Axis(0), &sel);
            let coef = least_squares_rows(a.view(), train.y_row(k));
            val.x().select(Axis(0), &sel).t().dot(&coef)
        };
        sse += (&val.y_row(k) - &pred).iter().map(|v| v * v).sum::<f64>();
    }
    Ok(sse / (n_val * train.n_outputs()) as f64)
}
