use ndarray::{Array1, ArrayView1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, FisherSnedecor};

use super::network::{CandidatePairSet, Provenance};
use crate::error::{Error, Result};
use crate::model::Dataset;
use crate::scalar::Scalar;

pub const DEFAULT_SCREEN_CUTOFF: f64 = 1e-5;

/// Relative squared norm below which a regressor counts as lying in the
/// span of the ones before it.
const COLLINEAR_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScreenResult {
    /// Pairs whose smallest p-value over outputs is below the cutoff.
    #[serde(skip)]
    pub passed: CandidatePairSet,
    /// Smallest p-value over outputs for every tested pair.
    pub min_p: Vec<((usize, usize), f64)>,
    /// Pairs whose design was rank deficient.
    pub skipped: Vec<(usize, usize)>,
}

/// Gram-Schmidt basis of the span of `cols`, or `None` when a column lies in
/// the span of the previous ones.
fn orthonormal_basis(cols: &[Array1<f64>]) -> Option<Vec<Array1<f64>>> {
    let mut basis: Vec<Array1<f64>> = Vec::with_capacity(cols.len());
    for c in cols {
        let scale = c.dot(c);
        let mut v = c.clone();
        // two rounds keep the basis orthogonal to working precision
        for _ in 0..2 {
            for q in &basis {
                let d = q.dot(&v);
                v.scaled_add(-d, q);
            }
        }
        let n = v.dot(&v);
        if scale == 0.0 || n <= COLLINEAR_TOL * scale {
            return None;
        }
        basis.push(v / n.sqrt());
    }
    Some(basis)
}

fn project_out(basis: &[Array1<f64>], y: &Array1<f64>) -> Array1<f64> {
    let mut r = y.clone();
    for q in basis {
        let d = q.dot(&r);
        r.scaled_add(-d, q);
    }
    r
}

/// F-test p-values, one per output, for the interaction term in
/// `y ~ 1 + x_r + x_s + x_r x_s` against `y ~ 1 + x_r + x_s`. `None` when
/// the design is rank deficient.
pub fn pair_p_values<F: Scalar>(
    ds: &Dataset<F>,
    r: usize,
    s: usize,
) -> Result<Option<Vec<f64>>> {
    let n = ds.n_samples();
    if n < 5 {
        return Err(Error::input(format!(
            "two-locus screen needs at least 5 samples, got {n}"
        )));
    }
    let to64 = |v: ArrayView1<'_, F>| v.mapv(|x| x.as_f64());
    let a = to64(ds.x_row(r));
    let b = to64(ds.x_row(s));
    let ab = &a * &b;
    let Some(basis) = orthonormal_basis(&[Array1::ones(n), a, b]) else {
        return Ok(None);
    };
    let c = project_out(&basis, &ab);
    let cc = c.dot(&c);
    if cc <= COLLINEAR_TOL * ab.dot(&ab) {
        return Ok(None);
    }
    let df2 = (n - 4) as f64;
    let dist = FisherSnedecor::new(1.0, df2).map_err(|e| Error::Solver(e.to_string()))?;
    let mut out = Vec::with_capacity(ds.n_outputs());
    for k in 0..ds.n_outputs() {
        let y = to64(ds.y_row(k));
        let r0 = project_out(&basis, &y);
        let rss0 = r0.dot(&r0);
        let gain = c.dot(&r0).powi(2) / cc;
        let rss1 = (rss0 - gain).max(0.0);
        let p = if rss0 <= f64::MIN_POSITIVE {
            1.0
        } else if rss1 <= 1e-14 * rss0 {
            0.0
        } else {
            dist.sf(gain / (rss1 / df2))
        };
        out.push(p);
    }
    Ok(Some(out))
}

/// Keeps the pairs whose interaction F-test passes `p_cutoff` for at least
/// one output. Pairs are tested in parallel.
pub fn two_locus_screen<F: Scalar>(
    ds: &Dataset<F>,
    pairs: &[(usize, usize)],
    p_cutoff: f64,
) -> Result<ScreenResult> {
    for &(r, s) in pairs {
        if r.max(s) >= ds.n_inputs() {
            return Err(Error::dim("pair index vs input rows", r.max(s) + 1, ds.n_inputs()));
        }
    }
    let tested: Vec<Option<f64>> = pairs
        .par_iter()
        .map(|&(r, s)| {
            pair_p_values(ds, r, s).map(|p| p.map(|v| v.into_iter().fold(1.0, f64::min)))
        })
        .collect::<Result<_>>()?;
    let mut out = ScreenResult::default();
    for (&(r, s), p) in pairs.iter().zip(tested) {
        match p {
            Some(p) => {
                if p < p_cutoff {
                    out.passed.insert(r, s, Provenance::Screen);
                }
                out.min_p.push(((r, s), p));
            }
            None => {
                log::warn!("pair ({}, {}) is collinear; skipped", r + 1, s + 1);
                out.skipped.push((r, s));
            }
        }
    }
    Ok(out)
}
