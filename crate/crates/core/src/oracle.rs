//! Slow reference minimiser and optimality measure used to certify the
//! thresholding solver on small problems.
//!
//! `subgradient_solve` shares no code with the solver beyond the data model
//! and the objective: it runs plain subgradient descent on the full
//! non-smooth objective.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    check_dims, check_groups, objective_value, CoefMatrix, Dataset, GroupStructure, PenaltyConfig,
};
use crate::scalar::Scalar;

/// Largest `K * J` the oracle accepts.
pub const ORACLE_MAX_COEFFICIENTS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleSettings {
    pub max_steps: usize,
    /// Stop once the best objective has improved by less than this (relative)
    /// over the last `max_steps / 10` steps.
    pub objective_tol: f64,
}

impl Default for OracleSettings {
    fn default() -> Self {
        Self {
            max_steps: 200_000,
            objective_tol: 1e-5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OracleResult<F> {
    pub coefficients: CoefMatrix<F>,
    pub objective: F,
    pub steps: usize,
    /// Best objective after each improvement, as `(step, objective)`.
    pub best_trace: Vec<(usize, F)>,
}

struct Problem<'a, F> {
    ds: &'a Dataset<F>,
    gs: &'a GroupStructure,
    pc: &'a PenaltyConfig<F>,
}

impl<F: Scalar> Problem<'_, F> {
    fn objective(&self, b: &Array2<F>) -> F {
        let r = &self.ds.y() - &b.dot(&self.ds.x());
        let loss = F::lit(0.5) * r.iter().map(|v| *v * *v).sum::<F>();
        loss + self.penalty(b)
    }

    fn penalty(&self, b: &Array2<F>) -> F {
        let mut p = F::zero();
        for ((_, j), v) in b.indexed_iter() {
            p += self.pc.l1_weight(self.ds.is_interaction(j)) * v.abs();
        }
        for k in 0..b.nrows() {
            for g in self.gs.input_groups() {
                let n = g.iter().map(|&j| b[[k, j]] * b[[k, j]]).sum::<F>().sqrt();
                p += self.pc.lambda2 * n;
            }
        }
        for j in 0..b.ncols() {
            for h in self.gs.output_groups() {
                let n = h.iter().map(|&k| b[[k, j]] * b[[k, j]]).sum::<F>().sqrt();
                p += self.pc.lambda3 * n;
            }
        }
        p
    }

    /// A subgradient with every norm's subgradient taken as 0 at 0.
    fn subgradient(&self, b: &Array2<F>) -> Array2<F> {
        let r = &self.ds.y() - &b.dot(&self.ds.x());
        let mut g = -r.dot(&self.ds.x().t());
        for ((k, j), gv) in g.indexed_iter_mut() {
            let v = b[[k, j]];
            if v != F::zero() {
                *gv += self.pc.l1_weight(self.ds.is_interaction(j)) * v.signum();
            }
        }
        if self.pc.lambda2 > F::zero() {
            for k in 0..b.nrows() {
                for grp in self.gs.input_groups() {
                    let n = grp.iter().map(|&j| b[[k, j]] * b[[k, j]]).sum::<F>().sqrt();
                    if n > F::zero() {
                        for &j in grp {
                            g[[k, j]] += self.pc.lambda2 * b[[k, j]] / n;
                        }
                    }
                }
            }
        }
        if self.pc.lambda3 > F::zero() {
            for j in 0..b.ncols() {
                for grp in self.gs.output_groups() {
                    let n = grp.iter().map(|&k| b[[k, j]] * b[[k, j]]).sum::<F>().sqrt();
                    if n > F::zero() {
                        for &k in grp {
                            g[[k, j]] += self.pc.lambda3 * b[[k, j]] / n;
                        }
                    }
                }
            }
        }
        for (jj, &ex) in self.ds.excluded().iter().enumerate() {
            if ex {
                g.column_mut(jj).fill(F::zero());
            }
        }
        g
    }
}

/// Subgradient descent with step `c / sqrt(t)`; `c` is found by Armijo
/// backtracking on the first step. Returns the best iterate seen.
pub fn subgradient_solve<F: Scalar>(
    ds: &Dataset<F>,
    gs: &GroupStructure,
    pc: &PenaltyConfig<F>,
    settings: &OracleSettings,
) -> Result<OracleResult<F>> {
    check_groups(ds, gs)?;
    pc.validate()?;
    let size = ds.n_outputs() * ds.n_inputs();
    if size > ORACLE_MAX_COEFFICIENTS {
        return Err(Error::input(format!(
            "reference oracle limited to K*J <= {ORACLE_MAX_COEFFICIENTS}, got {size}"
        )));
    }
    if settings.max_steps == 0 {
        return Err(Error::input("oracle max_steps must be at least 1"));
    }
    let prob = Problem { ds, gs, pc };
    let mut b = Array2::<F>::zeros((ds.n_outputs(), ds.n_inputs()));
    let mut f = prob.objective(&b);
    let mut best = b.clone();
    let mut best_f = f;
    let mut best_trace = vec![(0, f)];

    let g0 = prob.subgradient(&b);
    let lipschitz = spectral_norm_sq(ds);
    let fallback = if lipschitz > F::zero() {
        F::one() / lipschitz
    } else {
        F::one()
    };
    // largest c in {1, 1/2, ...} giving a decrease on the first step; the
    // norm kinks at zero can block every trial, in which case 1/L is used
    let mut c = fallback;
    let mut trial_c = F::one();
    for _ in 0..40 {
        let trial = &b - &(&g0 * trial_c);
        if prob.objective(&trial) < f {
            c = trial_c;
            break;
        }
        trial_c *= F::lit(0.5);
    }

    let window = (settings.max_steps / 10).max(1000);
    let mut window_start_f = best_f;
    let mut steps = 0;
    for t in 1..=settings.max_steps {
        steps = t;
        let g = if t == 1 { g0.clone() } else { prob.subgradient(&b) };
        let step = c / F::lit(t as f64).sqrt();
        b.zip_mut_with(&g, |bv, &gv| *bv -= step * gv);
        f = prob.objective(&b);
        if f < best_f {
            best_f = f;
            best.assign(&b);
            best_trace.push((t, f));
        }
        if t % window == 0 {
            let improvement = (window_start_f - best_f) / best_f.abs().max(F::epsilon());
            if improvement.as_f64() < settings.objective_tol {
                break;
            }
            window_start_f = best_f;
        }
    }

    let coefficients = CoefMatrix::from_dense(best)?;
    let objective = objective_value(ds, &coefficients, gs, pc)?;
    Ok(OracleResult {
        coefficients,
        objective,
        steps,
        best_trace,
    })
}

/// `||X||_2^2` by power iteration on `X X^T`.
fn spectral_norm_sq<F: Scalar>(ds: &Dataset<F>) -> F {
    let gram = ds.x().dot(&ds.x().t());
    let n = gram.nrows();
    if n == 0 {
        return F::zero();
    }
    let mut v = ndarray::Array1::<F>::from_elem(n, F::one() / F::lit(n as f64).sqrt());
    let mut lambda = F::zero();
    for _ in 0..200 {
        let w = gram.dot(&v);
        let norm = w.dot(&w).sqrt();
        if norm == F::zero() {
            return F::zero();
        }
        lambda = v.dot(&w);
        v = w / norm;
    }
    lambda
}

/// Largest violation of the stationarity inclusion over all coefficients;
/// the maximum of [`kkt_violations`].
pub fn kkt_residual<F: Scalar>(
    ds: &Dataset<F>,
    gs: &GroupStructure,
    pc: &PenaltyConfig<F>,
    b: &CoefMatrix<F>,
) -> Result<F> {
    Ok(kkt_violations(ds, gs, pc, b)?
        .iter()
        .fold(F::zero(), |m, &v| m.max(v)))
}

/// Per-coefficient violation of the stationarity inclusion.
///
/// For each `(k, j)` the gradient term `(y_k - beta_k X) x_j^T` must lie in
/// the interval formed by summing the subdifferentials of every penalty term
/// at `beta_k^j`: a point for differentiable terms and `[-w, w]` for terms at
/// a kink. The residual is the distance to that interval.
pub fn kkt_violations<F: Scalar>(
    ds: &Dataset<F>,
    gs: &GroupStructure,
    pc: &PenaltyConfig<F>,
    b: &CoefMatrix<F>,
) -> Result<Array2<F>> {
    check_dims(ds, b)?;
    check_groups(ds, gs)?;
    let bv = b.values();
    let r = &ds.y() - &bv.dot(&ds.x());
    let corr = r.dot(&ds.x().t());
    let row_norms: Vec<Vec<F>> = (0..b.n_outputs())
        .map(|k| {
            gs.input_groups()
                .iter()
                .map(|g| b.row_group_norm(k, g))
                .collect()
        })
        .collect();
    let col_norms: Vec<Vec<F>> = (0..b.n_inputs())
        .map(|j| {
            gs.output_groups()
                .iter()
                .map(|h| b.col_group_norm(h, j))
                .collect()
        })
        .collect();

    let mut out = Array2::zeros((b.n_outputs(), b.n_inputs()));
    for k in 0..b.n_outputs() {
        for j in 0..b.n_inputs() {
            if ds.is_excluded(j) {
                continue;
            }
            let v = bv[[k, j]];
            let l1 = pc.l1_weight(ds.is_interaction(j));
            let (mut lo, mut hi) = if v == F::zero() {
                (-l1, l1)
            } else {
                (l1 * v.signum(), l1 * v.signum())
            };
            for &g in gs.groups_of_input(j) {
                let n = row_norms[k][g];
                if n == F::zero() {
                    lo -= pc.lambda2;
                    hi += pc.lambda2;
                } else {
                    lo += pc.lambda2 * v / n;
                    hi += pc.lambda2 * v / n;
                }
            }
            for &h in gs.groups_of_output(k) {
                let n = col_norms[j][h];
                if n == F::zero() {
                    lo -= pc.lambda3;
                    hi += pc.lambda3;
                } else {
                    lo += pc.lambda3 * v / n;
                    hi += pc.lambda3 * v / n;
                }
            }
            let c = corr[[k, j]];
            out[[k, j]] = (lo - c).max(c - hi).max(F::zero());
        }
    }
    Ok(out)
}
