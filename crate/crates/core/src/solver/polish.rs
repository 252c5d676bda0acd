//! Newton refinement of the surviving coefficients with the support held
//! fixed. On a fixed support with every group norm positive the objective is
//! twice differentiable, so a few damped Newton steps finish what coordinate
//! updates approach only slowly when several small coefficients are coupled
//! through shared groups.

use std::collections::HashMap;

use ndarray::{Array1, Array2};

use super::state::SolverState;
use crate::linalg::{cholesky, cholesky_solve};
use crate::scalar::Scalar;

const MAX_NEWTON_STEPS: usize = 50;

/// Gradient of the objective restricted to the support, in `support` order.
fn support_gradient<F: Scalar>(
    state: &SolverState<'_, F>,
    support: &[(usize, usize)],
) -> Array1<F> {
    let ds = state.ds;
    let gs = state.gs;
    let pc = &state.pc;
    let b = &state.b;
    let mut g = Array1::zeros(support.len());
    for (i, &(k, j)) in support.iter().enumerate() {
        let v = b.get(k, j);
        let mut d = -state.rs.dot_row(k, ds.x_row(j))
            + pc.l1_weight(ds.is_interaction(j)) * v.signum();
        if pc.lambda2 > F::zero() {
            for &gi in gs.groups_of_input(j) {
                d += pc.lambda2 * v / b.row_group_norm(k, &gs.input_groups()[gi]);
            }
        }
        if pc.lambda3 > F::zero() {
            for &hi in gs.groups_of_output(k) {
                d += pc.lambda3 * v / b.col_group_norm(&gs.output_groups()[hi], j);
            }
        }
        g[i] = d;
    }
    g
}

/// Largest stationarity violation over the nonzero coefficients.
pub(crate) fn survivor_violation<F: Scalar>(state: &SolverState<'_, F>) -> F {
    let support: Vec<(usize, usize)> = state.b.triplets().map(|(k, j, _)| (k, j)).collect();
    support_gradient(state, &support)
        .iter()
        .fold(F::zero(), |m, v| m.max(v.abs()))
}

fn support_hessian<F: Scalar>(
    state: &SolverState<'_, F>,
    support: &[(usize, usize)],
    index: &HashMap<(usize, usize), usize>,
) -> Array2<F> {
    let ds = state.ds;
    let gs = state.gs;
    let pc = &state.pc;
    let b = &state.b;
    let m = support.len();
    let mut h = Array2::zeros((m, m));
    for (a, &(k, j)) in support.iter().enumerate() {
        for (c, &(k2, j2)) in support.iter().enumerate().skip(a) {
            if k == k2 {
                let v = ds.x_row(j).dot(&ds.x_row(j2));
                h[[a, c]] = v;
                h[[c, a]] = v;
            }
        }
    }
    let mut add_group = |lam: F, members: Vec<usize>| {
        let vals: Vec<F> = members
            .iter()
            .map(|&i| b.get(support[i].0, support[i].1))
            .collect();
        let n = vals.iter().map(|v| *v * *v).sum::<F>().sqrt();
        if n == F::zero() {
            return;
        }
        let n3 = n * n * n;
        for (p, &ip) in members.iter().enumerate() {
            h[[ip, ip]] += lam / n;
            for (q, &iq) in members.iter().enumerate() {
                h[[ip, iq]] -= lam * vals[p] * vals[q] / n3;
            }
        }
    };
    if pc.lambda2 > F::zero() {
        for k in 0..b.n_outputs() {
            for g in gs.input_groups() {
                let members: Vec<usize> =
                    g.iter().filter_map(|&j| index.get(&(k, j)).copied()).collect();
                if !members.is_empty() {
                    add_group(pc.lambda2, members);
                }
            }
        }
    }
    if pc.lambda3 > F::zero() {
        for j in 0..b.n_inputs() {
            for hgrp in gs.output_groups() {
                let members: Vec<usize> = hgrp
                    .iter()
                    .filter_map(|&k| index.get(&(k, j)).copied())
                    .collect();
                if !members.is_empty() {
                    add_group(pc.lambda3, members);
                }
            }
        }
    }
    h
}

/// Damped Newton steps on the current support until the largest gradient
/// entry drops below `tol` or no step decreases the objective. Coefficients
/// outside the support stay zero. Returns true if the objective decreased.
pub(crate) fn newton_polish<F: Scalar>(state: &mut SolverState<'_, F>, tol: F) -> bool {
    let support: Vec<(usize, usize)> = state.b.triplets().map(|(k, j, _)| (k, j)).collect();
    if support.is_empty() {
        return false;
    }
    let index: HashMap<(usize, usize), usize> =
        support.iter().enumerate().map(|(i, &kj)| (kj, i)).collect();
    state.resync();
    let start = state.objective();
    let mut obj = start;
    for _ in 0..MAX_NEWTON_STEPS {
        let g = support_gradient(state, &support);
        if g.iter().all(|v| v.abs() <= tol) {
            break;
        }
        let h = support_hessian(state, &support, &index);
        let Some(step) = newton_direction(&h, &g) else {
            break;
        };
        let old: Vec<F> = support.iter().map(|&(k, j)| state.b.get(k, j)).collect();
        let mut t = F::one();
        let mut accepted = false;
        for _ in 0..40 {
            let mut crosses_zero = false;
            for (i, &(k, j)) in support.iter().enumerate() {
                let v = old[i] - t * step[i];
                crosses_zero |= v == F::zero();
                state.set_coefficient(k, j, v);
            }
            if !crosses_zero
                && state.objective() < obj {
                    accepted = true;
                    break;
                }
            t *= F::lit(0.5);
        }
        if !accepted {
            for (i, &(k, j)) in support.iter().enumerate() {
                state.set_coefficient(k, j, old[i]);
            }
            break;
        }
        state.resync();
        obj = state.objective();
    }
    state.resync();
    state.objective() < start
}

/// Solves `H d = g`, adding a growing ridge until the factorisation works.
fn newton_direction<F: Scalar>(h: &Array2<F>, g: &Array1<F>) -> Option<Array1<F>> {
    let scale = h.diag().iter().fold(F::zero(), |m, v| m.max(v.abs()));
    let mut mu = scale * F::lit(1e-14);
    for _ in 0..12 {
        let mut shifted = h.clone();
        for i in 0..shifted.nrows() {
            shifted[[i, i]] += mu;
        }
        if let Ok(l) = cholesky(shifted.view()) {
            let d = cholesky_solve(l.view(), g.view());
            if d.iter().all(|v| v.is_finite()) {
                return Some(d);
            }
        }
        mu = if mu > F::zero() { mu * F::lit(100.0) } else { F::lit(1e-12) };
    }
    None
}
