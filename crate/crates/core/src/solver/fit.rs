use serde::{Deserialize, Serialize};

use super::settings::{SolverSettings, UpdateRule};
use super::polish::{newton_polish, survivor_violation};
use super::state::SolverState;
use crate::dag::{PatternGraph, ZeroPattern};
use crate::error::Result;
use crate::model::{ridge_init, CoefMatrix, Dataset, GroupStructure, PenaltyConfig};
use crate::scalar::Scalar;

const ALPHA_MIN: f64 = 1.0 / 64.0;

/// Summary of a fit. Traces start with the value at the initial point and
/// cover the final thresholding pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub final_objective: f64,
    /// Sweeps over all passes.
    pub outer_iterations: usize,
    pub objective_trace: Vec<f64>,
    pub support_size_trace: Vec<usize>,
    pub converged: bool,
    /// Sweeps that had to be blended with the previous iterate.
    pub damped_sweeps: usize,
    /// Passes restarted after certification revived zeroed coefficients.
    pub restarts: usize,
    /// Coefficients revived over all restarts.
    pub revived: usize,
}

impl FitReport {
    /// Per-iteration trace as `iter<TAB>objective<TAB>nnz` lines.
    pub fn trace_tsv(&self) -> String {
        let mut s = String::from("iter\tobjective\tnnz\n");
        for (i, (o, n)) in self
            .objective_trace
            .iter()
            .zip(&self.support_size_trace)
            .enumerate()
        {
            s.push_str(&format!("{i}\t{o:.17e}\t{n}\n"));
        }
        s
    }

    pub fn objective_monotone(&self, slack: f64) -> bool {
        self.objective_trace.windows(2).all(|w| w[1] <= w[0] + slack)
    }

    pub fn support_monotone(&self) -> bool {
        self.support_size_trace.windows(2).all(|w| w[1] <= w[0])
    }
}

/// Hierarchical group thresholding.
///
/// Each outer iteration walks the pattern DAG depth-first. A pattern whose
/// coefficients are already zero, or whose optimality check passes, is set to
/// zero and its descendants are skipped; an entry that survives all checks is
/// updated in place. Within a pass zeroed coefficients are never revived, so
/// the support only shrinks. A pass ends when the relative objective change
/// drops below `settings.tol`.
///
/// Checks evaluated far from the optimum can zero a coefficient that is
/// nonzero at the optimum. After a converged pass every zero coefficient is
/// tested against its exact one-coordinate condition; violators are set to
/// their coordinate minimisers, near-zero coefficients that belong at zero
/// are zeroed, and when nothing else changes the survivors are refined by
/// Newton steps on the fixed support. A new pass starts from the result, up
/// to `settings.max_restarts` times.
pub fn fit<F: Scalar>(
    ds: &Dataset<F>,
    gs: &GroupStructure,
    pc: &PenaltyConfig<F>,
    settings: &SolverSettings,
    b_init: Option<CoefMatrix<F>>,
) -> Result<(CoefMatrix<F>, FitReport)> {
    let graph = PatternGraph::build(gs);
    fit_with_graph(ds, gs, &graph, pc, settings, b_init)
}

/// As [`fit`], reusing a pattern graph built for `gs`.
pub fn fit_with_graph<F: Scalar>(
    ds: &Dataset<F>,
    gs: &GroupStructure,
    graph: &PatternGraph,
    pc: &PenaltyConfig<F>,
    settings: &SolverSettings,
    b_init: Option<CoefMatrix<F>>,
) -> Result<(CoefMatrix<F>, FitReport)> {
    settings.validate()?;
    let b0 = match b_init {
        Some(b) => b,
        None => ridge_init(ds, F::lit(settings.ridge_lambda))?,
    };
    let mut state = SolverState::new(ds, gs, *pc, b0)?;

    let mut iters = 0;
    let mut damped_sweeps = 0;
    let mut restarts = 0;
    let mut revived = 0;
    let pass = loop {
        let pass = run_pass(&mut state, graph, settings, &mut iters);
        damped_sweeps += pass.damped;
        if !pass.converged || restarts >= settings.max_restarts {
            break pass;
        }
        let tol = F::lit(settings.revive_tol);
        let snapped = snap(&mut state, F::lit(settings.snap_threshold), tol);
        let n = revive(&mut state, tol);
        let polished = n == 0
            && snapped == 0
            && state.b.nnz() <= settings.polish_max_support
            && survivor_violation(&state) > tol
            && newton_polish(&mut state, tol);
        if n == 0 && snapped == 0 && !polished {
            break pass;
        }
        log::debug!("pass {restarts}: snapped {snapped}, revived {n} coefficients");
        restarts += 1;
        revived += n;
    };

    state.resync();
    let final_objective = state.objective().as_f64();
    let mut objective_trace = pass.objective_trace;
    if let Some(last) = objective_trace.last_mut() {
        *last = final_objective;
    }
    let report = FitReport {
        final_objective,
        outer_iterations: iters,
        objective_trace,
        support_size_trace: pass.support_size_trace,
        converged: pass.converged,
        damped_sweeps,
        restarts,
        revived,
    };
    Ok((state.into_coefficients(), report))
}

struct Pass {
    objective_trace: Vec<f64>,
    support_size_trace: Vec<usize>,
    converged: bool,
    damped: usize,
}

/// Sweeps until convergence, a stall, or the shared iteration budget runs
/// out.
fn run_pass<F: Scalar>(
    state: &mut SolverState<'_, F>,
    graph: &PatternGraph,
    settings: &SolverSettings,
    iters: &mut usize,
) -> Pass {
    let mut obj = state.objective();
    let mut pass = Pass {
        objective_trace: vec![obj.as_f64()],
        support_size_trace: vec![state.b.nnz()],
        converged: false,
        damped: 0,
    };
    while *iters < settings.max_outer_iters {
        *iters += 1;
        let before = state.b.clone();
        sweep(state, graph, settings.skip_descendants, settings.update);
        if (*iters).is_multiple_of(settings.resync_period) {
            state.resync();
        }
        let mut new_obj = state.objective();

        let slack = F::lit(F::OBJECTIVE_SLACK) * obj.abs().max(F::one());
        let mut stalled = false;
        if new_obj > obj + slack {
            pass.damped += 1;
            match damp(state, &before, obj, slack, settings.damping) {
                Some(v) => new_obj = v,
                None => {
                    restore(state, &before);
                    new_obj = state.objective();
                    stalled = true;
                }
            }
        }

        let change = (obj - new_obj).abs() / obj.abs().max(F::min_positive_value());
        obj = new_obj;
        pass.objective_trace.push(obj.as_f64());
        pass.support_size_trace.push(state.b.nnz());
        if stalled {
            log::debug!("sweep {iters} could not decrease the objective; stopping");
            break;
        }
        if state.b.nnz() == 0 || change.as_f64() < settings.tol {
            pass.converged = true;
            break;
        }
    }
    pass
}

/// Zeroes coefficients that are tiny relative to the largest one (or to 1,
/// the natural scale under unit-norm rows) when zero satisfies their
/// optimality conditions and the objective does not rise. Catches
/// coefficients that coordinate updates only shrink geometrically, such as
/// an entry whose zero needs the combined slack of two overlapping groups.
/// Thresholds are tried from `threshold` down in decades; the first
/// accepted set wins. Returns how many were zeroed.
fn snap<F: Scalar>(state: &mut SolverState<'_, F>, threshold: F, tol: F) -> usize {
    let scale = state
        .b
        .triplets()
        .fold(F::one(), |m, (_, _, v)| m.max(v.abs()));
    let mut t = threshold * scale;
    for _ in 0..7 {
        let n = try_snap(state, t, tol);
        if n > 0 {
            return n;
        }
        t *= F::lit(0.1);
    }
    0
}

fn try_snap<F: Scalar>(state: &mut SolverState<'_, F>, cutoff: F, tol: F) -> usize {
    let mut cand: Vec<(usize, usize, F)> = state
        .b
        .triplets()
        .filter(|&(_, _, v)| v.abs() <= cutoff)
        .collect();
    if cand.is_empty() {
        return 0;
    }
    state.resync();
    let before = state.objective();
    for &(k, j, _) in &cand {
        state.set_coefficient(k, j, F::zero());
    }
    loop {
        let (keep, restore): (Vec<_>, Vec<_>) = cand
            .iter()
            .partition(|&&(k, j, _)| state.zero_violation(k, j) <= tol);
        if restore.is_empty() {
            break;
        }
        for &(k, j, v) in &restore {
            state.set_coefficient(k, j, v);
        }
        cand = keep;
    }
    state.resync();
    if cand.is_empty() || state.objective() > before {
        for &(k, j, v) in &cand {
            state.set_coefficient(k, j, v);
        }
        state.resync();
        return 0;
    }
    cand.len()
}

/// Sets every zero coefficient whose optimality condition is violated by
/// more than `tol` to its coordinate minimiser. Returns how many changed.
fn revive<F: Scalar>(state: &mut SolverState<'_, F>, tol: F) -> usize {
    state.resync();
    let mut n = 0;
    for k in 0..state.ds.n_outputs() {
        for j in 0..state.ds.n_inputs() {
            if state.ds.is_excluded(j) || state.b.is_nonzero(k, j) {
                continue;
            }
            if state.zero_violation(k, j) > tol {
                let v = state.coordinate_minimizer(k, j);
                if v != F::zero() {
                    state.set_coefficient(k, j, v);
                    n += 1;
                }
            }
        }
    }
    n
}

/// One pass over the DAG: threshold patterns, update surviving entries.
pub(crate) fn sweep<F: Scalar>(
    state: &mut SolverState<'_, F>,
    graph: &PatternGraph,
    skip: bool,
    rule: UpdateRule,
) {
    graph.walk(skip, &mut |p| visit(state, p, rule));
}

fn visit<F: Scalar>(state: &mut SolverState<'_, F>, p: ZeroPattern, rule: UpdateRule) -> bool {
    if state.pattern_is_zero(p) {
        return true;
    }
    if state.check(p) && state.zeroing_delta(p) <= F::zero() {
        state.zero_pattern(p);
        return true;
    }
    if let ZeroPattern::Entry { k, j } = p {
        let v = match rule {
            UpdateRule::FixedPoint => state.coordinate_minimizer(k, j),
            UpdateRule::SingleStep => state.update_coefficient(k, j).unwrap_or_else(F::zero),
        };
        state.set_coefficient(k, j, v);
        // an update can land exactly on zero
        return v == F::zero();
    }
    false
}

/// Blends surviving coefficients toward their previous values until the
/// objective no longer exceeds `obj`. Coefficients zeroed by the sweep stay
/// zero. Returns the accepted objective.
fn damp<F: Scalar>(
    state: &mut SolverState<'_, F>,
    before: &CoefMatrix<F>,
    obj: F,
    slack: F,
    damping: f64,
) -> Option<F> {
    let after = state.b.clone();
    let mut alpha = damping.min(1.0) * 0.5;
    while alpha >= ALPHA_MIN {
        let a = F::lit(alpha);
        for (k, j, new) in after.triplets() {
            let old = before.get(k, j);
            state.set_coefficient(k, j, (F::one() - a) * old + a * new);
        }
        state.resync();
        let v = state.objective();
        if v <= obj + slack {
            return Some(v);
        }
        alpha *= 0.5;
    }
    None
}

fn restore<F: Scalar>(state: &mut SolverState<'_, F>, before: &CoefMatrix<F>) {
    for (k, j, v) in before.triplets() {
        state.set_coefficient(k, j, v);
    }
    state.resync();
}
