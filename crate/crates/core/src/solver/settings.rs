use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How a surviving entry is updated when the DAG walk reaches it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateRule {
    /// Jump to the fixed point of the update formula for that coordinate,
    /// which is the exact one-coordinate minimiser.
    FixedPoint,
    /// One application of the update formula with group norms at their
    /// current values.
    SingleStep,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    /// Convergence threshold on the relative objective change per outer
    /// iteration.
    pub tol: f64,
    pub max_outer_iters: usize,
    /// Initial blend weight tried when a sweep raises the objective.
    pub damping: f64,
    /// Outer iterations between full residual recomputations.
    pub resync_period: usize,
    /// Ridge weight for the default initialisation.
    pub ridge_lambda: f64,
    /// Jump over the descendants of zeroed patterns. Turning this off visits
    /// every pattern and produces the same result more slowly.
    pub skip_descendants: bool,
    pub update: UpdateRule,
    /// Thresholding passes restarted after a converged pass leaves a zero
    /// coefficient that violates its optimality condition. 0 disables the
    /// certification step.
    pub max_restarts: usize,
    /// Violation of a zero coefficient's optimality condition tolerated
    /// without restarting.
    pub revive_tol: f64,
    /// After a pass, coefficients below this fraction of the largest one
    /// (or below it outright) are candidates for being set to zero.
    pub snap_threshold: f64,
    /// Largest support refined by Newton steps after a pass.
    pub polish_max_support: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_outer_iters: 1000,
            damping: 1.0,
            resync_period: 50,
            ridge_lambda: crate::model::DEFAULT_RIDGE_LAMBDA,
            skip_descendants: true,
            update: UpdateRule::FixedPoint,
            max_restarts: 20,
            revive_tol: 1e-7,
            snap_threshold: 1e-3,
            polish_max_support: 400,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::input(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_outer_iters == 0 {
            return Err(Error::input("max_outer_iters must be at least 1"));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::input(format!(
                "damping must lie in (0, 1], got {}",
                self.damping
            )));
        }
        if self.resync_period == 0 {
            return Err(Error::input("resync_period must be at least 1"));
        }
        if !(self.ridge_lambda > 0.0) {
            return Err(Error::input("ridge_lambda must be positive"));
        }
        if !(0.0..1.0).contains(&self.snap_threshold) {
            return Err(Error::input("snap_threshold must lie in [0, 1)"));
        }
        if !(self.revive_tol >= 0.0) {
            return Err(Error::input("revive_tol must be non-negative"));
        }
        Ok(())
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_outer_iters(mut self, n: usize) -> Self {
        self.max_outer_iters = n;
        self
    }

    pub fn with_skip(mut self, skip: bool) -> Self {
        self.skip_descendants = skip;
        self
    }

    pub fn with_max_restarts(mut self, n: usize) -> Self {
        self.max_restarts = n;
        self
    }
}
