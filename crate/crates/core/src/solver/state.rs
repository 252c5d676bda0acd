//! Thresholding checks and the coordinate update, evaluated against the
//! current coefficients and residual.
//!
//! All four checks use the partial correlation `z_kj = r_k^j x_j^T` and the
//! soft remainder `z_kj - lambda1 s_kj`, where `lambda1 s_kj` is `z_kj`
//! clipped to `[-lambda1, lambda1]`. With `lambda1 = 0` the clipped term is 0.

use std::collections::HashSet;

use ndarray::Array1;

use crate::dag::ZeroPattern;
use crate::error::Result;
use crate::model::{
    check_dims, check_groups, penalty_parts, CoefMatrix, Dataset, GroupStructure, PenaltyConfig,
    ResidualState,
};
use crate::scalar::{soft_threshold, Scalar};

/// Mutable solver state for one fit: coefficients plus the residual kept in
/// sync with them.
#[derive(Debug, Clone)]
pub struct SolverState<'a, F> {
    pub(crate) ds: &'a Dataset<F>,
    pub(crate) gs: &'a GroupStructure,
    pub(crate) pc: PenaltyConfig<F>,
    pub(crate) b: CoefMatrix<F>,
    pub(crate) rs: ResidualState<F>,
    x_sq: Vec<F>,
}

impl<'a, F: Scalar> SolverState<'a, F> {
    pub fn new(
        ds: &'a Dataset<F>,
        gs: &'a GroupStructure,
        pc: PenaltyConfig<F>,
        mut b: CoefMatrix<F>,
    ) -> Result<Self> {
        check_dims(ds, &b)?;
        check_groups(ds, gs)?;
        pc.validate()?;
        for j in (0..ds.n_inputs()).filter(|&j| ds.is_excluded(j)) {
            for k in 0..ds.n_outputs() {
                b.set(k, j, F::zero());
            }
        }
        let rs = ResidualState::new(ds, &b)?;
        let x_sq = (0..ds.n_inputs())
            .map(|j| {
                let x = ds.x_row(j);
                x.dot(&x)
            })
            .collect();
        Ok(Self {
            ds,
            gs,
            pc,
            b,
            rs,
            x_sq,
        })
    }

    pub fn coefficients(&self) -> &CoefMatrix<F> {
        &self.b
    }

    pub fn residual(&self) -> &ResidualState<F> {
        &self.rs
    }

    pub fn into_coefficients(self) -> CoefMatrix<F> {
        self.b
    }

    #[inline]
    fn l1(&self, j: usize) -> F {
        self.pc.l1_weight(self.ds.is_interaction(j))
    }

    /// `r_k^j x_j^T`
    #[inline]
    pub fn partial_correlation(&self, k: usize, j: usize) -> F {
        let x = self.ds.x_row(j);
        self.rs.dot_row(k, x) + self.b.get(k, j) * self.x_sq[j]
    }

    /// `z - lambda1 s`, i.e. the part of `z` outside `[-lambda1, lambda1]`.
    #[inline]
    fn soft_remainder(&self, k: usize, j: usize) -> F {
        soft_threshold(self.partial_correlation(k, j), self.l1(j))
    }

    fn row_group_zero(&self, k: usize, g: usize) -> bool {
        self.gs.input_groups()[g]
            .iter()
            .all(|&j| !self.b.is_nonzero(k, j))
    }

    fn col_group_zero(&self, h: usize, j: usize) -> bool {
        self.gs.output_groups()[h]
            .iter()
            .all(|&k| !self.b.is_nonzero(k, j))
    }

    /// Entry `(k, j)` is held at zero by a zero output group (other than
    /// `except_h`) or a zero input group (other than `except_g`).
    fn held_by_other_group(
        &self,
        k: usize,
        j: usize,
        except_g: Option<usize>,
        except_h: Option<usize>,
    ) -> bool {
        if self.b.is_nonzero(k, j) {
            return false;
        }
        self.gs
            .groups_of_output(k)
            .iter()
            .any(|&h| Some(h) != except_h && self.col_group_zero(h, j))
            || self
                .gs
                .groups_of_input(j)
                .iter()
                .any(|&g| Some(g) != except_g && self.row_group_zero(k, g))
    }

    /// Rule 1: `B_h^g = 0` if the squared soft remainders over the rows and
    /// columns of the block that are not already entirely zero sum to at most
    /// `(lambda2 sqrt|h| + lambda3 sqrt|g|)^2`.
    pub fn check_block_zero(&self, g: usize, h: usize) -> bool {
        let gi = &self.gs.input_groups()[g];
        let hi = &self.gs.output_groups()[h];
        let live_cols: Vec<usize> = gi
            .iter()
            .copied()
            .filter(|&j| hi.iter().any(|&k| self.b.is_nonzero(k, j)))
            .collect();
        let live_rows: Vec<usize> = hi
            .iter()
            .copied()
            .filter(|&k| gi.iter().any(|&j| self.b.is_nonzero(k, j)))
            .collect();
        let mut lhs = F::zero();
        for &k in &live_rows {
            for &j in &live_cols {
                let s = self.soft_remainder(k, j);
                lhs += s * s;
            }
        }
        let rhs = self.pc.lambda2 * F::lit(hi.len() as f64).sqrt()
            + self.pc.lambda3 * F::lit(gi.len() as f64).sqrt();
        lhs <= rhs * rhs
    }

    /// Rule 2: `beta_k^g = 0` if the squared soft remainders over the
    /// columns of `g` not held at zero by another group sum to at most
    /// `lambda2^2`.
    pub fn check_row_group_zero(&self, k: usize, g: usize) -> bool {
        let mut lhs = F::zero();
        for &j in &self.gs.input_groups()[g] {
            if self.held_by_other_group(k, j, Some(g), None) {
                continue;
            }
            let s = self.soft_remainder(k, j);
            lhs += s * s;
        }
        lhs <= self.pc.lambda2 * self.pc.lambda2
    }

    /// Rule 3: `beta_h^j = 0`, the output-side mirror of rule 2.
    pub fn check_col_group_zero(&self, h: usize, j: usize) -> bool {
        let mut lhs = F::zero();
        for &k in &self.gs.output_groups()[h] {
            if self.held_by_other_group(k, j, None, Some(h)) {
                continue;
            }
            let s = self.soft_remainder(k, j);
            lhs += s * s;
        }
        lhs <= self.pc.lambda3 * self.pc.lambda3
    }

    /// Rule 4: `beta_k^j = 0` if `|r_k^j x_j^T| <= lambda1`, widened by
    /// `lambda2` (`lambda3`) for every group containing the entry whose other
    /// members are all zero. Inside such a group the norm reduces to
    /// `|beta_k^j|`, so the test is the exact one-coordinate condition.
    pub fn check_entry_zero(&self, k: usize, j: usize) -> bool {
        self.partial_correlation(k, j).abs() <= self.entry_bound(k, j)
    }

    fn entry_bound(&self, k: usize, j: usize) -> F {
        let mut bound = self.l1(j);
        if self.pc.lambda2 > F::zero() {
            for &g in self.gs.groups_of_input(j) {
                let alone = self.gs.input_groups()[g]
                    .iter()
                    .all(|&jj| jj == j || !self.b.is_nonzero(k, jj));
                if alone {
                    bound += self.pc.lambda2;
                }
            }
        }
        if self.pc.lambda3 > F::zero() {
            for &h in self.gs.groups_of_output(k) {
                let alone = self.gs.output_groups()[h]
                    .iter()
                    .all(|&kk| kk == k || !self.b.is_nonzero(kk, j));
                if alone {
                    bound += self.pc.lambda3;
                }
            }
        }
        bound
    }

    /// How far a zero coefficient's partial correlation lies outside the
    /// range for which zero is optimal, all other coefficients fixed.
    pub fn zero_violation(&self, k: usize, j: usize) -> F {
        (self.partial_correlation(k, j).abs() - self.entry_bound(k, j)).max(F::zero())
    }

    /// Exact minimiser of the objective over `beta_k^j` alone, by bisection
    /// on the (monotone) derivative.
    pub fn coordinate_minimizer(&self, k: usize, j: usize) -> F {
        let z = self.partial_correlation(k, j);
        let xx = self.x_sq[j];
        let w = z.abs();
        if w <= self.l1(j) || xx <= F::zero() {
            return F::zero();
        }
        let own = self.b.get(k, j);
        let mut rest: Vec<(F, F)> = Vec::new();
        for &g in self.gs.groups_of_input(j) {
            let n = self.b.row_group_norm(k, &self.gs.input_groups()[g]);
            rest.push((self.pc.lambda2, (n * n - own * own).max(F::zero())));
        }
        for &h in self.gs.groups_of_output(k) {
            let n = self.b.col_group_norm(&self.gs.output_groups()[h], j);
            rest.push((self.pc.lambda3, (n * n - own * own).max(F::zero())));
        }
        let slope = |u: F| {
            let mut d = xx * u - w + self.l1(j);
            for &(lam, a) in &rest {
                let n = (a + u * u).sqrt();
                d += if n > F::zero() { lam * u / n } else { lam };
            }
            d
        };
        if slope(F::zero()) >= F::zero() {
            return F::zero();
        }
        let (mut lo, mut hi) = (F::zero(), w / xx);
        for _ in 0..200 {
            let mid = F::lit(0.5) * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if slope(mid) < F::zero() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        F::lit(0.5) * (lo + hi) * z.signum()
    }

    /// The fixed-point coordinate update
    /// `soft(z, lambda1) / (1 + sum_g lambda2/||beta_k^g|| + sum_h lambda3/||beta_h^j||)`
    /// with group norms at their current values. Returns `None` when a group
    /// norm has underflowed to zero.
    pub fn update_coefficient(&self, k: usize, j: usize) -> Option<F> {
        let z = self.partial_correlation(k, j);
        let num = soft_threshold(z, self.l1(j));
        if num == F::zero() {
            return Some(F::zero());
        }
        let mut denom = self.x_sq[j];
        if self.pc.lambda2 > F::zero() {
            for &g in self.gs.groups_of_input(j) {
                let n = self.b.row_group_norm(k, &self.gs.input_groups()[g]);
                if n == F::zero() {
                    return None;
                }
                denom += self.pc.lambda2 / n;
            }
        }
        if self.pc.lambda3 > F::zero() {
            for &h in self.gs.groups_of_output(k) {
                let n = self.b.col_group_norm(&self.gs.output_groups()[h], j);
                if n == F::zero() {
                    return None;
                }
                denom += self.pc.lambda3 / n;
            }
        }
        let v = num / denom;
        v.is_finite().then_some(v)
    }

    /// Writes one coefficient and updates the residual.
    #[inline]
    pub fn set_coefficient(&mut self, k: usize, j: usize, v: F) {
        let old = self.b.set(k, j, v);
        let delta = self.b.get(k, j) - old;
        self.rs.apply_delta(k, delta, self.ds.x_row(j));
    }

    /// True when every coefficient of the pattern is exactly zero.
    pub fn pattern_is_zero(&self, p: ZeroPattern) -> bool {
        match p {
            ZeroPattern::Root => self.b.nnz() == 0,
            ZeroPattern::Block { g, h } => {
                let gi = &self.gs.input_groups()[g];
                self.gs.output_groups()[h]
                    .iter()
                    .all(|&k| gi.iter().all(|&j| !self.b.is_nonzero(k, j)))
            }
            ZeroPattern::RowInBlock { k, g } => self.row_group_zero(k, g),
            ZeroPattern::ColInBlock { j, h } => self.col_group_zero(h, j),
            ZeroPattern::Entry { k, j } => !self.b.is_nonzero(k, j),
        }
    }

    /// Applies the check matching the pattern kind.
    pub fn check(&self, p: ZeroPattern) -> bool {
        match p {
            ZeroPattern::Root => false,
            ZeroPattern::Block { g, h } => self.check_block_zero(g, h),
            ZeroPattern::RowInBlock { k, g } => self.check_row_group_zero(k, g),
            ZeroPattern::ColInBlock { j, h } => self.check_col_group_zero(h, j),
            ZeroPattern::Entry { k, j } => self.check_entry_zero(k, j),
        }
    }

    /// Nonzero coefficients covered by the pattern.
    fn pattern_support(&self, p: ZeroPattern) -> Vec<(usize, usize)> {
        let gs = self.gs;
        let mut out = Vec::new();
        let mut push = |k: usize, j: usize| {
            if self.b.is_nonzero(k, j) {
                out.push((k, j));
            }
        };
        match p {
            ZeroPattern::Root => {
                for (k, j, _) in self.b.triplets() {
                    push(k, j);
                }
            }
            ZeroPattern::Block { g, h } => {
                for &k in &gs.output_groups()[h] {
                    for &j in &gs.input_groups()[g] {
                        push(k, j);
                    }
                }
            }
            ZeroPattern::RowInBlock { k, g } => {
                for &j in &gs.input_groups()[g] {
                    push(k, j);
                }
            }
            ZeroPattern::ColInBlock { j, h } => {
                for &k in &gs.output_groups()[h] {
                    push(k, j);
                }
            }
            ZeroPattern::Entry { k, j } => push(k, j),
        }
        out
    }

    /// Change in the objective if the pattern were set to zero with
    /// everything else held fixed.
    pub fn zeroing_delta(&self, p: ZeroPattern) -> F {
        let support = self.pattern_support(p);
        if support.is_empty() {
            return F::zero();
        }
        let removed: HashSet<(usize, usize)> = support.iter().copied().collect();
        let mut delta = F::zero();

        let mut rows: Vec<usize> = support.iter().map(|&(k, _)| k).collect();
        rows.sort_unstable();
        rows.dedup();
        for k in rows {
            let mut d = Array1::<F>::zeros(self.ds.n_samples());
            for &(kk, j) in &support {
                if kk == k {
                    d.scaled_add(self.b.get(k, j), &self.ds.x_row(j));
                }
            }
            delta = delta + self.rs.row(k).dot(&d) + F::lit(0.5) * d.dot(&d);
        }

        let mut row_groups = HashSet::new();
        let mut col_groups = HashSet::new();
        for &(k, j) in &support {
            delta -= self.l1(j) * self.b.get(k, j).abs();
            for &g in self.gs.groups_of_input(j) {
                row_groups.insert((k, g));
            }
            for &h in self.gs.groups_of_output(k) {
                col_groups.insert((h, j));
            }
        }
        if self.pc.lambda2 > F::zero() {
            for (k, g) in row_groups {
                let mut old = F::zero();
                let mut new = F::zero();
                for &j in &self.gs.input_groups()[g] {
                    let v = self.b.get(k, j);
                    old += v * v;
                    if !removed.contains(&(k, j)) {
                        new += v * v;
                    }
                }
                delta += self.pc.lambda2 * (new.sqrt() - old.sqrt());
            }
        }
        if self.pc.lambda3 > F::zero() {
            for (h, j) in col_groups {
                let mut old = F::zero();
                let mut new = F::zero();
                for &k in &self.gs.output_groups()[h] {
                    let v = self.b.get(k, j);
                    old += v * v;
                    if !removed.contains(&(k, j)) {
                        new += v * v;
                    }
                }
                delta += self.pc.lambda3 * (new.sqrt() - old.sqrt());
            }
        }
        delta
    }

    /// Sets every coefficient of the pattern to zero.
    pub fn zero_pattern(&mut self, p: ZeroPattern) {
        match p {
            ZeroPattern::Root => {
                let nz: Vec<(usize, usize)> = self.b.triplets().map(|(k, j, _)| (k, j)).collect();
                for (k, j) in nz {
                    self.set_coefficient(k, j, F::zero());
                }
            }
            ZeroPattern::Block { g, h } => {
                let gs = self.gs;
                for &k in &gs.output_groups()[h] {
                    for &j in &gs.input_groups()[g] {
                        if self.b.is_nonzero(k, j) {
                            self.set_coefficient(k, j, F::zero());
                        }
                    }
                }
            }
            ZeroPattern::RowInBlock { k, g } => {
                let gs = self.gs;
                for &j in &gs.input_groups()[g] {
                    if self.b.is_nonzero(k, j) {
                        self.set_coefficient(k, j, F::zero());
                    }
                }
            }
            ZeroPattern::ColInBlock { j, h } => {
                let gs = self.gs;
                for &k in &gs.output_groups()[h] {
                    if self.b.is_nonzero(k, j) {
                        self.set_coefficient(k, j, F::zero());
                    }
                }
            }
            ZeroPattern::Entry { k, j } => self.set_coefficient(k, j, F::zero()),
        }
    }

    /// Objective evaluated from the tracked residual.
    pub fn objective(&self) -> F {
        let (l1, ig, og) = penalty_parts(|j| self.ds.is_interaction(j), &self.b, self.gs, &self.pc);
        self.rs.half_sq_norm() + l1 + ig + og
    }

    pub fn resync(&mut self) {
        self.rs.resync(self.ds, &self.b);
    }
}
