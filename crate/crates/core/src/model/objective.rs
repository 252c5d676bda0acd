use serde::Serialize;

use super::residual::{check_dims, full_residual};
use super::{CoefMatrix, Dataset, GroupStructure, PenaltyConfig};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// The objective split into its loss and penalty terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ObjectiveParts<F> {
    /// `0.5 ||Y - B X||_F^2`
    pub loss: F,
    /// `lambda1 ||B_marginal||_1 + lambda4 ||B_interaction||_1`
    pub l1: F,
    /// `lambda2 sum_k sum_g ||beta_k^g||_2`
    pub input_groups: F,
    /// `lambda3 sum_j sum_h ||beta_h^j||_2`
    pub output_groups: F,
}

impl<F: Scalar> ObjectiveParts<F> {
    pub fn total(&self) -> F {
        self.loss + self.penalty()
    }

    pub fn penalty(&self) -> F {
        self.l1 + self.input_groups + self.output_groups
    }
}

pub(crate) fn check_groups<F: Scalar>(ds: &Dataset<F>, gs: &GroupStructure) -> Result<()> {
    if gs.n_inputs() != ds.n_inputs() {
        return Err(Error::dim(
            "input groups cover a different input count",
            gs.n_inputs(),
            ds.n_inputs(),
        ));
    }
    if gs.n_outputs() != ds.n_outputs() {
        return Err(Error::dim(
            "output groups cover a different output count",
            gs.n_outputs(),
            ds.n_outputs(),
        ));
    }
    Ok(())
}

/// Penalty terms only; does not touch the data.
pub fn penalty_parts<F: Scalar>(
    interaction: impl Fn(usize) -> bool,
    b: &CoefMatrix<F>,
    gs: &GroupStructure,
    pc: &PenaltyConfig<F>,
) -> (F, F, F) {
    let mut l1_marg = F::zero();
    let mut l1_int = F::zero();
    for (_, j, v) in b.triplets() {
        if interaction(j) {
            l1_int += v.abs();
        } else {
            l1_marg += v.abs();
        }
    }
    let l1 = pc.lambda1 * l1_marg + pc.lambda4 * l1_int;

    let mut input_groups = F::zero();
    if pc.lambda2 != F::zero() {
        for k in 0..b.n_outputs() {
            for g in gs.input_groups() {
                input_groups += b.row_group_norm(k, g);
            }
        }
        input_groups *= pc.lambda2;
    }

    let mut output_groups = F::zero();
    if pc.lambda3 != F::zero() {
        for j in 0..b.n_inputs() {
            for h in gs.output_groups() {
                output_groups += b.col_group_norm(h, j);
            }
        }
        output_groups *= pc.lambda3;
    }
    (l1, input_groups, output_groups)
}

pub fn objective_parts<F: Scalar>(
    ds: &Dataset<F>,
    b: &CoefMatrix<F>,
    gs: &GroupStructure,
    pc: &PenaltyConfig<F>,
) -> Result<ObjectiveParts<F>> {
    check_dims(ds, b)?;
    check_groups(ds, gs)?;
    let r = full_residual(ds, b);
    let loss = F::lit(0.5) * r.iter().map(|v| *v * *v).sum::<F>();
    let (l1, input_groups, output_groups) =
        penalty_parts(|j| ds.is_interaction(j), b, gs, pc);
    Ok(ObjectiveParts {
        loss,
        l1,
        input_groups,
        output_groups,
    })
}

/// `0.5 ||Y - BX||_F^2 + lambda1 ||B||_1 + lambda2 sum_k sum_g ||beta_k^g||
///  + lambda3 sum_j sum_h ||beta_h^j||`.
pub fn objective_value<F: Scalar>(
    ds: &Dataset<F>,
    b: &CoefMatrix<F>,
    gs: &GroupStructure,
    pc: &PenaltyConfig<F>,
) -> Result<F> {
    Ok(objective_parts(ds, b, gs, pc)?.total())
}
