//! Data model shared by every solver: datasets, group structures, penalty
//! weights, coefficients, residual bookkeeping and the objective.

mod coef;
mod dataset;
mod groups;
mod objective;
mod penalty;
mod residual;
mod ridge;

pub use coef::CoefMatrix;
pub use dataset::{standardize_rows, Dataset, RowScaling, Standardized};
pub use groups::GroupStructure;
pub use objective::{objective_parts, objective_value, penalty_parts, ObjectiveParts};
pub use penalty::PenaltyConfig;
pub use residual::{partial_residual, ResidualState};
pub use ridge::{ridge_init, DEFAULT_RIDGE_LAMBDA};

pub(crate) use objective::check_groups;
pub(crate) use residual::check_dims;
