//! Structured input-output lasso with hierarchical group thresholding.

pub mod dag;
pub mod error;
pub mod interactions;
pub mod io;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod scalar;
pub mod simulation;
pub mod solver;
pub mod tuning;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use model::{CoefMatrix, Dataset, GroupStructure, PenaltyConfig};
pub use solver::{fit, FitReport, SolverSettings, UpdateRule};

pub type Dataset64 = Dataset<f64>;
pub type Dataset32 = Dataset<f32>;
pub type CoefMatrix64 = CoefMatrix<f64>;
pub type CoefMatrix32 = CoefMatrix<f32>;
pub type Penalty64 = PenaltyConfig<f64>;
pub type Penalty32 = PenaltyConfig<f32>;
