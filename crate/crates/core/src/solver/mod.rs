//! Hierarchical group thresholding: optimality checks on the pattern DAG,
//! fixed-point updates for surviving coefficients, and the outer loop.

mod fit;
mod polish;
mod settings;
mod state;

pub use fit::{fit, fit_with_graph, FitReport};
pub use settings::{SolverSettings, UpdateRule};
pub use state::SolverState;
