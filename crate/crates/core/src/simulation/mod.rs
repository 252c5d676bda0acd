//! Synthetic benchmark: data with a known overlapping group layout,
//! support-recovery precision and recall, and refit prediction error.

mod evaluate;
mod generate;
mod replicate;

pub use evaluate::{aupr, auto_thresholds, precision_recall_curve, refit_prediction_error, PrPoint};
pub use generate::{
    generate_dataset, GroupLayout, SimConfig, SimInstance, PAPER_INPUT_GROUPS, PAPER_OUTPUT_GROUPS,
};
pub use replicate::{
    run_replicate, run_replicates, summarize, ModeResult, ReplicateResult, SimPenalty, StructureMode,
};
