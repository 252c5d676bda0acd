use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::evaluate::{aupr, auto_thresholds, precision_recall_curve, refit_prediction_error, PrPoint};
use super::generate::{generate_dataset, SimConfig};
use crate::error::Result;
use crate::model::PenaltyConfig;
use crate::solver::{fit, SolverSettings};

/// Which structure the penalty uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StructureMode {
    Both,
    InputOnly,
    OutputOnly,
}

impl StructureMode {
    pub const ALL: [StructureMode; 3] = [StructureMode::Both, StructureMode::InputOnly, StructureMode::OutputOnly];

    pub fn as_str(&self) -> &'static str {
        match self {
            StructureMode::Both => "both",
            StructureMode::InputOnly => "input_only",
            StructureMode::OutputOnly => "output_only",
        }
    }
}

/// Penalty weights of the full model; the single-structure variants drop the
/// other group term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimPenalty {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
}

impl SimPenalty {
    pub fn config(&self, mode: StructureMode) -> Result<PenaltyConfig<f64>> {
        match mode {
            StructureMode::Both => PenaltyConfig::new(self.lambda1, self.lambda2, self.lambda3),
            StructureMode::InputOnly => PenaltyConfig::new(self.lambda1, self.lambda2, 0.0),
            StructureMode::OutputOnly => PenaltyConfig::new(self.lambda1, 0.0, self.lambda3),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeResult {
    pub mode: StructureMode,
    pub aupr: f64,
    pub refit_mse: f64,
    pub nnz: usize,
    pub converged: bool,
    pub curve: Vec<PrPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateResult {
    pub seed: u64,
    pub signal: f64,
    pub modes: Vec<ModeResult>,
}

impl ReplicateResult {
    pub fn mode(&self, mode: StructureMode) -> Option<&ModeResult> {
        self.modes.iter().find(|m| m.mode == mode)
    }
}

/// Fits one generated instance under each structure mode and scores the
/// estimates by AUPR and refit validation error (support at `tau = 0`).
pub fn run_replicate(cfg: &SimConfig, pen: &SimPenalty, settings: &SolverSettings) -> Result<ReplicateResult> {
    let inst = generate_dataset(cfg)?;
    let modes = StructureMode::ALL
        .iter()
        .map(|&mode| {
            let pc = pen.config(mode)?;
            let gs = match mode {
                StructureMode::Both => inst.gs.clone(),
                StructureMode::InputOnly => inst.gs.input_only(),
                StructureMode::OutputOnly => inst.gs.output_only(),
            };
            let (b, report) = fit(&inst.ds, &gs, &pc, settings, None)?;
            let curve = precision_recall_curve(&b, &inst.b_true, &auto_thresholds(&b))?;
            Ok(ModeResult {
                mode,
                aupr: aupr(&curve),
                refit_mse: refit_prediction_error(&inst.ds, &inst.holdout, &b, 0.0)?,
                nnz: b.nnz(),
                converged: report.converged,
                curve,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ReplicateResult {
        seed: cfg.seed,
        signal: cfg.signal,
        modes,
    })
}

/// Replicates with seeds `cfg.seed, cfg.seed + 1, ...`, run in parallel on
/// the current rayon pool. Results are in seed order.
pub fn run_replicates(
    cfg: &SimConfig,
    n_replicates: usize,
    pen: &SimPenalty,
    settings: &SolverSettings,
) -> Result<Vec<ReplicateResult>> {
    (0..n_replicates as u64)
        .into_par_iter()
        .map(|r| run_replicate(&cfg.clone().with_seed(cfg.seed + r), pen, settings))
        .collect()
}

/// Mean AUPR and refit error per mode, in [`StructureMode::ALL`] order.
pub fn summarize(results: &[ReplicateResult]) -> Vec<(StructureMode, f64, f64)> {
    StructureMode::ALL
        .iter()
        .map(|&m| {
            let v: Vec<&ModeResult> = results.iter().filter_map(|r| r.mode(m)).collect();
            let n = v.len().max(1) as f64;
            (
                m,
                v.iter().map(|x| x.aupr).sum::<f64>() / n,
                v.iter().map(|x| x.refit_mse).sum::<f64>() / n,
            )
        })
        .collect()
}
