use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "siol", version, about = "Structured input-output lasso with hierarchical group thresholding")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit B at fixed penalties.
    Fit(FitArgs),
    /// Choose penalties by k-fold cross-validation.
    Cv(CvArgs),
    /// Run the synthetic benchmark under the three structure modes.
    Simulate(SimulateArgs),
    /// Build candidate SNP pairs from a gene network and expand the design.
    Expand(ExpandArgs),
    /// Two-locus interaction screen.
    Screen(ScreenArgs),
    /// Score a written coefficient file against data and, optionally, truth.
    Evaluate(EvaluateArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Fit(_) => "fit",
            Command::Cv(_) => "cv",
            Command::Simulate(_) => "simulate",
            Command::Expand(_) => "expand",
            Command::Screen(_) => "screen",
            Command::Evaluate(_) => "evaluate",
        }
    }

    pub fn common(&self) -> &CommonArgs {
        match self {
            Command::Fit(a) => &a.common,
            Command::Cv(a) => &a.common,
            Command::Simulate(a) => &a.common,
            Command::Expand(a) => &a.common,
            Command::Screen(a) => &a.common,
            Command::Evaluate(a) => &a.common,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CommonArgs {
    /// Output directory, created if missing.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for independent fits; defaults to available cores.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DataArgs {
    /// Inputs, one row per SNP (or expanded input), one column per sample.
    #[arg(long)]
    pub x: PathBuf,
    /// Outputs, one row per trait, one column per sample.
    #[arg(long)]
    pub y: PathBuf,
    /// Input groups; omitted means no input-group penalty structure.
    #[arg(long)]
    pub input_groups: Option<PathBuf>,
    #[arg(long)]
    pub output_groups: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SolverArgs {
    /// Relative objective change that ends a pass.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Outer iteration budget.
    #[arg(long, default_value_t = 1000)]
    pub max_iter: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PenaltyArgs {
    #[arg(long)]
    pub lambda1: Option<f64>,
    #[arg(long, conflicts_with_all = ["lambda2_prime", "lambda3_prime"])]
    pub lambda2: Option<f64>,
    #[arg(long, conflicts_with_all = ["lambda2_prime", "lambda3_prime"])]
    pub lambda3: Option<f64>,
    /// L1 weight on interaction inputs; defaults to lambda1.
    #[arg(long)]
    pub lambda4: Option<f64>,
    /// Share of the group weight on input groups, in [0, 1].
    #[arg(long, requires = "lambda3_prime")]
    pub lambda2_prime: Option<f64>,
    /// Total group weight lambda2 + lambda3.
    #[arg(long, requires = "lambda2_prime")]
    pub lambda3_prime: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub penalty: PenaltyArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub common: CommonArgs,
    /// Also write the zero-pattern DAG as Graphviz.
    #[arg(long)]
    pub dump_dag: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CvArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub common: CommonArgs,
    /// Comma-separated grid values; defaults to the built-in grid.
    #[arg(long, value_delimiter = ',')]
    pub lambda1: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub lambda2_prime: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub lambda3_prime: Vec<f64>,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Layout {
    PaperSec6,
    Custom,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value_t = Layout::PaperSec6)]
    pub layout: Layout,
    /// Planted coefficient value; a comma-separated list runs each.
    #[arg(long, value_delimiter = ',', default_value = "2")]
    pub signal: Vec<f64>,
    #[arg(long, default_value_t = 20)]
    pub replicates: usize,
    #[arg(long, default_value_t = 0.01)]
    pub lambda1: f64,
    #[arg(long, default_value_t = 0.1)]
    pub lambda2: f64,
    #[arg(long, default_value_t = 0.1)]
    pub lambda3: f64,
    /// Custom layout: input groups over marginals followed by pairs.
    #[arg(long, required_if_eq("layout", "custom"))]
    pub input_groups: Option<PathBuf>,
    #[arg(long, required_if_eq("layout", "custom"))]
    pub output_groups: Option<PathBuf>,
    #[arg(long, default_value_t = 60)]
    pub n_marginals: usize,
    #[arg(long, default_value_t = 60)]
    pub n_pairs: usize,
    #[arg(long, default_value_t = 80)]
    pub n_outputs: usize,
    #[arg(long, default_value_t = 100)]
    pub n_samples: usize,
    /// Skip writing the generated datasets.
    #[arg(long)]
    pub skip_data: bool,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ExpandArgs {
    /// Genotypes, rows named by SNP id.
    #[arg(long)]
    pub x: PathBuf,
    #[arg(long)]
    pub y: PathBuf,
    #[arg(long)]
    pub network: PathBuf,
    #[arg(long)]
    pub snp_pos: PathBuf,
    #[arg(long)]
    pub gene_pos: PathBuf,
    /// Gene clusters; each yields a marginal group and a pair group.
    #[arg(long)]
    pub clusters: Option<PathBuf>,
    /// Screened pairs to merge with the network pairs.
    #[arg(long)]
    pub pairs: Option<PathBuf>,
    /// Network edges with p-value below this are used.
    #[arg(long, default_value_t = 1e-3)]
    pub p_cutoff: f64,
    /// SNP-gene linkage distance in bp.
    #[arg(long, default_value_t = siol::interactions::DEFAULT_LINK_DISTANCE)]
    pub link_dist: u64,
    /// Drop pairs whose genotype correlation exceeds this (0.5 if given bare).
    #[arg(long, num_args = 0..=1, default_missing_value = "0.5")]
    pub corr_filter: Option<f64>,
    /// Dendrogram cut for output groups.
    #[arg(long, default_value_t = siol::interactions::DEFAULT_OUTPUT_CUTOFF)]
    pub output_cutoff: f64,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ScreenArgs {
    #[arg(long)]
    pub x: PathBuf,
    #[arg(long)]
    pub y: PathBuf,
    /// Pairs to test; all pairs of X rows when omitted.
    #[arg(long)]
    pub pairs: Option<PathBuf>,
    #[arg(long, default_value_t = siol::interactions::DEFAULT_SCREEN_CUTOFF)]
    pub p_cutoff: f64,
    #[arg(long, num_args = 0..=1, default_missing_value = "0.5")]
    pub corr_filter: Option<f64>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Coefficient triplets written by `fit`.
    #[arg(long)]
    pub coef: PathBuf,
    /// Penalties for the objective; default to those recorded with the
    /// coefficients.
    #[command(flatten)]
    pub penalty: PenaltyArgs,
    /// True coefficients for precision-recall.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long, requires = "holdout_y")]
    pub holdout_x: Option<PathBuf>,
    #[arg(long, requires = "holdout_x")]
    pub holdout_y: Option<PathBuf>,
    /// Selection threshold for the refit error.
    #[arg(long, default_value_t = 0.0)]
    pub tau: f64,
    #[command(flatten)]
    pub common: CommonArgs,
}
