use std::collections::BTreeSet;

use ndarray::Array2;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{standardize_rows, CoefMatrix, Dataset, GroupStructure};

/// 1-based inclusive ranges of the multi-member input groups in the
/// published simulation layout.
pub const PAPER_INPUT_GROUPS: [(usize, usize); 10] = [
    (5, 10),
    (9, 15),
    (25, 32),
    (29, 37),
    (50, 57),
    (54, 60),
    (75, 87),
    (80, 94),
    (104, 111),
    (109, 116),
];

/// 1-based inclusive ranges of the multi-member output groups.
pub const PAPER_OUTPUT_GROUPS: [(usize, usize); 7] = [
    (1, 5),
    (4, 10),
    (12, 20),
    (17, 25),
    (46, 63),
    (56, 70),
    (75, 80),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupLayout {
    PaperSec6,
    /// 0-based input and output groups.
    Custom {
        input_groups: Vec<Vec<usize>>,
        output_groups: Vec<Vec<usize>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_marginals: usize,
    pub n_pairs: usize,
    pub n_samples: usize,
    pub n_outputs: usize,
    /// Value of every planted coefficient.
    pub signal: f64,
    pub seed: u64,
    pub layout: GroupLayout,
    pub n_validation: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_marginals: 60,
            n_pairs: 60,
            n_samples: 100,
            n_outputs: 80,
            signal: 2.0,
            seed: 0,
            layout: GroupLayout::PaperSec6,
            n_validation: 14,
        }
    }
}

impl SimConfig {
    pub fn with_signal(mut self, signal: f64) -> Self {
        self.signal = signal;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn n_inputs(&self) -> usize {
        self.n_marginals + self.n_pairs
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_marginals < 2 || self.n_samples < 2 || self.n_outputs == 0 {
            return Err(Error::input(
                "simulation needs at least 2 marginals, 2 samples and 1 output",
            ));
        }
        let max_pairs = self.n_marginals * (self.n_marginals - 1) / 2;
        if self.n_pairs > max_pairs {
            return Err(Error::input(format!(
                "{} pairs requested but only {max_pairs} distinct pairs exist",
                self.n_pairs
            )));
        }
        if !(self.signal >= 0.0 && self.signal.is_finite()) {
            return Err(Error::input(format!("signal must be finite and >= 0, got {}", self.signal)));
        }
        Ok(())
    }

    /// The configured groups over `n_inputs()` inputs and `n_outputs`
    /// outputs; uncovered indices become singletons.
    pub fn groups(&self) -> Result<GroupStructure> {
        let (ig, og) = match &self.layout {
            GroupLayout::PaperSec6 => {
                if self.n_inputs() != 120 || self.n_outputs != 80 {
                    return Err(Error::input(
                        "the published layout needs 120 inputs and 80 outputs",
                    ));
                }
                let range = |&(a, b): &(usize, usize)| (a - 1..b).collect::<Vec<_>>();
                (
                    PAPER_INPUT_GROUPS.iter().map(range).collect(),
                    PAPER_OUTPUT_GROUPS.iter().map(range).collect(),
                )
            }
            GroupLayout::Custom {
                input_groups,
                output_groups,
            } => (input_groups.clone(), output_groups.clone()),
        };
        GroupStructure::new(self.n_inputs(), self.n_outputs, ig, og)
    }
}

#[derive(Debug, Clone)]
pub struct SimInstance {
    pub ds: Dataset<f64>,
    pub gs: GroupStructure,
    pub b_true: CoefMatrix<f64>,
    /// Validation samples in the training data's standardized coordinates.
    pub holdout: Dataset<f64>,
    /// The marginal pair behind each product input.
    pub pairs: Vec<(usize, usize)>,
}

/// Planted support: 6 whole blocks, 4 partial rows and 4 partial columns.
/// The first two blocks sit on overlapping input and output groups so that
/// every kind of overlap occurs.
fn plant_support(rng: &mut ChaCha8Rng, gs: &GroupStructure, n_ig: usize, n_og: usize) -> BTreeSet<(usize, usize)> {
    let ig = gs.input_groups();
    let og = gs.output_groups();
    let mut support = BTreeSet::new();
    let mut blocks: Vec<(usize, usize)> = Vec::new();
    if n_ig >= 2 && n_og >= 2 {
        blocks.push((0, 0));
        blocks.push((1, 1));
    }
    let mut all: Vec<(usize, usize)> = (0..n_ig.max(1))
        .flat_map(|g| (0..n_og.max(1)).map(move |h| (g, h)))
        .filter(|b| !blocks.contains(b))
        .collect();
    all.shuffle(rng);
    blocks.extend(all.into_iter().take(6 - blocks.len()));
    for &(g, h) in &blocks {
        for &k in &og[h] {
            for &j in &ig[g] {
                support.insert((k, j));
            }
        }
    }
    let half = |rng: &mut ChaCha8Rng, v: &[usize]| -> Vec<usize> {
        let n = v.len().div_ceil(2);
        v.choose_multiple(rng, n).copied().collect()
    };
    for _ in 0..4 {
        let g = rng.random_range(0..n_ig.max(1));
        let k = rng.random_range(0..gs.n_outputs());
        for j in half(rng, &ig[g]) {
            support.insert((k, j));
        }
    }
    for _ in 0..4 {
        let h = rng.random_range(0..n_og.max(1));
        let j = rng.random_range(0..gs.n_inputs());
        for k in half(rng, &og[h]) {
            support.insert((k, j));
        }
    }
    support
}

/// Generates one seeded instance: uniform 0/1 marginals, product rows of
/// random marginal pairs, a planted support with every coefficient equal to
/// `signal`, and `Y = B X + E` with standard normal noise. `X` enters the
/// generative model with unit-variance rows; the returned datasets are in
/// the standardized coordinates of the training samples.
pub fn generate_dataset(cfg: &SimConfig) -> Result<SimInstance> {
    cfg.validate()?;
    let gs = cfg.groups()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n_total = cfg.n_samples + cfg.n_validation;
    let j = cfg.n_inputs();
    let k = cfg.n_outputs;

    let mut x = Array2::<f64>::zeros((j, n_total));
    for r in 0..cfg.n_marginals {
        for n in 0..n_total {
            x[[r, n]] = if rng.random::<bool>() { 1.0 } else { 0.0 };
        }
    }
    let mut pair_pool: Vec<(usize, usize)> = (0..cfg.n_marginals)
        .flat_map(|r| (r + 1..cfg.n_marginals).map(move |s| (r, s)))
        .collect();
    pair_pool.shuffle(&mut rng);
    let pairs: Vec<(usize, usize)> = pair_pool.into_iter().take(cfg.n_pairs).collect();
    for (u, &(r, s)) in pairs.iter().enumerate() {
        for n in 0..n_total {
            x[[cfg.n_marginals + u, n]] = x[[r, n]] * x[[s, n]];
        }
    }

    let n_ig = gs.n_declared_input_groups();
    let n_og = gs.n_declared_output_groups();
    let support = plant_support(&mut rng, &gs, n_ig, n_og);
    let mut b = Array2::<f64>::zeros((k, j));
    for &(kk, jj) in &support {
        b[[kk, jj]] = cfg.signal;
    }

    // unit-variance rows using training-sample statistics
    let train: Vec<usize> = (0..cfg.n_samples).collect();
    let x_train = x.select(ndarray::Axis(1), &train);
    let st = standardize_rows(x_train.view())?;
    let mut x_unit = st.scaling.apply(x.view())?;
    x_unit.mapv_inplace(|v| v * (cfg.n_samples as f64).sqrt());
    let noise = Array2::from_shape_fn((k, n_total), |_| rng.sample::<f64, _>(StandardNormal));
    let y = b.dot(&x_unit) + noise;

    let y_train = y.select(ndarray::Axis(1), &train);
    let ds = Dataset::standardized(x_train.view(), y_train.view())?.with_n_marginals(cfg.n_marginals)?;
    let val: Vec<usize> = (cfg.n_samples..n_total).collect();
    let holdout = if val.is_empty() {
        Dataset::new(Array2::zeros((j, 0)), Array2::zeros((k, 0)))?
    } else {
        let xs = ds.x_scaling.as_ref().expect("standardized").apply(x.select(ndarray::Axis(1), &val).view())?;
        let ys = ds.y_scaling.as_ref().expect("standardized").apply(y.select(ndarray::Axis(1), &val).view())?;
        Dataset::new(xs, ys)?
            .with_n_marginals(cfg.n_marginals)?
            .with_excluded(ds.excluded().to_vec())?
    };
    Ok(SimInstance {
        ds,
        gs,
        b_true: CoefMatrix::from_dense(b)?,
        holdout,
        pairs,
    })
}
