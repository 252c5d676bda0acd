//! Cross-validated choice of `(lambda1, lambda2', lambda3')`, where the
//! group weights are `lambda2 = lambda2' lambda3'` and
//! `lambda3 = (1 - lambda2') lambda3'`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dag::PatternGraph;
use crate::error::{Error, Result};
use ndarray::Array2;

use crate::model::{CoefMatrix, Dataset, GroupStructure, PenaltyConfig, RowScaling};
use crate::solver::{fit_with_graph, SolverSettings};

/// Maps the mixing proportion `lambda2'` in `[0, 1]` and the total group
/// weight `lambda3'` to `(lambda2, lambda3)`.
pub fn reparametrize(lambda2_prime: f64, lambda3_prime: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&lambda2_prime) {
        return Err(Error::input(format!("lambda2' must lie in [0, 1], got {lambda2_prime}")));
    }
    if !(lambda3_prime >= 0.0 && lambda3_prime.is_finite()) {
        return Err(Error::input(format!("lambda3' must be finite and >= 0, got {lambda3_prime}")));
    }
    let l2 = lambda2_prime * lambda3_prime;
    // lambda3' - l2 keeps lambda2 + lambda3 == lambda3' exactly
    Ok((l2, lambda3_prime - l2))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningGrid {
    pub lambda1_values: Vec<f64>,
    pub lambda2_prime_values: Vec<f64>,
    pub lambda3_prime_values: Vec<f64>,
    pub folds: usize,
    pub seed: u64,
}

impl Default for TuningGrid {
    fn default() -> Self {
        Self {
            lambda1_values: vec![0.001, 0.01, 0.05, 0.1, 0.5],
            lambda2_prime_values: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            lambda3_prime_values: vec![0.01, 0.1, 0.5, 1.0],
            folds: 5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub lambda1: f64,
    pub lambda2_prime: f64,
    pub lambda3_prime: f64,
}

impl GridPoint {
    pub fn penalty(&self) -> Result<PenaltyConfig<f64>> {
        let (l2, l3) = reparametrize(self.lambda2_prime, self.lambda3_prime)?;
        PenaltyConfig::new(self.lambda1, l2, l3)
    }
}

impl TuningGrid {
    pub fn single(point: GridPoint, folds: usize) -> Self {
        Self {
            lambda1_values: vec![point.lambda1],
            lambda2_prime_values: vec![point.lambda2_prime],
            lambda3_prime_values: vec![point.lambda3_prime],
            folds,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambda1_values.is_empty()
            || self.lambda2_prime_values.is_empty()
            || self.lambda3_prime_values.is_empty()
        {
            return Err(Error::input("tuning grid lists must be non-empty"));
        }
        if self.folds < 2 {
            return Err(Error::input(format!("need at least 2 folds, got {}", self.folds)));
        }
        for p in self.points() {
            p.penalty()?;
        }
        Ok(())
    }

    /// Every combination, lambda1 varying slowest.
    pub fn points(&self) -> Vec<GridPoint> {
        let mut out = Vec::new();
        for &lambda1 in &self.lambda1_values {
            for &lambda2_prime in &self.lambda2_prime_values {
                for &lambda3_prime in &self.lambda3_prime_values {
                    out.push(GridPoint {
                        lambda1,
                        lambda2_prime,
                        lambda3_prime,
                    });
                }
            }
        }
        out
    }
}

/// Fold of each sample: the samples are shuffled with `seed` and cut into
/// `folds` contiguous blocks of near-equal size.
pub fn fold_assignment(n: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut fold = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        fold[i] = pos * folds / n;
    }
    fold
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvRow {
    pub lambda1: f64,
    pub lambda2_prime: f64,
    pub lambda3_prime: f64,
    pub fold: usize,
    pub mse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub best: GridPoint,
    pub best_penalty: PenaltyConfig<f64>,
    pub best_mse: f64,
    /// One row per grid point and fold, points in grid order.
    pub table: Vec<CvRow>,
}

impl CvResult {
    /// Mean validation error per grid point, in table order.
    pub fn mean_scores(&self) -> Vec<(GridPoint, f64)> {
        let mut out: Vec<(GridPoint, f64, usize)> = Vec::new();
        for r in &self.table {
            let p = GridPoint {
                lambda1: r.lambda1,
                lambda2_prime: r.lambda2_prime,
                lambda3_prime: r.lambda3_prime,
            };
            match out.iter_mut().find(|(q, _, _)| *q == p) {
                Some(e) => {
                    e.1 += r.mse;
                    e.2 += 1;
                }
                None => out.push((p, r.mse, 1)),
            }
        }
        out.into_iter().map(|(p, s, n)| (p, s / n as f64)).collect()
    }
}

/// Mean squared error of `B X` against `Y` on a dataset.
pub fn prediction_mse(ds: &Dataset<f64>, b: &CoefMatrix<f64>) -> f64 {
    let pred = b.values().dot(&ds.x());
    let n = ds.y().len().max(1) as f64;
    (&ds.y() - &pred).iter().map(|v| v * v).sum::<f64>() / n
}

/// One fold: the training samples restandardized on their own, and the
/// validation samples mapped with the training statistics.
struct FoldSplit {
    train: Dataset<f64>,
    val_x: Array2<f64>,
    /// Validation responses in the coordinates of the full dataset.
    val_y: Array2<f64>,
    y_scaling: RowScaling,
}

impl FoldSplit {
    fn new(ds: &Dataset<f64>, train: &[usize], val: &[usize]) -> Result<Self> {
        let raw = ds.select_samples(train);
        let st = Dataset::standardized(raw.x(), raw.y())?
            .with_n_marginals(ds.n_marginals())?;
        // rows excluded from the full fit stay excluded
        let excluded = st
            .excluded()
            .iter()
            .zip(ds.excluded())
            .map(|(a, b)| *a || *b)
            .collect();
        let st = st.with_excluded(excluded)?;
        let held = ds.select_samples(val);
        let val_x = st.x_scaling.as_ref().expect("standardized").apply(held.x())?;
        let y_scaling = st.y_scaling.clone().expect("standardized");
        Ok(Self {
            train: st,
            val_x,
            val_y: held.y().to_owned(),
            y_scaling,
        })
    }

    /// Mean squared error of `B X_val` mapped back to the full dataset's
    /// coordinates.
    fn validation_mse(&self, b: &CoefMatrix<f64>) -> f64 {
        let pred = b.values().dot(&self.val_x);
        let mut sse = 0.0;
        for (k, (yr, pr)) in self.val_y.rows().into_iter().zip(pred.rows()).enumerate() {
            let (m, s) = (self.y_scaling.means[k], self.y_scaling.norms[k]);
            sse += yr.iter().zip(pr).map(|(y, p)| (y - m - s * p).powi(2)).sum::<f64>();
        }
        sse / self.val_y.len().max(1) as f64
    }
}

/// K-fold cross-validation over the grid. Each training fold is
/// standardized on its own so that no statistic of the validation fold
/// leaks into the fit. Grid points and folds run in
/// parallel on the current rayon pool. A fit that fails scores `+inf`. The
/// best point has the lowest mean error; ties go to the larger `lambda3'`,
/// then the larger `lambda1`.
pub fn cv_grid_search(
    ds: &Dataset<f64>,
    gs: &GroupStructure,
    grid: &TuningGrid,
    settings: &SolverSettings,
) -> Result<CvResult> {
    grid.validate()?;
    settings.validate()?;
    let n = ds.n_samples();
    if n < grid.folds {
        return Err(Error::input(format!(
            "{n} samples cannot be split into {} folds",
            grid.folds
        )));
    }
    let fold = fold_assignment(n, grid.folds, grid.seed);
    let splits: Vec<FoldSplit> = (0..grid.folds)
        .map(|f| {
            let train: Vec<usize> = (0..n).filter(|&i| fold[i] != f).collect();
            let val: Vec<usize> = (0..n).filter(|&i| fold[i] == f).collect();
            FoldSplit::new(ds, &train, &val)
        })
        .collect::<Result<_>>()?;
    let graph = PatternGraph::build(gs);
    let points = grid.points();
    let jobs: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|p| (0..grid.folds).map(move |f| (p, f)))
        .collect();
    let table: Vec<CvRow> = jobs
        .par_iter()
        .map(|&(p, f)| {
            let pt = points[p];
            let split = &splits[f];
            let mse = pt
                .penalty()
                .and_then(|pc| fit_with_graph(&split.train, gs, &graph, &pc, settings, None))
                .map(|(b, _)| split.validation_mse(&b))
                .unwrap_or_else(|e| {
                    log::warn!("fit failed at {pt:?}, fold {f}: {e}");
                    f64::INFINITY
                });
            CvRow {
                lambda1: pt.lambda1,
                lambda2_prime: pt.lambda2_prime,
                lambda3_prime: pt.lambda3_prime,
                fold: f,
                mse: if mse.is_finite() { mse } else { f64::INFINITY },
            }
        })
        .collect();

    let mut best: Option<(GridPoint, f64)> = None;
    for (p, chunk) in points.iter().zip(table.chunks(grid.folds)) {
        let score = chunk.iter().map(|r| r.mse).sum::<f64>() / grid.folds as f64;
        let better = match best {
            None => true,
            Some((b, s)) => {
                score < s
                    || (score == s
                        && (p.lambda3_prime > b.lambda3_prime
                            || (p.lambda3_prime == b.lambda3_prime && p.lambda1 > b.lambda1)))
            }
        };
        if better {
            best = Some((*p, score));
        }
    }
    let (best, best_mse) = best.expect("grid validated non-empty");
    Ok(CvResult {
        best,
        best_penalty: best.penalty()?,
        best_mse,
        table,
    })
}
