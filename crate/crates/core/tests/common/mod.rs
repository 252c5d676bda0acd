#![allow(dead_code)]

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use siol::model::{Dataset, GroupStructure};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.sample(StandardNormal))
}

/// Standardized data from a sparse linear model plus unit noise.
pub fn sparse_instance(rng: &mut ChaCha8Rng, j: usize, k: usize, n: usize) -> Dataset<f64> {
    let x = normal_matrix(rng, j, n);
    let b = Array2::from_shape_fn((k, j), |_| {
        if rng.random::<f64>() < 0.4 {
            2.0 * rng.sample::<f64, _>(StandardNormal)
        } else {
            0.0
        }
    });
    let y = b.dot(&x) + normal_matrix(rng, k, n);
    Dataset::standardized(x.view(), y.view()).unwrap()
}

/// Two overlapping input groups and two overlapping output groups.
pub fn overlapping_groups(j: usize, k: usize) -> GroupStructure {
    let g1: Vec<usize> = (0..j / 2 + 1).collect();
    let g2: Vec<usize> = (j / 2..j).collect();
    let h1: Vec<usize> = (0..2.min(k)).collect();
    let h2: Vec<usize> = (1..k).collect();
    let out = if h1 == h2 || h2.is_empty() { vec![h1] } else { vec![h1, h2] };
    GroupStructure::new(j, k, vec![g1, g2], out).unwrap()
}

/// Random instance in the oracle-comparison size range.
pub fn small_overlapping(seed: u64) -> (Dataset<f64>, GroupStructure) {
    let mut r = rng(seed);
    let j = r.random_range(3..=6);
    let k = r.random_range(2..=4);
    let n = r.random_range(12..=20);
    let ds = sparse_instance(&mut r, j, k, n);
    (ds, overlapping_groups(j, k))
}

/// Plain cyclic coordinate descent for
/// `1/2 ||y - b X||^2 + lambda ||b||_1`, run to a tight tolerance.
pub fn lasso_cd(x: ndarray::ArrayView2<f64>, y: &[f64], lambda: f64) -> Vec<f64> {
    let j_n = x.nrows();
    let n_n = x.ncols();
    let mut b = vec![0.0; j_n];
    let mut r: Vec<f64> = y.to_vec();
    let sq: Vec<f64> = (0..j_n).map(|j| x.row(j).iter().map(|v| v * v).sum()).collect();
    for _ in 0..100_000 {
        let mut max_change: f64 = 0.0;
        for j in 0..j_n {
            if sq[j] == 0.0 {
                continue;
            }
            let mut z = 0.0;
            for n in 0..n_n {
                z += r[n] * x[[j, n]];
            }
            z += b[j] * sq[j];
            let new = z.signum() * (z.abs() - lambda).max(0.0) / sq[j];
            let d = new - b[j];
            if d != 0.0 {
                for n in 0..n_n {
                    r[n] -= d * x[[j, n]];
                }
                b[j] = new;
                max_change = max_change.max(d.abs());
            }
        }
        if max_change < 1e-14 {
            break;
        }
    }
    b
}

/// Runs the reference oracle, growing its budget tenfold (up to `cap`)
/// while `target` beats it by more than `rel` relative.
pub fn oracle_objective(
    ds: &Dataset<f64>,
    gs: &GroupStructure,
    pc: &siol::model::PenaltyConfig<f64>,
    target: f64,
    rel: f64,
    cap: usize,
) -> f64 {
    let mut settings = siol::oracle::OracleSettings::default();
    loop {
        let res = siol::oracle::subgradient_solve(ds, gs, pc, &settings).unwrap();
        if res.objective <= target * (1.0 + rel) || settings.max_steps >= cap {
            return res.objective;
        }
        settings.max_steps = (settings.max_steps * 10).min(cap);
        settings.objective_tol /= 10.0;
    }
}
