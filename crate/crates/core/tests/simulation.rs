mod common;

use common::rng;
use ndarray::Array2;
use rand::Rng;
use siol::model::CoefMatrix;
use siol::simulation::*;

fn paper(signal: f64, seed: u64) -> SimInstance {
    generate_dataset(&SimConfig::default().with_signal(signal).with_seed(seed)).unwrap()
}

#[test]
fn published_layout_shape() {
    let inst = paper(2.0, 0);
    assert_eq!(inst.ds.n_inputs(), 120);
    assert_eq!(inst.ds.n_outputs(), 80);
    assert_eq!(inst.ds.n_samples(), 100);
    assert_eq!(inst.ds.n_marginals(), 60);
    let multi = |gs: &[Vec<usize>]| gs.iter().filter(|g| g.len() > 1).count();
    assert_eq!(multi(inst.gs.input_groups()), 10);
    assert_eq!(multi(inst.gs.output_groups()), 7);
    assert_eq!(inst.gs.input_groups()[0], (4..10).collect::<Vec<_>>());
    assert_eq!(inst.gs.output_groups()[6], (74..80).collect::<Vec<_>>());
    assert_eq!(inst.pairs.len(), 60);
    assert!(inst.pairs.iter().all(|&(r, s)| r < s && s < 60));
    assert!(inst.b_true.triplets().all(|(_, _, v)| v == 2.0));
}

#[test]
fn validation_split_has_14_samples() {
    let inst = paper(1.0, 3);
    assert_eq!(inst.holdout.n_samples(), 14);
    assert_eq!(inst.holdout.n_inputs(), 120);
}

#[test]
fn same_seed_same_instance() {
    let a = paper(0.4, 17);
    let b = paper(0.4, 17);
    assert_eq!(a.ds.x(), b.ds.x());
    assert_eq!(a.ds.y(), b.ds.y());
    assert_eq!(a.holdout.y(), b.holdout.y());
    assert_eq!(a.b_true, b.b_true);
    assert_eq!(a.pairs, b.pairs);
    let c = paper(0.4, 18);
    assert_ne!(a.b_true, c.b_true);
}

#[test]
fn planted_support_has_every_overlap_kind() {
    for seed in 0..10 {
        let inst = paper(2.0, seed);
        let b = &inst.b_true;
        let gs = &inst.gs;
        let full = |g: &[usize], h: &[usize]| h.iter().all(|&k| g.iter().all(|&j| b.is_nonzero(k, j)));
        // the first two input groups overlap, and so do the first two output groups
        assert!(full(&gs.input_groups()[0], &gs.output_groups()[0]));
        assert!(full(&gs.input_groups()[1], &gs.output_groups()[1]));
        assert!(b.nnz() > 0);
    }
}

#[test]
fn null_signal_refit_explains_nothing() {
    let mut r2 = 0.0;
    for seed in 0..10 {
        let inst = paper(0.0, seed);
        assert_eq!(inst.b_true.nnz(), 0);
        // every marginal selected for every output
        let mut b = CoefMatrix::zeros(80, 120);
        for k in 0..80 {
            for j in 0..5 {
                b.set(k, j, 1.0);
            }
        }
        let mse = refit_prediction_error(&inst.ds, &inst.holdout, &b, 0.0).unwrap();
        let base = refit_prediction_error(&inst.ds, &inst.holdout, &CoefMatrix::zeros(80, 120), 0.0).unwrap();
        r2 += 1.0 - mse / base;
    }
    assert!(r2 / 10.0 < 0.05, "mean validation R^2 {}", r2 / 10.0);
}

#[test]
fn pr_matches_direct_count() {
    let mut r = rng(42);
    for _ in 0..200 {
        let t = Array2::from_shape_fn((5, 5), |_| if r.random::<f64>() < 0.3 { 1.0 } else { 0.0 });
        if t.iter().all(|&v| v == 0.0) {
            continue;
        }
        let e = Array2::from_shape_fn((5, 5), |_| if r.random::<f64>() < 0.5 { r.random::<f64>() } else { 0.0 });
        let taus = [0.0, 0.1, 0.25, 0.5, 0.9, 1.0];
        let pr = precision_recall_curve(&CoefMatrix::from_dense(e.clone()).unwrap(), &CoefMatrix::from_dense(t.clone()).unwrap(), &taus).unwrap();
        for (p, &tau) in pr.iter().zip(&taus) {
            let mut tp = 0;
            let mut fp = 0;
            let mut pos = 0;
            for i in 0..5 {
                for j in 0..5 {
                    let pred = e[[i, j]].abs() > tau;
                    let truth = t[[i, j]] != 0.0;
                    pos += usize::from(truth);
                    tp += usize::from(pred && truth);
                    fp += usize::from(pred && !truth);
                }
            }
            let prec = if tp + fp == 0 { 1.0 } else { tp as f64 / (tp + fp) as f64 };
            assert_eq!(p.precision, prec);
            assert_eq!(p.recall, tp as f64 / pos as f64);
        }
    }
}

#[test]
fn pr_edge_cases() {
    let t = CoefMatrix::from_dense(ndarray::array![[1.0, 0.0], [0.0, 3.0]]).unwrap();
    let p = precision_recall_curve(&t, &t, &[0.0]).unwrap()[0];
    assert_eq!((p.precision, p.recall), (1.0, 1.0));
    let p = precision_recall_curve(&CoefMatrix::zeros(2, 2), &t, &[0.0]).unwrap()[0];
    assert_eq!((p.precision, p.recall), (1.0, 0.0));
    assert!(precision_recall_curve(&t, &CoefMatrix::zeros(2, 2), &[0.0]).is_err());
    assert!(precision_recall_curve(&t, &CoefMatrix::zeros(2, 3), &[0.0]).is_err());
}

#[test]
fn recall_and_support_shrink_with_tau() {
    let mut r = rng(7);
    for _ in 0..20 {
        let t = Array2::from_shape_fn((8, 10), |_| f64::from(u8::from(r.random::<f64>() < 0.3)));
        let e = Array2::from_shape_fn((8, 10), |_| r.random::<f64>() - 0.5);
        let e = CoefMatrix::from_dense(e).unwrap();
        let mut taus = auto_thresholds(&e);
        taus.extend([0.05, 0.2, 0.33]);
        taus.sort_by(f64::total_cmp);
        let pr = precision_recall_curve(&e, &CoefMatrix::from_dense(t).unwrap(), &taus).unwrap();
        let support = |tau: f64| e.triplets().filter(|(_, _, v)| v.abs() > tau).count();
        for w in pr.windows(2) {
            assert!(w[1].recall <= w[0].recall);
            assert!(support(w[1].tau) <= support(w[0].tau));
        }
    }
}

#[test]
fn aupr_ignores_positive_rescaling() {
    let mut r = rng(12);
    for _ in 0..20 {
        let t = CoefMatrix::from_dense(Array2::from_shape_fn((6, 6), |_| f64::from(u8::from(r.random::<f64>() < 0.4)))).unwrap();
        if t.nnz() == 0 {
            continue;
        }
        let e = Array2::from_shape_fn((6, 6), |_| if r.random::<f64>() < 0.6 { r.random::<f64>() - 0.5 } else { 0.0 });
        let c = 0.1 + 10.0 * r.random::<f64>();
        let a = CoefMatrix::from_dense(e.clone()).unwrap();
        let b = CoefMatrix::from_dense(e * c).unwrap();
        let x = aupr(&precision_recall_curve(&a, &t, &auto_thresholds(&a)).unwrap());
        let y = aupr(&precision_recall_curve(&b, &t, &auto_thresholds(&b)).unwrap());
        assert!((x - y).abs() < 1e-12, "{x} vs {y}");
    }
}

#[test]
fn empty_selection_scores_mean_square_of_y() {
    let inst = paper(1.0, 5);
    let mse = refit_prediction_error(&inst.ds, &inst.holdout, &CoefMatrix::zeros(80, 120), 0.0).unwrap();
    let y = inst.holdout.y();
    let want = y.iter().map(|v| v * v).sum::<f64>() / y.len() as f64;
    assert!((mse - want).abs() < 1e-15);
}

/// Refitting on the true support leaves only the noise. In the training
/// data's standardized coordinates, unit noise on output `k` has variance
/// `1 / |centred y_k|^2`.
#[test]
fn true_support_refit_approaches_noise_variance() {
    let mut ratio = 0.0;
    for seed in 0..20 {
        let inst = paper(2.0, seed);
        let mse = refit_prediction_error(&inst.ds, &inst.holdout, &inst.b_true, 0.0).unwrap();
        let norms = &inst.ds.y_scaling.as_ref().unwrap().norms;
        let noise = norms.iter().map(|n| 1.0 / (n * n)).sum::<f64>() / norms.len() as f64;
        ratio += mse / noise;
    }
    ratio /= 20.0;
    eprintln!("refit mse / noise variance = {ratio:.3}");
    assert!((0.8..=1.2).contains(&ratio), "{ratio}");
}

#[test]
fn replicate_reports_every_mode() {
    let cfg = SimConfig::default().with_signal(2.0).with_seed(1);
    let pen = SimPenalty {
        lambda1: 0.01,
        lambda2: 0.1,
        lambda3: 0.1,
    };
    let res = run_replicates(&cfg, 2, &pen, &siol::SolverSettings::default()).unwrap();
    assert_eq!(res.len(), 2);
    assert_eq!(res[1].seed, 2);
    for r in &res {
        for m in StructureMode::ALL {
            let mr = r.mode(m).unwrap();
            assert!((0.0..=1.0).contains(&mr.aupr));
            assert!(mr.refit_mse.is_finite());
        }
    }
    let again = run_replicates(&cfg, 2, &pen, &siol::SolverSettings::default()).unwrap();
    assert_eq!(res, again);
    let s = summarize(&res);
    assert_eq!(s.len(), 3);
}

#[test]
fn custom_layout_and_bad_configs() {
    let cfg = SimConfig {
        n_marginals: 6,
        n_pairs: 3,
        n_samples: 20,
        n_outputs: 5,
        layout: GroupLayout::Custom {
            input_groups: vec![vec![0, 1, 2], vec![2, 3]],
            output_groups: vec![vec![0, 1, 2], vec![2, 3, 4]],
        },
        ..SimConfig::default()
    };
    let inst = generate_dataset(&cfg).unwrap();
    assert_eq!(inst.ds.n_inputs(), 9);
    assert!(generate_dataset(&SimConfig { n_pairs: 16, ..cfg.clone() }).is_err());
    assert!(generate_dataset(&SimConfig { n_outputs: 81, ..SimConfig::default() }).is_err());
    assert!(generate_dataset(&SimConfig { signal: -1.0, ..SimConfig::default() }).is_err());
}
