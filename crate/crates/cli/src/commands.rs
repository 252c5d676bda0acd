use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::json;
use siol::dag::PatternGraph;
use siol::interactions::{
    build_input_groups_from_clusters, candidate_pairs_from_network, cluster_outputs, expand_design,
    link_snps_to_genes, two_locus_screen, CandidatePairSet, CorrFilter, GenomePositions, Provenance,
};
use siol::io::{self, CoefSidecar, LabeledMatrix};
use siol::model::{objective_parts, CoefMatrix, Dataset, PenaltyConfig};
use siol::simulation::{
    aupr, auto_thresholds, generate_dataset, precision_recall_curve, refit_prediction_error, run_replicates,
    summarize, GroupLayout, SimConfig, SimPenalty, StructureMode,
};
use siol::solver::{fit_with_graph, FitReport};
use siol::tuning::{cv_grid_search, prediction_mse, TuningGrid};
use siol::Error;

use crate::args::*;
use crate::data::{self, DesignSidecar};
use crate::manifest::Artifacts;

pub struct Outcome {
    pub converged: bool,
    pub summary: serde_json::Value,
}

impl Outcome {
    fn ok(summary: serde_json::Value) -> Self {
        Self {
            converged: true,
            summary,
        }
    }
}

pub fn run(cmd: &Command, art: &mut Artifacts) -> Result<Outcome> {
    match cmd {
        Command::Fit(a) => fit(a, art),
        Command::Cv(a) => cv(a, art),
        Command::Simulate(a) => simulate(a, art),
        Command::Expand(a) => expand(a, art),
        Command::Screen(a) => screen(a, art),
        Command::Evaluate(a) => evaluate(a, art),
    }
}

fn labeled(ids: &[String], values: ndarray::Array2<f64>, cols: Option<Vec<String>>) -> LabeledMatrix {
    LabeledMatrix {
        row_ids: ids.to_vec(),
        col_ids: cols,
        values,
    }
}

fn default_ids(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

fn coef_sidecar(ds: &Dataset<f64>, b: &CoefMatrix<f64>, pc: Option<PenaltyConfig<f64>>, objective: Option<f64>) -> CoefSidecar {
    CoefSidecar {
        n_outputs: b.n_outputs(),
        n_inputs: b.n_inputs(),
        nnz: b.nnz(),
        n_marginals: ds.n_marginals(),
        input_ids: ds.input_ids.clone(),
        output_ids: ds.output_ids.clone(),
        penalty: pc,
        objective,
    }
}

#[derive(Serialize)]
struct Scalings<'a> {
    x: &'a Option<siol::model::RowScaling>,
    y: &'a Option<siol::model::RowScaling>,
}

fn fit(a: &FitArgs, art: &mut Artifacts) -> Result<Outcome> {
    let (x, y) = data::read_xy(art, &a.data.x, &a.data.y)?;
    let nm = data::n_marginals(&a.data.x, x.values.nrows())?;
    let ds = data::dataset(&x, &y, nm)?;
    let gs = data::group_structure(art, &a.data, ds.n_inputs(), ds.n_outputs())?;
    let pc = data::penalty(&a.penalty, None)?;
    let settings = data::settings(&a.solver)?;
    let graph = PatternGraph::build(&gs);
    if a.dump_dag {
        match graph.as_eager() {
            Some(dag) => io::write_text(&art.path("dag.dot"), &dag.to_dot())?,
            None => log::warn!("the pattern DAG is too large to materialize; --dump-dag ignored"),
        }
    }
    let (b, report) = fit_with_graph(&ds, &gs, &graph, &pc, &settings, None)?;
    write_fit(art, &ds, &b, &report, pc)?;
    Ok(Outcome {
        converged: report.converged,
        summary: json!({
            "n_inputs": ds.n_inputs(),
            "n_outputs": ds.n_outputs(),
            "n_samples": ds.n_samples(),
            "nnz": b.nnz(),
            "final_objective": report.final_objective,
            "outer_iterations": report.outer_iterations,
            "converged": report.converged,
        }),
    })
}

fn write_fit(art: &mut Artifacts, ds: &Dataset<f64>, b: &CoefMatrix<f64>, report: &FitReport, pc: PenaltyConfig<f64>) -> Result<()> {
    let meta = coef_sidecar(ds, b, Some(pc), Some(report.final_objective));
    let bp = art.path("B.tsv");
    art.path("B.json");
    io::write_coefficients(&bp, b, &meta)?;
    io::write_json(&art.path("fit_report.json"), report)?;
    io::write_text(&art.path("trace.tsv"), &report.trace_tsv())?;
    io::write_json(
        &art.path("scaling.json"),
        &Scalings {
            x: &ds.x_scaling,
            y: &ds.y_scaling,
        },
    )?;
    Ok(())
}

fn cv(a: &CvArgs, art: &mut Artifacts) -> Result<Outcome> {
    let (x, y) = data::read_xy(art, &a.data.x, &a.data.y)?;
    let nm = data::n_marginals(&a.data.x, x.values.nrows())?;
    let ds = data::dataset(&x, &y, nm)?;
    let gs = data::group_structure(art, &a.data, ds.n_inputs(), ds.n_outputs())?;
    let settings = data::settings(&a.solver)?;
    let def = TuningGrid::default();
    let pick = |v: &Vec<f64>, d: Vec<f64>| if v.is_empty() { d } else { v.clone() };
    let grid = TuningGrid {
        lambda1_values: pick(&a.lambda1, def.lambda1_values),
        lambda2_prime_values: pick(&a.lambda2_prime, def.lambda2_prime_values),
        lambda3_prime_values: pick(&a.lambda3_prime, def.lambda3_prime_values),
        folds: a.folds,
        seed: a.common.seed,
    };
    let res = cv_grid_search(&ds, &gs, &grid, &settings)?;
    io::write_cv_table(&art.path("cv_table.tsv"), &res.table)?;
    let best = json!({
        "lambda1": res.best.lambda1,
        "lambda2_prime": res.best.lambda2_prime,
        "lambda3_prime": res.best.lambda3_prime,
        "penalty": res.best_penalty,
        "mean_mse": res.best_mse,
        "folds": grid.folds,
    });
    io::write_json(&art.path("best.json"), &best)?;
    Ok(Outcome::ok(best))
}

fn sim_config(a: &SimulateArgs, art: &mut Artifacts) -> Result<SimConfig> {
    let layout = match a.layout {
        Layout::PaperSec6 => GroupLayout::PaperSec6,
        Layout::Custom => {
            let n_in = a.n_marginals + a.n_pairs;
            let mut read = |p: &Option<std::path::PathBuf>, n: usize| -> Result<Vec<Vec<usize>>> {
                let p = p.as_deref().expect("required by the argument parser");
                art.input(p);
                Ok(io::read_groups_tsv(p, n)?.1)
            };
            GroupLayout::Custom {
                input_groups: read(&a.input_groups, n_in)?,
                output_groups: read(&a.output_groups, a.n_outputs)?,
            }
        }
    };
    let cfg = SimConfig {
        n_marginals: a.n_marginals,
        n_pairs: a.n_pairs,
        n_samples: a.n_samples,
        n_outputs: a.n_outputs,
        seed: a.common.seed,
        layout,
        ..SimConfig::default()
    };
    cfg.validate()?;
    cfg.groups()?;
    Ok(cfg)
}

fn write_instance(art: &mut Artifacts, dir: &str, cfg: &SimConfig) -> Result<()> {
    let inst = generate_dataset(cfg)?;
    let (j, k) = (inst.ds.n_inputs(), inst.ds.n_outputs());
    let mut in_ids = default_ids("x", cfg.n_marginals);
    in_ids.extend(inst.pairs.iter().map(|(r, s)| format!("x{}:x{}", r + 1, s + 1)));
    let out_ids = default_ids("y", k);
    let train_cols = Some(default_ids("s", inst.ds.n_samples()));
    let val_cols = Some(default_ids("v", inst.holdout.n_samples()));
    io::write_matrix_tsv(&art.path(&format!("{dir}/X.tsv")), &labeled(&in_ids, inst.ds.x().to_owned(), train_cols.clone()))?;
    io::write_matrix_tsv(&art.path(&format!("{dir}/Y.tsv")), &labeled(&out_ids, inst.ds.y().to_owned(), train_cols))?;
    io::write_matrix_tsv(&art.path(&format!("{dir}/holdout_X.tsv")), &labeled(&in_ids, inst.holdout.x().to_owned(), val_cols.clone()))?;
    io::write_matrix_tsv(&art.path(&format!("{dir}/holdout_Y.tsv")), &labeled(&out_ids, inst.holdout.y().to_owned(), val_cols))?;
    let design = DesignSidecar {
        n_marginals: cfg.n_marginals,
        pairs: inst.pairs.iter().map(|&(r, s)| (r + 1, s + 1)).collect(),
    };
    io::write_json(&art.path(&format!("{dir}/X.design.json")), &design)?;
    let mut meta_ds = inst.ds.clone();
    meta_ds.input_ids = Some(in_ids);
    meta_ds.output_ids = Some(out_ids);
    let meta = coef_sidecar(&meta_ds, &inst.b_true, None, None);
    let bp = art.path(&format!("{dir}/B_true.tsv"));
    art.path(&format!("{dir}/B_true.json"));
    io::write_coefficients(&bp, &inst.b_true, &meta)?;
    let declared_in = inst.gs.n_declared_input_groups();
    let declared_out = inst.gs.n_declared_output_groups();
    io::write_groups_tsv(&art.path(&format!("{dir}/input_groups.tsv")), &inst.gs.input_groups()[..declared_in])?;
    io::write_groups_tsv(&art.path(&format!("{dir}/output_groups.tsv")), &inst.gs.output_groups()[..declared_out])?;
    debug_assert_eq!(j, meta.n_inputs);
    Ok(())
}

fn simulate(a: &SimulateArgs, art: &mut Artifacts) -> Result<Outcome> {
    let base = sim_config(a, art)?;
    let settings = data::settings(&a.solver)?;
    let pen = SimPenalty {
        lambda1: a.lambda1,
        lambda2: a.lambda2,
        lambda3: a.lambda3,
    };
    for m in StructureMode::ALL {
        pen.config(m)?;
    }
    let mut summary_rows = String::from("signal\tseed\tmode\taupr\trefit_mse\tnnz\tconverged\n");
    let mut pr_long = String::from("signal\tseed\tmode\ttau\tprecision\trecall\n");
    let mut per_signal = Vec::new();
    let mut all_converged = true;
    for &signal in &a.signal {
        let cfg = base.clone().with_signal(signal);
        cfg.validate()?;
        let results = run_replicates(&cfg, a.replicates, &pen, &settings)?;
        let sdir = format!("signal_{signal}");
        for r in &results {
            let rdir = format!("{sdir}/replicate_{:03}", r.seed);
            for m in &r.modes {
                all_converged &= m.converged;
                summary_rows.push_str(&format!(
                    "{signal}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                    r.seed,
                    m.mode.as_str(),
                    m.aupr,
                    m.refit_mse,
                    m.nnz,
                    m.converged
                ));
                for p in &m.curve {
                    pr_long.push_str(&format!(
                        "{signal}\t{}\t{}\t{}\t{}\t{}\n",
                        r.seed,
                        m.mode.as_str(),
                        p.tau,
                        p.precision,
                        p.recall
                    ));
                }
                io::write_pr_tsv(&art.path(&format!("{rdir}/pr_{}.tsv", m.mode.as_str())), &m.curve)?;
            }
            let brief: BTreeMap<&str, serde_json::Value> = r
                .modes
                .iter()
                .map(|m| {
                    (
                        m.mode.as_str(),
                        json!({"aupr": m.aupr, "refit_mse": m.refit_mse, "nnz": m.nnz, "converged": m.converged}),
                    )
                })
                .collect();
            io::write_json(
                &art.path(&format!("{rdir}/result.json")),
                &json!({"seed": r.seed, "signal": signal, "modes": brief}),
            )?;
            if !a.skip_data {
                write_instance(art, &rdir, &cfg.clone().with_seed(r.seed))?;
            }
        }
        let means = summarize(&results);
        let get = |m: StructureMode| means.iter().find(|x| x.0 == m).map(|x| (x.1, x.2)).unwrap_or_default();
        let (both, inp, out) = (get(StructureMode::Both), get(StructureMode::InputOnly), get(StructureMode::OutputOnly));
        per_signal.push(json!({
            "signal": signal,
            "replicates": results.len(),
            "mean_aupr": {"both": both.0, "input_only": inp.0, "output_only": out.0},
            "mean_refit_mse": {"both": both.1, "input_only": inp.1, "output_only": out.1},
            "both_best_aupr": both.0 > inp.0 && both.0 > out.0,
            "both_best_mse": both.1 < inp.1 && both.1 < out.1,
        }));
    }
    io::write_text(&art.path("summary.tsv"), &summary_rows)?;
    io::write_text(&art.path("pr_long.tsv"), &pr_long)?;
    let summary = json!({
        "penalty": pen,
        "config": base,
        "signals": per_signal,
    });
    io::write_json(&art.path("summary.json"), &summary)?;
    Ok(Outcome {
        converged: all_converged,
        summary,
    })
}

fn corr_filter<'a>(x: &'a LabeledMatrix, v: Option<f64>) -> Result<Option<CorrFilter<'a, f64>>> {
    match v {
        Some(c) if !(0.0..=1.0).contains(&c) => {
            Err(Error::Input(format!("--corr-filter must lie in [0, 1], got {c}")).into())
        }
        Some(c) => Ok(Some(CorrFilter {
            x: x.values.view(),
            max_abs_corr: c,
        })),
        None => Ok(None),
    }
}

fn expand(a: &ExpandArgs, art: &mut Artifacts) -> Result<Outcome> {
    let (x, y) = data::read_xy(art, &a.x, &a.y)?;
    let j = x.values.nrows();
    for p in [&a.snp_pos, &a.gene_pos, &a.network] {
        art.input(p);
    }
    let snps = io::read_snp_positions(&a.snp_pos)?;
    let genes = io::read_gene_positions(&a.gene_pos)?;
    let by_id: BTreeMap<&str, &siol::interactions::SnpPosition> = snps.iter().map(|s| (s.id.as_str(), s)).collect();
    let ordered = x
        .row_ids
        .iter()
        .map(|id| {
            by_id.get(id.as_str()).map(|s| (*s).clone()).ok_or_else(|| {
                Error::Input(format!(
                    "SNP {id} of {} has no position in {}",
                    a.x.display(),
                    a.snp_pos.display()
                ))
            })
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if snps.len() > j {
        log::warn!("{} SNP positions have no genotype row and are ignored", snps.len() - j);
    }
    let linkage = link_snps_to_genes(&GenomePositions::new(ordered, genes)?, a.link_dist)?;
    let mut net = io::read_network_tsv(&a.network)?;
    let clusters = match &a.clusters {
        Some(p) => {
            art.input(p);
            let c: Vec<Vec<String>> = io::read_clusters_tsv(p)?.into_iter().map(|(_, g)| g).collect();
            net = net.with_clusters(c);
            net.clusters().map(|c| c.to_vec())
        }
        None => None,
    };
    let mut u = candidate_pairs_from_network(&net, &linkage, a.p_cutoff, corr_filter(&x, a.corr_filter)?)?;
    let n_network = u.len();
    if let Some(p) = &a.pairs {
        art.input(p);
        let screened = io::read_pairs_tsv(p, j).with_context(|| format!("pairs checked against the {j} rows of {}", a.x.display()))?;
        u.union(&screened);
    }
    let e = expand_design(x.values.view(), y.values.view(), &u)?;
    let list = u.pairs();
    let mut ids = x.row_ids.clone();
    ids.extend(list.iter().map(|&(r, s)| format!("{}:{}", x.row_ids[r], x.row_ids[s])));

    io::write_pairs_tsv(&art.path("pairs.tsv"), &u)?;
    io::write_matrix_tsv(&art.path("X_expanded.tsv"), &labeled(&ids, e.ds.x().to_owned(), x.col_ids.clone()))?;
    let design = DesignSidecar {
        n_marginals: j,
        pairs: list.iter().map(|&(r, s)| (r + 1, s + 1)).collect(),
    };
    io::write_json(&art.path("X_expanded.design.json"), &design)?;
    let mut link_tsv = String::from("gene_id\tsnp_ids\n");
    for (g, set) in &linkage {
        let v: Vec<&str> = set.iter().map(|&i| x.row_ids[i].as_str()).collect();
        link_tsv.push_str(&format!("{g}\t{}\n", v.join(",")));
    }
    io::write_text(&art.path("linkage.tsv"), &link_tsv)?;

    let mut n_groups = 0;
    if let Some(c) = &clusters {
        let g = build_input_groups_from_clusters(c, &linkage, &u).expanded(j);
        n_groups = g.len();
        io::write_groups_tsv(&art.path("input_groups.tsv"), &g)?;
    }
    let h = cluster_outputs(e.ds.y(), a.output_cutoff);
    io::write_groups_tsv(&art.path("output_groups.tsv"), &h)?;
    let count = |p: Provenance| u.iter().filter(|(_, q)| *q == p).count();
    Ok(Outcome::ok(json!({
        "n_marginals": j,
        "n_pairs": u.len(),
        "network_pairs": n_network,
        "provenance": {
            "network": count(Provenance::Network),
            "screen": count(Provenance::Screen),
            "both": count(Provenance::Both),
        },
        "input_groups": n_groups,
        "output_groups": h.len(),
    })))
}

fn screen(a: &ScreenArgs, art: &mut Artifacts) -> Result<Outcome> {
    let (x, y) = data::read_xy(art, &a.x, &a.y)?;
    let j = x.values.nrows();
    let ds = data::dataset(&x, &y, j)?;
    let mut cand = match &a.pairs {
        Some(p) => {
            art.input(p);
            io::read_pairs_tsv(p, j).with_context(|| format!("pairs checked against the {j} rows of {}", a.x.display()))?
        }
        None => {
            let mut u = CandidatePairSet::new();
            for r in 0..j {
                for s in r + 1..j {
                    u.insert(r, s, Provenance::Screen);
                }
            }
            u
        }
    };
    if let Some(f) = corr_filter(&x, a.corr_filter)? {
        cand.retain(|r, s| siol::interactions::pearson(f.x.row(r), f.x.row(s)).abs() <= f.max_abs_corr);
    }
    let res = two_locus_screen(&ds, &cand.pairs(), a.p_cutoff)?;
    io::write_pairs_tsv(&art.path("pairs.tsv"), &res.passed)?;
    let mut t = String::from("snp_r\tsnp_s\tmin_p\n");
    for ((r, s), p) in &res.min_p {
        t.push_str(&format!("{}\t{}\t{p:e}\n", r + 1, s + 1));
    }
    io::write_text(&art.path("screen_pvalues.tsv"), &t)?;
    Ok(Outcome::ok(json!({
        "tested": res.min_p.len(),
        "passed": res.passed.len(),
        "skipped": res.skipped.iter().map(|&(r, s)| (r + 1, s + 1)).collect::<Vec<_>>(),
    })))
}

fn check_coef_dims(meta: &CoefSidecar, coef: &Path, ds: &Dataset<f64>, x: &Path, y: &Path) -> Result<()> {
    if meta.n_inputs != ds.n_inputs() {
        return Err(Error::Dimension {
            what: format!("inputs in {} vs rows of {}", coef.display(), x.display()),
            left: meta.n_inputs,
            right: ds.n_inputs(),
        }
        .into());
    }
    if meta.n_outputs != ds.n_outputs() {
        return Err(Error::Dimension {
            what: format!("outputs in {} vs rows of {}", coef.display(), y.display()),
            left: meta.n_outputs,
            right: ds.n_outputs(),
        }
        .into());
    }
    if let (Some(a), Some(b)) = (&meta.input_ids, &ds.input_ids) {
        if a != b {
            return Err(Error::Input(format!("input ids of {} do not match the rows of {}", coef.display(), x.display())).into());
        }
    }
    Ok(())
}

fn evaluate(a: &EvaluateArgs, art: &mut Artifacts) -> Result<Outcome> {
    let (x, y) = data::read_xy(art, &a.data.x, &a.data.y)?;
    let nm = data::n_marginals(&a.data.x, x.values.nrows())?;
    let ds = data::dataset(&x, &y, nm)?;
    let gs = data::group_structure(art, &a.data, ds.n_inputs(), ds.n_outputs())?;
    art.input(&a.coef);
    let (b, meta) = io::read_coefficients(&a.coef)?;
    check_coef_dims(&meta, &a.coef, &ds, &a.data.x, &a.data.y)?;
    let pc = data::penalty(&a.penalty, meta.penalty)?;
    let parts = objective_parts(&ds, &b, &gs, &pc)?;
    let mut out = json!({
        "objective": parts.total(),
        "loss": parts.loss,
        "l1_penalty": parts.l1,
        "input_group_penalty": parts.input_groups,
        "output_group_penalty": parts.output_groups,
        "penalty": pc,
        "train_mse": prediction_mse(&ds, &b),
        "nnz": b.nnz(),
    });
    if let Some(t) = &a.truth {
        art.input(t);
        let (bt, mt) = io::read_coefficients(t)?;
        check_coef_dims(&mt, t, &ds, &a.data.x, &a.data.y)?;
        let curve = precision_recall_curve(&b, &bt, &auto_thresholds(&b))?;
        io::write_pr_tsv(&art.path("pr.tsv"), &curve)?;
        out["aupr"] = json!(aupr(&curve));
    }
    if let (Some(hx), Some(hy)) = (&a.holdout_x, &a.holdout_y) {
        let (hxm, hym) = data::read_xy(art, hx, hy)?;
        if hxm.values.nrows() != ds.n_inputs() {
            return Err(Error::Dimension {
                what: format!("rows of {} vs {}", hx.display(), a.data.x.display()),
                left: hxm.values.nrows(),
                right: ds.n_inputs(),
            }
            .into());
        }
        if hym.values.nrows() != ds.n_outputs() {
            return Err(Error::Dimension {
                what: format!("rows of {} vs {}", hy.display(), a.data.y.display()),
                left: hym.values.nrows(),
                right: ds.n_outputs(),
            }
            .into());
        }
        let xs = ds.x_scaling.as_ref().expect("standardized").apply(hxm.values.view())?;
        let ys = ds.y_scaling.as_ref().expect("standardized").apply(hym.values.view())?;
        let hold = Dataset::new(xs, ys)?
            .with_n_marginals(nm)?
            .with_excluded(ds.excluded().to_vec())?;
        out["refit_mse"] = json!(refit_prediction_error(&ds, &hold, &b, a.tau)?);
        out["tau"] = json!(a.tau);
    }
    io::write_json(&art.path("evaluation.json"), &out)?;
    Ok(Outcome::ok(out))
}
