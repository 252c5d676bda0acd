//! Loading and checking the inputs shared by several commands.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use siol::io::{read_groups_tsv, read_matrix_tsv, LabeledMatrix};
use siol::model::{Dataset, GroupStructure, PenaltyConfig};
use siol::solver::SolverSettings;
use siol::tuning::reparametrize;
use siol::Error;

use crate::args::{DataArgs, PenaltyArgs, SolverArgs};
use crate::manifest::Artifacts;

/// Written next to an expanded design so that `fit` knows which inputs are
/// interaction terms. Pair indices are 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSidecar {
    pub n_marginals: usize,
    pub pairs: Vec<(usize, usize)>,
}

pub fn design_sidecar_path(x: &Path) -> PathBuf {
    x.with_extension("design.json")
}

fn dim_error(what: String, left: usize, right: usize) -> Error {
    Error::Dimension { what, left, right }
}

/// Reads X and Y and checks that they describe the same samples.
pub fn read_xy(art: &mut Artifacts, x: &Path, y: &Path) -> Result<(LabeledMatrix, LabeledMatrix)> {
    art.input(x);
    art.input(y);
    let xm = read_matrix_tsv(x)?;
    let ym = read_matrix_tsv(y)?;
    check_samples(&xm, x, &ym, y)?;
    Ok((xm, ym))
}

pub fn check_samples(a: &LabeledMatrix, ap: &Path, b: &LabeledMatrix, bp: &Path) -> Result<()> {
    if a.values.ncols() != b.values.ncols() {
        return Err(dim_error(
            format!("sample columns in {} vs {}", ap.display(), bp.display()),
            a.values.ncols(),
            b.values.ncols(),
        )
        .into());
    }
    if let (Some(ca), Some(cb)) = (&a.col_ids, &b.col_ids) {
        if let Some(i) = ca.iter().zip(cb).position(|(u, v)| u != v) {
            return Err(Error::Input(format!(
                "sample ids of {} and {} differ at column {} ({} vs {})",
                ap.display(),
                bp.display(),
                i + 1,
                ca[i],
                cb[i]
            ))
            .into());
        }
    }
    Ok(())
}

/// Number of marginal inputs: all rows unless X carries a design sidecar.
pub fn n_marginals(x: &Path, n_rows: usize) -> Result<usize> {
    let side = design_sidecar_path(x);
    if !side.exists() {
        return Ok(n_rows);
    }
    let d: DesignSidecar = siol::io::read_json(&side)?;
    if d.n_marginals + d.pairs.len() != n_rows {
        return Err(dim_error(
            format!("inputs declared in {} vs rows of {}", side.display(), x.display()),
            d.n_marginals + d.pairs.len(),
            n_rows,
        )
        .into());
    }
    Ok(d.n_marginals)
}

/// Standardized dataset carrying the row and sample ids.
pub fn dataset(x: &LabeledMatrix, y: &LabeledMatrix, n_marginals: usize) -> Result<Dataset<f64>> {
    let mut ds = Dataset::standardized(x.values.view(), y.values.view())?.with_n_marginals(n_marginals)?;
    ds.input_ids = Some(x.row_ids.clone());
    ds.output_ids = Some(y.row_ids.clone());
    ds.sample_ids = x.col_ids.clone();
    Ok(ds)
}

fn groups(art: &mut Artifacts, path: Option<&Path>, n: usize, against: &Path, what: &str) -> Result<Vec<Vec<usize>>> {
    let Some(p) = path else {
        return Ok(Vec::new());
    };
    art.input(p);
    let (_, g) = read_groups_tsv(p, n).with_context(|| {
        format!("{what} groups in {} checked against the {n} rows of {}", p.display(), against.display())
    })?;
    Ok(g)
}

pub fn group_structure(art: &mut Artifacts, d: &DataArgs, j: usize, k: usize) -> Result<GroupStructure> {
    let ig = groups(art, d.input_groups.as_deref(), j, &d.x, "input")?;
    let og = groups(art, d.output_groups.as_deref(), k, &d.y, "output")?;
    Ok(GroupStructure::new(j, k, ig, og)?)
}

/// Penalties from the command line; `fallback` fills in when no lambda is
/// given at all.
pub fn penalty(a: &PenaltyArgs, fallback: Option<PenaltyConfig<f64>>) -> Result<PenaltyConfig<f64>> {
    let Some(l1) = a.lambda1 else {
        if let Some(pc) = fallback {
            return Ok(pc);
        }
        return Err(Error::Input("--lambda1 is required".into()).into());
    };
    let (l2, l3) = match (a.lambda2_prime, a.lambda3_prime) {
        (Some(p2), Some(p3)) => reparametrize(p2, p3)?,
        _ => (a.lambda2.unwrap_or(0.0), a.lambda3.unwrap_or(0.0)),
    };
    Ok(PenaltyConfig::with_interaction(l1, l2, l3, a.lambda4.unwrap_or(l1))?)
}

pub fn settings(a: &SolverArgs) -> Result<SolverSettings> {
    let s = SolverSettings::default()
        .with_tol(a.tol)
        .with_max_outer_iters(a.max_iter);
    s.validate()?;
    Ok(s)
}
