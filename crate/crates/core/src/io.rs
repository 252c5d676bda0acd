//! Tab-separated interchange formats. Every index written or read here is
//! 1-based; the library is 0-based internally.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interactions::{
    CandidatePairSet, GenePosition, InteractionNetwork, NetworkEdge, Provenance, SnpPosition,
};
use crate::model::{CoefMatrix, PenaltyConfig};
use crate::simulation::PrPoint;
use crate::tuning::CvRow;

fn reader(path: &Path) -> Result<csv::Reader<File>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .from_reader(f))
}

/// Records with their 1-based line numbers, blank lines dropped.
fn records(path: &Path) -> Result<Vec<(usize, Vec<String>)>> {
    let mut out = Vec::new();
    for rec in reader(path)?.records() {
        let rec = rec.map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.position().map_or(0, |p| p.line() as usize),
            msg: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let fields: Vec<String> = rec.iter().map(|s| s.trim().to_string()).collect();
        if fields.iter().all(|f| f.is_empty()) {
            continue;
        }
        out.push((line, fields));
    }
    Ok(out)
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

fn field<'a>(path: &Path, line: usize, fields: &'a [String], i: usize, name: &str) -> Result<&'a str> {
    fields
        .get(i)
        .map(String::as_str)
        .ok_or_else(|| parse_err(path, line, format!("missing column {} ({name})", i + 1)))
}

fn num<T: std::str::FromStr>(path: &Path, line: usize, s: &str, name: &str) -> Result<T> {
    s.parse()
        .map_err(|_| parse_err(path, line, format!("cannot parse {name} from {s:?}")))
}

/// 1-based index in `1..=n` to 0-based.
fn index(path: &Path, line: usize, s: &str, n: usize, name: &str) -> Result<usize> {
    let i: usize = num(path, line, s, name)?;
    if i == 0 || i > n {
        return Err(parse_err(path, line, format!("{name} {i} outside 1..={n}")));
    }
    Ok(i - 1)
}

/// Drops the first record when `is_data` rejects it, treating it as a
/// header. Checks only whether a field looks like a number, so a malformed
/// number on the first line is still reported.
fn looks_numeric(s: &str) -> bool {
    s.parse::<f64>().is_ok()
}

fn strip_header(
    mut recs: Vec<(usize, Vec<String>)>,
    is_data: impl Fn(&[String]) -> bool,
) -> Vec<(usize, Vec<String>)> {
    if recs.first().is_some_and(|(_, f)| !is_data(f)) {
        recs.remove(0);
    }
    recs
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

fn finish(path: &Path, mut w: BufWriter<File>) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

macro_rules! wline {
    ($path:expr, $w:expr, $($arg:tt)*) => {
        writeln!($w, $($arg)*).map_err(|e| Error::io($path, e))?
    };
}

/// A matrix with row labels and optional column labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledMatrix {
    pub row_ids: Vec<String>,
    pub col_ids: Option<Vec<String>>,
    pub values: Array2<f64>,
}

/// Reads `row_id<TAB>v1<TAB>v2...` lines. A first line whose value fields
/// are not all numbers is a header naming the columns.
pub fn read_matrix_tsv(path: &Path) -> Result<LabeledMatrix> {
    let mut recs = records(path)?;
    let mut col_ids = None;
    if let Some((_, first)) = recs.first() {
        if first[1..].iter().any(|v| v.parse::<f64>().is_err()) {
            col_ids = Some(first[1..].to_vec());
            recs.remove(0);
        }
    }
    if recs.is_empty() {
        return Err(parse_err(path, 1, "no data rows"));
    }
    let width = recs[0].1.len() - 1;
    if let Some(c) = &col_ids {
        if c.len() != width {
            return Err(parse_err(path, recs[0].0, format!("header names {} columns, row has {width}", c.len())));
        }
    }
    let mut values = Array2::zeros((recs.len(), width));
    let mut row_ids = Vec::with_capacity(recs.len());
    for (i, (line, f)) in recs.iter().enumerate() {
        if f.len() - 1 != width {
            return Err(parse_err(path, *line, format!("expected {width} values, found {}", f.len() - 1)));
        }
        row_ids.push(f[0].clone());
        for (c, v) in f[1..].iter().enumerate() {
            let x: f64 = num(path, *line, v, "value")?;
            if !x.is_finite() {
                return Err(parse_err(path, *line, format!("non-finite value {v}")));
            }
            values[[i, c]] = x;
        }
    }
    Ok(LabeledMatrix {
        row_ids,
        col_ids,
        values,
    })
}

pub fn write_matrix_tsv(path: &Path, m: &LabeledMatrix) -> Result<()> {
    let mut w = create(path)?;
    if let Some(c) = &m.col_ids {
        wline!(path, w, "id\t{}", c.join("\t"));
    }
    for (i, row) in m.values.rows().into_iter().enumerate() {
        let vals: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        wline!(path, w, "{}\t{}", m.row_ids[i], vals.join("\t"));
    }
    finish(path, w)
}

/// Reads `group_id<TAB>i1,i2,...` with 1-based members in `1..=n`.
pub fn read_groups_tsv(path: &Path, n: usize) -> Result<(Vec<String>, Vec<Vec<usize>>)> {
    let recs = strip_header(records(path)?, |f| {
        f.get(1).is_some_and(|m| m.split(',').all(|s| looks_numeric(s.trim())))
    });
    let mut ids = Vec::new();
    let mut groups = Vec::new();
    for (line, f) in recs {
        let members = field(path, line, &f, 1, "members")?;
        let g = members
            .split(',')
            .map(|s| index(path, line, s.trim(), n, "member"))
            .collect::<Result<Vec<_>>>()?;
        ids.push(f[0].clone());
        groups.push(g);
    }
    Ok((ids, groups))
}

pub fn write_groups_tsv(path: &Path, groups: &[Vec<usize>]) -> Result<()> {
    let mut w = create(path)?;
    wline!(path, w, "group_id\tmembers");
    for (i, g) in groups.iter().enumerate() {
        let m: Vec<String> = g.iter().map(|v| (v + 1).to_string()).collect();
        wline!(path, w, "g{}\t{}", i + 1, m.join(","));
    }
    finish(path, w)
}

/// Shape and provenance of a coefficient triplet file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefSidecar {
    pub n_outputs: usize,
    pub n_inputs: usize,
    pub nnz: usize,
    pub n_marginals: usize,
    #[serde(default)]
    pub input_ids: Option<Vec<String>>,
    #[serde(default)]
    pub output_ids: Option<Vec<String>>,
    #[serde(default)]
    pub penalty: Option<PenaltyConfig<f64>>,
    #[serde(default)]
    pub objective: Option<f64>,
}

/// `B.tsv` pairs with `B.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

/// Writes the nonzero coefficients as `k<TAB>j<TAB>beta` and the sidecar.
/// Values use the shortest representation that reads back exactly.
pub fn write_coefficients(path: &Path, b: &CoefMatrix<f64>, meta: &CoefSidecar) -> Result<()> {
    let mut w = create(path)?;
    wline!(path, w, "k\tj\tbeta");
    for (k, j, v) in b.triplets() {
        wline!(path, w, "{}\t{}\t{}", k + 1, j + 1, v);
    }
    finish(path, w)?;
    write_json(&sidecar_path(path), meta)
}

pub fn read_coefficients(path: &Path) -> Result<(CoefMatrix<f64>, CoefSidecar)> {
    let meta: CoefSidecar = read_json(&sidecar_path(path))?;
    let recs = strip_header(records(path)?, |f| looks_numeric(&f[0]));
    let mut trip = Vec::with_capacity(recs.len());
    for (line, f) in recs {
        let k = index(path, line, field(path, line, &f, 0, "k")?, meta.n_outputs, "output index")?;
        let j = index(path, line, field(path, line, &f, 1, "j")?, meta.n_inputs, "input index")?;
        let v: f64 = num(path, line, field(path, line, &f, 2, "beta")?, "beta")?;
        trip.push((k, j, v));
    }
    if trip.len() != meta.nnz {
        return Err(parse_err(
            path,
            0,
            format!("sidecar declares {} nonzeros, file has {}", meta.nnz, trip.len()),
        ));
    }
    let b = CoefMatrix::from_triplets(meta.n_outputs, meta.n_inputs, trip)?;
    Ok((b, meta))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    wline!(path, w, "");
    finish(path, w)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_reader(std::io::BufReader::new(f)).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        msg: e.to_string(),
    })
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))?;
    finish(path, w)
}

/// Reads `gene_a<TAB>gene_b<TAB>p_value`.
pub fn read_network_tsv(path: &Path) -> Result<InteractionNetwork> {
    let recs = strip_header(records(path)?, |f| f.get(2).is_some_and(|p| looks_numeric(p)));
    let mut edges = Vec::with_capacity(recs.len());
    for (line, f) in recs {
        let e = NetworkEdge {
            gene_a: field(path, line, &f, 0, "gene_a")?.to_string(),
            gene_b: field(path, line, &f, 1, "gene_b")?.to_string(),
            p_value: num(path, line, field(path, line, &f, 2, "p_value")?, "p-value")?,
        };
        if e.gene_a == e.gene_b || !(0.0..=1.0).contains(&e.p_value) {
            return Err(parse_err(path, line, "self-edge or p-value outside [0, 1]"));
        }
        edges.push(e);
    }
    InteractionNetwork::new(edges)
}

/// Reads `cluster_id<TAB>gene1,gene2,...`. A first line starting with
/// `cluster_id` is a header.
pub fn read_clusters_tsv(path: &Path) -> Result<Vec<(String, Vec<String>)>> {
    let recs = strip_header(records(path)?, |f| !f[0].eq_ignore_ascii_case("cluster_id"));
    let mut out = Vec::new();
    for (line, f) in recs {
        let genes: Vec<String> = field(path, line, &f, 1, "genes")?
            .split(',')
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect();
        out.push((f[0].clone(), genes));
    }
    Ok(out)
}

/// Reads `snp_id<TAB>chrom<TAB>pos`.
pub fn read_snp_positions(path: &Path) -> Result<Vec<SnpPosition>> {
    let recs = strip_header(records(path)?, |f| f.get(2).is_some_and(|p| looks_numeric(p)));
    recs.into_iter()
        .map(|(line, f)| {
            Ok(SnpPosition {
                id: field(path, line, &f, 0, "snp_id")?.to_string(),
                chrom: field(path, line, &f, 1, "chrom")?.to_string(),
                pos: num(path, line, field(path, line, &f, 2, "pos")?, "position")?,
            })
        })
        .collect()
}

/// Reads `gene_id<TAB>chrom<TAB>start<TAB>end`.
pub fn read_gene_positions(path: &Path) -> Result<Vec<GenePosition>> {
    let recs = strip_header(records(path)?, |f| f.get(2).is_some_and(|p| looks_numeric(p)));
    recs.into_iter()
        .map(|(line, f)| {
            let g = GenePosition {
                id: field(path, line, &f, 0, "gene_id")?.to_string(),
                chrom: field(path, line, &f, 1, "chrom")?.to_string(),
                start: num(path, line, field(path, line, &f, 2, "start")?, "start")?,
                end: num(path, line, field(path, line, &f, 3, "end")?, "end")?,
            };
            if g.start > g.end {
                return Err(parse_err(path, line, format!("gene {} starts after it ends", g.id)));
            }
            Ok(g)
        })
        .collect()
}

/// Writes `snp_r<TAB>snp_s<TAB>provenance` with 1-based SNP indices.
pub fn write_pairs_tsv(path: &Path, pairs: &CandidatePairSet) -> Result<()> {
    let mut w = create(path)?;
    wline!(path, w, "snp_r\tsnp_s\tprovenance");
    for ((r, s), p) in pairs.iter() {
        wline!(path, w, "{}\t{}\t{}", r + 1, s + 1, p.as_str());
    }
    finish(path, w)
}

pub fn read_pairs_tsv(path: &Path, n_snps: usize) -> Result<CandidatePairSet> {
    let recs = strip_header(records(path)?, |f| looks_numeric(&f[0]));
    let mut out = CandidatePairSet::new();
    for (line, f) in recs {
        let r = index(path, line, field(path, line, &f, 0, "snp_r")?, n_snps, "SNP index")?;
        let s = index(path, line, field(path, line, &f, 1, "snp_s")?, n_snps, "SNP index")?;
        if r == s {
            return Err(parse_err(path, line, "pair of a SNP with itself"));
        }
        let p = match f.get(2) {
            Some(t) => Provenance::parse(t)
                .ok_or_else(|| parse_err(path, line, format!("unknown provenance {t:?}")))?,
            None => Provenance::Network,
        };
        out.insert(r, s, p);
    }
    Ok(out)
}

pub fn write_pr_tsv(path: &Path, curve: &[PrPoint]) -> Result<()> {
    let mut w = create(path)?;
    wline!(path, w, "tau\tprecision\trecall");
    for p in curve {
        wline!(path, w, "{}\t{}\t{}", p.tau, p.precision, p.recall);
    }
    finish(path, w)
}

pub fn read_pr_tsv(path: &Path) -> Result<Vec<PrPoint>> {
    let recs = strip_header(records(path)?, |f| looks_numeric(&f[0]));
    recs.into_iter()
        .map(|(line, f)| {
            Ok(PrPoint {
                tau: num(path, line, field(path, line, &f, 0, "tau")?, "tau")?,
                precision: num(path, line, field(path, line, &f, 1, "precision")?, "precision")?,
                recall: num(path, line, field(path, line, &f, 2, "recall")?, "recall")?,
            })
        })
        .collect()
}

/// Writes `lambda1<TAB>lambda2p<TAB>lambda3p<TAB>fold<TAB>mse`, folds
/// 1-based.
pub fn write_cv_table(path: &Path, rows: &[CvRow]) -> Result<()> {
    let mut w = create(path)?;
    wline!(path, w, "lambda1\tlambda2p\tlambda3p\tfold\tmse");
    for r in rows {
        wline!(
            path,
            w,
            "{}\t{}\t{}\t{}\t{}",
            r.lambda1,
            r.lambda2_prime,
            r.lambda3_prime,
            r.fold + 1,
            r.mse
        );
    }
    finish(path, w)
}

pub fn read_cv_table(path: &Path) -> Result<Vec<CvRow>> {
    let recs = strip_header(records(path)?, |f| looks_numeric(&f[0]));
    recs.into_iter()
        .map(|(line, f)| {
            let fold: usize = num(path, line, field(path, line, &f, 3, "fold")?, "fold")?;
            if fold == 0 {
                return Err(parse_err(path, line, "folds are 1-based"));
            }
            Ok(CvRow {
                lambda1: num(path, line, &f[0], "lambda1")?,
                lambda2_prime: num(path, line, field(path, line, &f, 1, "lambda2p")?, "lambda2p")?,
                lambda3_prime: num(path, line, field(path, line, &f, 2, "lambda3p")?, "lambda3p")?,
                fold: fold - 1,
                mse: num(path, line, field(path, line, &f, 4, "mse")?, "mse")?,
            })
        })
        .collect()
}

/// Reads a trace written by [`crate::solver::FitReport::trace_tsv`].
pub fn read_trace_tsv(path: &Path) -> Result<Vec<(usize, f64, usize)>> {
    let recs = strip_header(records(path)?, |f| looks_numeric(&f[0]));
    recs.into_iter()
        .map(|(line, f)| {
            Ok((
                num(path, line, &f[0], "iter")?,
                num(path, line, field(path, line, &f, 1, "objective")?, "objective")?,
                num(path, line, field(path, line, &f, 2, "nnz")?, "nnz")?,
            ))
        })
        .collect()
}
