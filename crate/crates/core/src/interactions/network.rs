use std::collections::{BTreeMap, BTreeSet};

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use super::genome::Linkage;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkEdge {
    pub gene_a: String,
    pub gene_b: String,
    pub p_value: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InteractionNetwork {
    edges: Vec<NetworkEdge>,
    /// Externally computed gene clusters (e.g. dense subgraphs).
    clusters: Option<Vec<Vec<String>>>,
}

impl InteractionNetwork {
    pub fn new(edges: Vec<NetworkEdge>) -> Result<Self> {
        for e in &edges {
            if e.gene_a == e.gene_b {
                return Err(Error::input(format!("self-edge on gene {}", e.gene_a)));
            }
            if !(0.0..=1.0).contains(&e.p_value) {
                return Err(Error::input(format!(
                    "p-value {} on edge {}-{} outside [0, 1]",
                    e.p_value, e.gene_a, e.gene_b
                )));
            }
        }
        Ok(Self {
            edges,
            clusters: None,
        })
    }

    pub fn with_clusters(mut self, clusters: Vec<Vec<String>>) -> Self {
        self.clusters = Some(clusters);
        self
    }

    pub fn edges(&self) -> &[NetworkEdge] {
        &self.edges
    }

    pub fn clusters(&self) -> Option<&[Vec<String>]> {
        self.clusters.as_deref()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Network,
    Screen,
    Both,
}

impl Provenance {
    fn merge(self, other: Provenance) -> Provenance {
        if self == other {
            self
        } else {
            Provenance::Both
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::Network => "network",
            Provenance::Screen => "screen",
            Provenance::Both => "both",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "network" => Some(Provenance::Network),
            "screen" => Some(Provenance::Screen),
            "both" => Some(Provenance::Both),
            _ => None,
        }
    }
}

/// Unordered SNP index pairs `(r, s)` with `r < s`, kept sorted.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CandidatePairSet {
    pairs: BTreeMap<(usize, usize), Provenance>,
}

impl CandidatePairSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts the pair in canonical order; self-pairs are ignored.
    pub fn insert(&mut self, r: usize, s: usize, prov: Provenance) -> bool {
        if r == s {
            return false;
        }
        let key = (r.min(s), r.max(s));
        match self.pairs.get_mut(&key) {
            Some(p) => {
                *p = p.merge(prov);
                false
            }
            None => {
                self.pairs.insert(key, prov);
                true
            }
        }
    }

    pub fn union(&mut self, other: &CandidatePairSet) {
        for (&(r, s), &p) in &other.pairs {
            self.insert(r, s, p);
        }
    }

    pub fn contains(&self, r: usize, s: usize) -> bool {
        self.pairs.contains_key(&(r.min(s), r.max(s)))
    }

    pub fn provenance(&self, r: usize, s: usize) -> Option<Provenance> {
        self.pairs.get(&(r.min(s), r.max(s))).copied()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), Provenance)> + '_ {
        self.pairs.iter().map(|(&k, &v)| (k, v))
    }

    /// Pairs in sorted order; the position is the pair's index in `U`.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.pairs.keys().copied().collect()
    }

    pub fn retain(&mut self, mut keep: impl FnMut(usize, usize) -> bool) {
        self.pairs.retain(|&(r, s), _| keep(r, s));
    }

    /// Largest SNP index referenced, if any.
    pub fn max_index(&self) -> Option<usize> {
        self.pairs.keys().map(|&(_, s)| s).max()
    }
}

/// Drops pairs whose rows of `x` correlate above `max_abs_corr` in
/// absolute value.
#[derive(Debug, Clone, Copy)]
pub struct CorrFilter<'a, F> {
    pub x: ArrayView2<'a, F>,
    pub max_abs_corr: f64,
}

pub const DEFAULT_CORR_FILTER: f64 = 0.5;

/// Sample Pearson correlation; 0 when either row is constant.
pub fn pearson<F: Scalar>(a: ndarray::ArrayView1<'_, F>, b: ndarray::ArrayView1<'_, F>) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().map(|v| v.as_f64()).sum::<f64>() / n;
    let mb = b.iter().map(|v| v.as_f64()).sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b.iter()) {
        let (x, y) = (x.as_f64() - ma, y.as_f64() - mb);
        sab += x * y;
        saa += x * x;
        sbb += y * y;
    }
    if saa == 0.0 || sbb == 0.0 {
        0.0
    } else {
        (sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0)
    }
}

/// Every pair `(r, s)` with `r` linked to `a` and `s` linked to `b` for an
/// edge `(a, b)` with p-value strictly below `p_cutoff`.
pub fn candidate_pairs_from_network<F: Scalar>(
    net: &InteractionNetwork,
    linkage: &Linkage,
    p_cutoff: f64,
    corr_filter: Option<CorrFilter<'_, F>>,
) -> Result<CandidatePairSet> {
    let empty = BTreeSet::new();
    let mut out = CandidatePairSet::new();
    for e in net.edges().iter().filter(|e| e.p_value < p_cutoff) {
        let ra = linkage.get(&e.gene_a).unwrap_or(&empty);
        let sb = linkage.get(&e.gene_b).unwrap_or(&empty);
        for &r in ra {
            for &s in sb {
                out.insert(r, s, Provenance::Network);
            }
        }
    }
    if let Some(f) = corr_filter {
        if let Some(m) = out.max_index() {
            if m >= f.x.nrows() {
                return Err(Error::dim("linked SNP index vs genotype rows", m + 1, f.x.nrows()));
            }
        }
        out.retain(|r, s| pearson(f.x.row(r), f.x.row(s)).abs() <= f.max_abs_corr);
    }
    Ok(out)
}

/// Input groups derived from gene clusters.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterGroups {
    /// Marginal SNP indices per cluster.
    pub marginal: Vec<Vec<usize>>,
    /// Positions in the candidate pair list per cluster.
    pub pairs: Vec<Vec<usize>>,
}

impl ClusterGroups {
    /// Both kinds as input groups of the expanded design, where pair `u`
    /// sits at input `n_marginals + u`.
    pub fn expanded(&self, n_marginals: usize) -> Vec<Vec<usize>> {
        let mut out = self.marginal.clone();
        out.extend(
            self.pairs
                .iter()
                .map(|l| l.iter().map(|&u| n_marginals + u).collect()),
        );
        out
    }
}

/// For each cluster, the marginal group holds every SNP linked to a gene in
/// the cluster and the pair group holds every candidate pair whose two
/// endpoints are both such SNPs. Empty groups are dropped.
pub fn build_input_groups_from_clusters(
    clusters: &[Vec<String>],
    linkage: &Linkage,
    pairs: &CandidatePairSet,
) -> ClusterGroups {
    let list = pairs.pairs();
    let mut out = ClusterGroups::default();
    for cluster in clusters {
        let snps: BTreeSet<usize> = cluster
            .iter()
            .filter_map(|g| linkage.get(g))
            .flatten()
            .copied()
            .collect();
        if snps.is_empty() {
            continue;
        }
        let l: Vec<usize> = list
            .iter()
            .enumerate()
            .filter(|(_, (r, s))| snps.contains(r) && snps.contains(s))
            .map(|(u, _)| u)
            .collect();
        out.marginal.push(snps.into_iter().collect());
        if !l.is_empty() {
            out.pairs.push(l);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn edge(a: &str, b: &str, p: f64) -> NetworkEdge {
        NetworkEdge {
            gene_a: a.into(),
            gene_b: b.into(),
            p_value: p,
        }
    }

    fn linkage() -> Linkage {
        let mut l = Linkage::new();
        l.insert("A".into(), BTreeSet::from([0, 1]));
        l.insert("B".into(), BTreeSet::from([2, 3, 4]));
        l
    }

    #[test]
    fn product_count() {
        let net = InteractionNetwork::new(vec![edge("A", "B", 0.001)]).unwrap();
        let u = candidate_pairs_from_network::<f64>(&net, &linkage(), 0.01, None).unwrap();
        assert_eq!(u.len(), 6);
    }

    #[test]
    fn cutoff_is_strict() {
        let net = InteractionNetwork::new(vec![edge("A", "B", 0.01)]).unwrap();
        let u = candidate_pairs_from_network::<f64>(&net, &linkage(), 0.01, None).unwrap();
        assert!(u.is_empty());
    }

    #[test]
    fn pairs_are_canonical() {
        let mut u = CandidatePairSet::new();
        assert!(u.insert(5, 2, Provenance::Network));
        assert!(!u.insert(2, 5, Provenance::Screen));
        assert!(!u.insert(3, 3, Provenance::Screen));
        assert_eq!(u.pairs(), vec![(2, 5)]);
        assert_eq!(u.provenance(5, 2), Some(Provenance::Both));
    }

    #[test]
    fn rejects_bad_edges() {
        assert!(InteractionNetwork::new(vec![edge("A", "A", 0.1)]).is_err());
        assert!(InteractionNetwork::new(vec![edge("A", "B", 1.5)]).is_err());
    }

    #[test]
    fn empty_cluster_gives_no_group() {
        let clusters = vec![vec!["Z".to_string()], vec!["A".to_string(), "B".to_string()]];
        let mut u = CandidatePairSet::new();
        u.insert(0, 3, Provenance::Network);
        u.insert(0, 9, Provenance::Network);
        let g = build_input_groups_from_clusters(&clusters, &linkage(), &u);
        assert_eq!(g.marginal, vec![vec![0, 1, 2, 3, 4]]);
        assert_eq!(g.pairs, vec![vec![0]]);
        assert_eq!(g.expanded(10), vec![vec![0, 1, 2, 3, 4], vec![10]]);
    }
}
