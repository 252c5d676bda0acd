use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_LINK_DISTANCE: u64 = 500;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnpPosition {
    pub id: String,
    pub chrom: String,
    pub pos: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenePosition {
    pub id: String,
    pub chrom: String,
    pub start: u64,
    pub end: u64,
}

impl GenePosition {
    /// Distance from `pos` to the interval `[start, end]`, 0 inside it.
    pub fn distance_to(&self, pos: u64) -> u64 {
        if pos < self.start {
            self.start - pos
        } else { pos.saturating_sub(self.end) }
    }
}

/// SNP and gene coordinates. SNP order defines the marginal input index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenomePositions {
    snps: Vec<SnpPosition>,
    genes: Vec<GenePosition>,
}

impl GenomePositions {
    pub fn new(snps: Vec<SnpPosition>, genes: Vec<GenePosition>) -> Result<Self> {
        let mut seen = HashSet::new();
        for s in &snps {
            if !seen.insert(s.id.as_str()) {
                return Err(Error::input(format!("duplicate SNP id {}", s.id)));
            }
        }
        let mut seen = HashSet::new();
        for g in &genes {
            if !seen.insert(g.id.as_str()) {
                return Err(Error::input(format!("duplicate gene id {}", g.id)));
            }
            if g.start > g.end {
                return Err(Error::input(format!(
                    "gene {} has start {} after end {}",
                    g.id, g.start, g.end
                )));
            }
        }
        Ok(Self { snps, genes })
    }

    pub fn snps(&self) -> &[SnpPosition] {
        &self.snps
    }

    pub fn genes(&self) -> &[GenePosition] {
        &self.genes
    }
}

/// Gene id to the indices of SNPs within `max_dist_bp` of the gene.
pub type Linkage = BTreeMap<String, BTreeSet<usize>>;

/// Links SNP `s` to gene `g` when they share a chromosome and the distance
/// from the SNP to the gene interval is below `max_dist_bp`.
///
/// A chromosome label present in only one of the two position sets is
/// treated as a labelling mismatch (e.g. `chr1` against `1`) and reported.
pub fn link_snps_to_genes(pos: &GenomePositions, max_dist_bp: u64) -> Result<Linkage> {
    let snp_chroms: BTreeSet<&str> = pos.snps.iter().map(|s| s.chrom.as_str()).collect();
    let gene_chroms: BTreeSet<&str> = pos.genes.iter().map(|g| g.chrom.as_str()).collect();
    let unknown: Vec<&str> = snp_chroms
        .symmetric_difference(&gene_chroms)
        .copied()
        .collect();
    if !unknown.is_empty() {
        return Err(Error::input(format!(
            "chromosome labels not shared by SNP and gene positions: {}",
            unknown.join(", ")
        )));
    }

    let mut by_chrom: BTreeMap<&str, Vec<(u64, usize)>> = BTreeMap::new();
    for (i, s) in pos.snps.iter().enumerate() {
        by_chrom.entry(s.chrom.as_str()).or_default().push((s.pos, i));
    }
    for v in by_chrom.values_mut() {
        v.sort_unstable();
    }

    let mut out = Linkage::new();
    for g in &pos.genes {
        let set = out.entry(g.id.clone()).or_default();
        if max_dist_bp == 0 {
            continue;
        }
        let Some(sorted) = by_chrom.get(g.chrom.as_str()) else {
            continue;
        };
        let lo = g.start.saturating_sub(max_dist_bp - 1);
        let hi = g.end.saturating_add(max_dist_bp - 1);
        let first = sorted.partition_point(|&(p, _)| p < lo);
        for &(p, i) in &sorted[first..] {
            if p > hi {
                break;
            }
            set.insert(i);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn snp(id: &str, chrom: &str, pos: u64) -> SnpPosition {
        SnpPosition {
            id: id.into(),
            chrom: chrom.into(),
            pos,
        }
    }

    fn gene(id: &str, chrom: &str, start: u64, end: u64) -> GenePosition {
        GenePosition {
            id: id.into(),
            chrom: chrom.into(),
            start,
            end,
        }
    }

    #[test]
    fn inside_and_boundary() {
        let pos = GenomePositions::new(
            vec![snp("a", "1", 1500), snp("b", "1", 1000), snp("c", "1", 1101)],
            vec![gene("in", "1", 1000, 2000), gene("far", "1", 1600, 2000)],
        )
        .unwrap();
        let l = link_snps_to_genes(&pos, 500).unwrap();
        assert_eq!(l["in"], BTreeSet::from([0, 1, 2]));
        // 1600 - 1101 = 499 links, 1600 - 1000 = 600 does not
        assert_eq!(l["far"], BTreeSet::from([0, 2]));
    }

    #[test]
    fn chromosome_mismatch_lists_offenders() {
        let pos = GenomePositions::new(vec![snp("a", "chr1", 10)], vec![gene("g", "1", 0, 5)]).unwrap();
        let msg = link_snps_to_genes(&pos, 500).unwrap_err().to_string();
        assert!(msg.contains("chr1") && msg.contains(" 1"));
    }

    #[test]
    fn rejects_reversed_gene() {
        assert!(GenomePositions::new(vec![], vec![gene("g", "1", 5, 4)]).is_err());
    }
}
