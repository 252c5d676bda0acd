//! Pairwise interaction terms: candidate pairs from a gene interaction
//! network and a two-locus screen, the expanded design, and the input and
//! output groups built from gene clusters and trait correlation.

mod cluster;
mod expand;
mod genome;
mod network;
mod screen;

pub use cluster::{cluster_outputs, DEFAULT_OUTPUT_CUTOFF};
pub use expand::{expand_design, ExpandedDesign, InputSource};
pub use genome::{
    link_snps_to_genes, GenePosition, GenomePositions, Linkage, SnpPosition, DEFAULT_LINK_DISTANCE,
};
pub use network::{
    build_input_groups_from_clusters, candidate_pairs_from_network, pearson, CandidatePairSet,
    ClusterGroups, CorrFilter, InteractionNetwork, NetworkEdge, Provenance, DEFAULT_CORR_FILTER,
};
pub use screen::{pair_p_values, two_locus_screen, ScreenResult, DEFAULT_SCREEN_CUTOFF};
