//! The DAG of candidate zero patterns.
//!
//! For every block `(g, h)` of an input group and an output group there are
//! four pattern kinds: the whole block, one row of the block
//! (`beta_k^g = 0`), one column (`beta_h^j = 0`) and single entries. Within a
//! block the block node points at its rows and columns, and each row and
//! column points at its entries. A dummy root points at every block node.
//!
//! Patterns with the same label are shared between blocks: `RowInBlock{k,g}`
//! is the same coefficient set for every output group containing `k`, so it
//! is one node with several block parents; likewise for columns and entries.
//!
//! Nodes are visited in depth-first preorder (each node once, at its first
//! discovery). `skip_index[p]` is the first DFS position after the subtree
//! discovered from position `p`; jumping there skips exactly the descendants
//! that have not already been visited.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::model::GroupStructure;

/// Above this many `(g, h)` blocks the DAG is generated on the fly during
/// each traversal instead of being materialised.
pub const LAZY_BLOCK_THRESHOLD: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ZeroPattern {
    Root,
    /// `B_h^g = 0`; indices into `GroupStructure::input_groups` and
    /// `output_groups`.
    Block { g: usize, h: usize },
    /// `beta_k^g = 0`
    RowInBlock { k: usize, g: usize },
    /// `beta_h^j = 0`
    ColInBlock { j: usize, h: usize },
    /// `beta_k^j = 0`
    Entry { k: usize, j: usize },
}

impl ZeroPattern {
    /// Depth of the kind in a block: 0 block, 1 row/column, 2 entry.
    pub fn level(&self) -> Option<u8> {
        match self {
            ZeroPattern::Root => None,
            ZeroPattern::Block { .. } => Some(0),
            ZeroPattern::RowInBlock { .. } | ZeroPattern::ColInBlock { .. } => Some(1),
            ZeroPattern::Entry { .. } => Some(2),
        }
    }

    /// The `(k, j)` coefficients the pattern sets to zero, row-major.
    pub fn coefficients(&self, gs: &GroupStructure) -> Vec<(usize, usize)> {
        match *self {
            ZeroPattern::Root => {
                let mut out = Vec::new();
                for k in 0..gs.n_outputs() {
                    for j in 0..gs.n_inputs() {
                        out.push((k, j));
                    }
                }
                out
            }
            ZeroPattern::Block { g, h } => {
                let mut out = Vec::new();
                for &k in &gs.output_groups()[h] {
                    for &j in &gs.input_groups()[g] {
                        out.push((k, j));
                    }
                }
                out
            }
            ZeroPattern::RowInBlock { k, g } => {
                gs.input_groups()[g].iter().map(|&j| (k, j)).collect()
            }
            ZeroPattern::ColInBlock { j, h } => {
                gs.output_groups()[h].iter().map(|&k| (k, j)).collect()
            }
            ZeroPattern::Entry { k, j } => vec![(k, j)],
        }
    }

    fn label(&self) -> String {
        // 1-based for display
        match *self {
            ZeroPattern::Root => "root".to_string(),
            ZeroPattern::Block { g, h } => format!("B[h{}][g{}]", h + 1, g + 1),
            ZeroPattern::RowInBlock { k, g } => format!("row k{} g{}", k + 1, g + 1),
            ZeroPattern::ColInBlock { j, h } => format!("col j{} h{}", j + 1, h + 1),
            ZeroPattern::Entry { k, j } => format!("({},{})", k + 1, j + 1),
        }
    }
}

/// Children of a node in ascending `(kind, indices)` order.
fn children_of(p: ZeroPattern, gs: &GroupStructure, out: &mut Vec<ZeroPattern>) {
    out.clear();
    match p {
        ZeroPattern::Root => {
            for g in 0..gs.input_groups().len() {
                for h in 0..gs.output_groups().len() {
                    out.push(ZeroPattern::Block { g, h });
                }
            }
        }
        ZeroPattern::Block { g, h } => {
            for &k in &gs.output_groups()[h] {
                out.push(ZeroPattern::RowInBlock { k, g });
            }
            for &j in &gs.input_groups()[g] {
                out.push(ZeroPattern::ColInBlock { j, h });
            }
        }
        ZeroPattern::RowInBlock { k, g } => {
            for &j in &gs.input_groups()[g] {
                out.push(ZeroPattern::Entry { k, j });
            }
        }
        ZeroPattern::ColInBlock { j, h } => {
            for &k in &gs.output_groups()[h] {
                out.push(ZeroPattern::Entry { k, j });
            }
        }
        ZeroPattern::Entry { .. } => {}
    }
}

/// Materialised pattern DAG with its DFS order and skip links.
#[derive(Debug, Clone)]
pub struct PatternDag {
    nodes: Vec<ZeroPattern>,
    children: Vec<Vec<usize>>,
    dfs_order: Vec<usize>,
    skip_index: Vec<usize>,
}

/// Builds the full DAG for a group structure.
pub fn build_dag(gs: &GroupStructure) -> PatternDag {
    let mut index: HashMap<ZeroPattern, usize> = HashMap::new();
    let mut nodes = vec![ZeroPattern::Root];
    index.insert(ZeroPattern::Root, 0);
    let mut children: Vec<Vec<usize>> = vec![Vec::new()];
    let mut buf = Vec::new();
    // breadth-first creation; node ids are creation order
    let mut cursor = 0;
    while cursor < nodes.len() {
        children_of(nodes[cursor], gs, &mut buf);
        let mut ids = Vec::with_capacity(buf.len());
        for &c in &buf {
            let id = *index.entry(c).or_insert_with(|| {
                nodes.push(c);
                children.push(Vec::new());
                nodes.len() - 1
            });
            ids.push(id);
        }
        children[cursor] = ids;
        cursor += 1;
    }

    let n = nodes.len();
    let mut dfs_order = Vec::with_capacity(n);
    let mut subtree_end = vec![0usize; n];
    let mut visited = vec![false; n];
    // explicit stack of (node, next child slot)
    let mut stack: Vec<(usize, usize)> = vec![(0, 0)];
    visited[0] = true;
    dfs_order.push(0);
    while let Some(&mut (node, ref mut slot)) = stack.last_mut() {
        if *slot < children[node].len() {
            let c = children[node][*slot];
            *slot += 1;
            if !visited[c] {
                visited[c] = true;
                dfs_order.push(c);
                stack.push((c, 0));
            }
        } else {
            subtree_end[node] = dfs_order.len();
            stack.pop();
        }
    }
    let skip_index = dfs_order.iter().map(|&id| subtree_end[id]).collect();
    PatternDag {
        nodes,
        children,
        dfs_order,
        skip_index,
    }
}

impl PatternDag {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: usize) -> ZeroPattern {
        self.nodes[id]
    }

    pub fn nodes(&self) -> &[ZeroPattern] {
        &self.nodes
    }

    pub fn children(&self, id: usize) -> &[usize] {
        &self.children[id]
    }

    pub fn edge_count(&self) -> usize {
        self.children.iter().map(Vec::len).sum()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.children
            .iter()
            .enumerate()
            .flat_map(|(p, cs)| cs.iter().map(move |&c| (p, c)))
    }

    /// Node ids in DFS preorder; position 0 is the root.
    pub fn dfs_order(&self) -> &[usize] {
        &self.dfs_order
    }

    /// For DFS position `p`, the next position outside its subtree.
    pub fn skip_index(&self) -> &[usize] {
        &self.skip_index
    }

    /// Graphviz rendering for small DAGs.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph zero_patterns {\n  node [shape=box];\n");
        for (id, p) in self.nodes.iter().enumerate() {
            let _ = writeln!(s, "  n{id} [label=\"{}\"];", p.label());
        }
        for (a, b) in self.edges() {
            let _ = writeln!(s, "  n{a} -> n{b};");
        }
        s.push_str("}\n");
        s
    }
}

/// Walks `dag` in DFS order, evaluating `is_zeroed` on each yielded node and
/// jumping over the node's descendants whenever it returns `true`. The dummy
/// root is structural and never yielded.
pub fn traverse_with_skip<'a, P>(dag: &'a PatternDag, is_zeroed: P) -> SkipTraversal<'a, P>
where
    P: FnMut(usize, ZeroPattern) -> bool,
{
    SkipTraversal {
        dag,
        pos: 1,
        is_zeroed,
    }
}

pub struct SkipTraversal<'a, P> {
    dag: &'a PatternDag,
    pos: usize,
    is_zeroed: P,
}

impl<P> Iterator for SkipTraversal<'_, P>
where
    P: FnMut(usize, ZeroPattern) -> bool,
{
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.pos >= self.dag.dfs_order.len() {
            return None;
        }
        let id = self.dag.dfs_order[self.pos];
        if (self.is_zeroed)(id, self.dag.nodes[id]) {
            self.pos = self.dag.skip_index[self.pos];
        } else {
            self.pos += 1;
        }
        Some(id)
    }
}

/// Either a materialised DAG or the on-the-fly generator used for very
/// large group structures. Both visit patterns in the same order.
#[derive(Debug, Clone)]
pub enum PatternGraph {
    Eager(PatternDag),
    Lazy(LazyPatternDag),
}

impl PatternGraph {
    pub fn build(gs: &GroupStructure) -> Self {
        Self::build_with_threshold(gs, LAZY_BLOCK_THRESHOLD)
    }

    pub fn build_with_threshold(gs: &GroupStructure, lazy_above: usize) -> Self {
        let blocks = gs.input_groups().len() * gs.output_groups().len();
        if blocks > lazy_above {
            PatternGraph::Lazy(LazyPatternDag { gs: gs.clone() })
        } else {
            PatternGraph::Eager(build_dag(gs))
        }
    }

    /// Visits every pattern below the dummy root in DFS order. `visit`
    /// returns `true` when the pattern is (now) zero; with `skip` set its
    /// descendants are then not visited in this pass.
    pub fn walk(&self, skip: bool, visit: &mut dyn FnMut(ZeroPattern) -> bool) {
        match self {
            PatternGraph::Eager(dag) => {
                let order = dag.dfs_order();
                let jump = dag.skip_index();
                let mut pos = 1;
                while pos < order.len() {
                    let zeroed = visit(dag.nodes[order[pos]]);
                    pos = if zeroed && skip { jump[pos] } else { pos + 1 };
                }
            }
            PatternGraph::Lazy(lazy) => lazy.walk(skip, visit),
        }
    }

    pub fn as_eager(&self) -> Option<&PatternDag> {
        match self {
            PatternGraph::Eager(d) => Some(d),
            PatternGraph::Lazy(_) => None,
        }
    }
}

/// DFS over the pattern DAG without storing it. Visited marks are kept per
/// traversal in dense bitmaps, so concurrent walks share nothing mutable.
#[derive(Debug, Clone)]
pub struct LazyPatternDag {
    gs: GroupStructure,
}

struct Visited {
    rows: Vec<bool>,
    cols: Vec<bool>,
    entries: Vec<bool>,
    n_g: usize,
    n_h: usize,
    n_j: usize,
}

impl Visited {
    fn mark(&mut self, p: ZeroPattern) -> bool {
        let slot = match p {
            ZeroPattern::Root | ZeroPattern::Block { .. } => return true,
            ZeroPattern::RowInBlock { k, g } => &mut self.rows[k * self.n_g + g],
            ZeroPattern::ColInBlock { j, h } => &mut self.cols[j * self.n_h + h],
            ZeroPattern::Entry { k, j } => &mut self.entries[k * self.n_j + j],
        };
        !std::mem::replace(slot, true)
    }
}

impl LazyPatternDag {
    pub fn walk(&self, skip: bool, visit: &mut dyn FnMut(ZeroPattern) -> bool) {
        let gs = &self.gs;
        let n_g = gs.input_groups().len();
        let n_h = gs.output_groups().len();
        let mut seen = Visited {
            rows: vec![false; gs.n_outputs() * n_g],
            cols: vec![false; gs.n_inputs() * n_h],
            entries: vec![false; gs.n_outputs() * gs.n_inputs()],
            n_g,
            n_h,
            n_j: gs.n_inputs(),
        };
        // stack of (pattern, children, next slot, yielding)
        struct Frame {
            children: Vec<ZeroPattern>,
            slot: usize,
            silent: bool,
        }
        let mut buf = Vec::new();
        children_of(ZeroPattern::Root, gs, &mut buf);
        let mut stack = vec![Frame {
            children: std::mem::take(&mut buf),
            slot: 0,
            silent: false,
        }];
        while let Some(top) = stack.last_mut() {
            if top.slot >= top.children.len() {
                stack.pop();
                continue;
            }
            let c = top.children[top.slot];
            top.slot += 1;
            let parent_silent = top.silent;
            if !seen.mark(c) {
                continue;
            }
            let silent = if parent_silent {
                true
            } else {
                visit(c) && skip
            };
            let mut kids = Vec::new();
            children_of(c, gs, &mut kids);
            if !kids.is_empty() {
                stack.push(Frame {
                    children: kids,
                    slot: 0,
                    silent,
                });
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig1() -> GroupStructure {
        GroupStructure::new(2, 2, vec![vec![0, 1]], vec![vec![0, 1]]).unwrap()
    }

    #[test]
    fn fig1_has_nine_patterns() {
        let dag = build_dag(&fig1());
        assert_eq!(dag.len() - 1, 9);
        assert_eq!(dag.edge_count() - 1, 12);
    }

    #[test]
    fn no_skip_yields_everything_once() {
        let dag = build_dag(&fig1());
        let seen: Vec<usize> = traverse_with_skip(&dag, |_, _| false).collect();
        assert_eq!(seen, &dag.dfs_order()[1..]);
        let mut sorted = seen.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), dag.len() - 1);
    }

    #[test]
    fn all_zero_yields_blocks_only() {
        let gs = GroupStructure::new(4, 3, vec![vec![0, 1], vec![2, 3]], vec![vec![0, 1]]).unwrap();
        let dag = build_dag(&gs);
        let seen: Vec<ZeroPattern> = traverse_with_skip(&dag, |_, _| true)
            .map(|id| dag.node(id))
            .collect();
        let blocks = gs.input_groups().len() * gs.output_groups().len();
        assert_eq!(seen.len(), blocks);
        assert!(seen.iter().all(|p| matches!(p, ZeroPattern::Block { .. })));
    }

    #[test]
    fn dot_export_mentions_every_node() {
        let dag = build_dag(&fig1());
        let dot = dag.to_dot();
        assert!(dot.starts_with("digraph"));
        assert_eq!(dot.matches("->").count(), dag.edge_count());
    }
}
