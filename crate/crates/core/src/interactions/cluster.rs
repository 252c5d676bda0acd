use ndarray::ArrayView2;

use super::network::pearson;
use crate::scalar::Scalar;

pub const DEFAULT_OUTPUT_CUTOFF: f64 = 0.8;

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, mut i: usize) -> usize {
        while self.0[i] != i {
            self.0[i] = self.0[self.0[i]];
            i = self.0[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (a, b) = (self.find(a), self.find(b));
        self.0[a.max(b)] = a.min(b);
    }
}

/// Average-linkage clustering of the rows of `y` under the distance
/// `1 - pearson`, cut at `cutoff`: rows joined by merges at height
/// `<= cutoff` share a group. Groups are ordered by smallest member.
///
/// Uses the nearest-neighbour chain, which is exact for average linkage and
/// needs O(K^2) time and memory.
pub fn cluster_outputs<F: Scalar>(y: ArrayView2<'_, F>, cutoff: f64) -> Vec<Vec<usize>> {
    let k = y.nrows();
    if k <= 1 {
        return (0..k).map(|i| vec![i]).collect();
    }
    let mut d = vec![vec![0.0_f64; k]; k];
    for a in 0..k {
        for b in a + 1..k {
            let v = 1.0 - pearson(y.row(a), y.row(b));
            d[a][b] = v;
            d[b][a] = v;
        }
    }
    let mut size = vec![1usize; k];
    let mut active = vec![true; k];
    let mut uf = UnionFind((0..k).collect());
    let mut chain: Vec<usize> = Vec::new();
    let mut remaining = k;
    while remaining > 1 {
        if chain.is_empty() {
            chain.push(active.iter().position(|&x| x).unwrap());
        }
        let a = *chain.last().unwrap();
        let prev = chain.len().checked_sub(2).map(|i| chain[i]);
        let mut best = prev.unwrap_or(usize::MAX);
        let mut best_d = prev.map_or(f64::INFINITY, |p| d[a][p]);
        for c in (0..k).filter(|&c| active[c] && c != a) {
            if d[a][c] < best_d {
                best_d = d[a][c];
                best = c;
            }
        }
        if Some(best) == prev {
            chain.pop();
            chain.pop();
            let b = best;
            if best_d <= cutoff {
                uf.union(a, b);
            }
            let (sa, sb) = (size[a] as f64, size[b] as f64);
            for c in (0..k).filter(|&c| active[c] && c != a && c != b) {
                let v = (sa * d[a][c] + sb * d[b][c]) / (sa + sb);
                d[a][c] = v;
                d[c][a] = v;
            }
            size[a] += size[b];
            active[b] = false;
            remaining -= 1;
        } else {
            chain.push(best);
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; k];
    for i in 0..k {
        let r = uf.find(i);
        if slot[r] == usize::MAX {
            slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[r]].push(i);
    }
    groups
}
