//! Static reference computations used by audits, the harness and tests.

use crate::graph::{EdgeWeight, VertexId, WeightedEdge};

#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns `false` when `a` and `b` were already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        true
    }

    pub fn same(&mut self, a: usize, b: usize) -> bool {
        self.find(a) == self.find(b)
    }

    pub fn component_count(&mut self) -> usize {
        (0..self.parent.len()).filter(|&x| self.find(x) == x).count()
    }

    /// Components as sorted member lists, ordered by smallest member.
    pub fn groups(&mut self) -> Vec<Vec<usize>> {
        let n = self.parent.len();
        let mut by_root: Vec<Vec<usize>> = vec![Vec::new(); n];
        for x in 0..n {
            let r = self.find(x);
            by_root[r].push(x);
        }
        let mut out: Vec<Vec<usize>> = by_root.into_iter().filter(|g| !g.is_empty()).collect();
        out.sort();
        out
    }
}

/// Minimum spanning forest under the edge total order, sorted ascending.
pub fn kruskal<W: EdgeWeight>(n: usize, edges: &[WeightedEdge<W>]) -> Vec<WeightedEdge<W>> {
    let mut sorted = edges.to_vec();
    sorted.sort();
    let mut uf = UnionFind::new(n);
    sorted.into_iter().filter(|e| uf.union(e.u, e.v)).collect()
}

/// Connected components of the graph restricted to edges accepted by `keep`.
pub fn components<W: EdgeWeight>(
    n: usize,
    edges: &[WeightedEdge<W>],
    keep: impl Fn(&WeightedEdge<W>) -> bool,
) -> Vec<Vec<VertexId>> {
    let mut uf = UnionFind::new(n);
    for e in edges.iter().filter(|e| keep(e)) {
        uf.union(e.u, e.v);
    }
    uf.groups()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle() {
        let es = [
            WeightedEdge::new(0, 1, 1),
            WeightedEdge::new(1, 2, 2),
            WeightedEdge::new(0, 2, 3),
        ];
        assert_eq!(kruskal(3, &es), vec![es[0], es[1]]);
    }

    #[test]
    fn ties_follow_endpoints() {
        let es = [
            WeightedEdge::new(1, 2, 5),
            WeightedEdge::new(0, 2, 5),
            WeightedEdge::new(0, 1, 5),
        ];
        let msf = kruskal(3, &es);
        assert_eq!(msf, vec![WeightedEdge::new(0, 1, 5), WeightedEdge::new(0, 2, 5)]);
    }
}
