//! Single-linkage clustering queries answered from the dynamic MSF.
//!
//! Similarities are stored as negated weights, so the minimum spanning forest
//! of the weights is the maximum spanning forest of the similarities. Two
//! vertices share a cluster at threshold `θ` when the MSF path between them
//! uses only edges of similarity at least `θ`.

use std::collections::BTreeSet;

use crate::dynamic_msf::DynamicMsf;
use crate::graph::{BatchError, Pair, VertexId, WeightedEdge};
use crate::oracle::UnionFind;

pub type Similarity = i64;

#[derive(Clone, Debug)]
pub struct SimilarityGraph {
    inner: DynamicMsf<i64>,
}

impl SimilarityGraph {
    pub fn new(n: usize) -> Self {
        SimilarityGraph {
            inner: DynamicMsf::new(n),
        }
    }

    /// Wraps an MSF whose weights are negated similarities.
    pub fn from_msf(inner: DynamicMsf<i64>) -> Self {
        SimilarityGraph { inner }
    }

    pub fn inner(&self) -> &DynamicMsf<i64> {
        &self.inner
    }

    pub fn inner_mut(&mut self) -> &mut DynamicMsf<i64> {
        &mut self.inner
    }

    pub fn n(&self) -> usize {
        self.inner.n()
    }

    /// Inserts `(u, v, similarity)` triples.
    pub fn insert(&mut self, edges: &[(VertexId, VertexId, Similarity)]) -> Result<(), BatchError> {
        let es: Vec<_> = edges.iter().map(|&(u, v, s)| WeightedEdge::new(u, v, -s)).collect();
        self.inner.batch_insert(&es)
    }

    pub fn delete(&mut self, pairs: &[Pair]) -> Result<(), BatchError> {
        self.inner.batch_delete(pairs)
    }

    pub fn same_cluster(&self, s: VertexId, t: VertexId, theta: Similarity) -> bool {
        if s == t {
            return true;
        }
        match self.inner.forest().heaviest_on_path(s, t) {
            Ok(e) => -e.w >= theta,
            Err(_) => false,
        }
    }

    /// Partition of `members` by cluster at `theta`; groups are sorted and
    /// listed by smallest member.
    pub fn group_by_cluster(&self, members: &[VertexId], theta: Similarity) -> Vec<Vec<VertexId>> {
        let marked: BTreeSet<VertexId> = members.iter().copied().collect();
        if marked.is_empty() {
            return Vec::new();
        }
        let cpt = self.inner.forest().compressed_path_tree(&marked);
        let mut uf = UnionFind::new(self.n());
        for c in cpt.edges.iter().filter(|c| -c.heaviest.w >= theta) {
            uf.union(c.u, c.v);
        }
        let mut groups: Vec<Vec<VertexId>> = Vec::new();
        let mut slot = std::collections::HashMap::new();
        for &x in &marked {
            let r = uf.find(x);
            let k = *slot.entry(r).or_insert_with(|| {
                groups.push(Vec::new());
                groups.len() - 1
            });
            groups[k].push(x);
        }
        groups
    }

    pub fn num_clusters(&self, theta: Similarity) -> usize {
        self.n()
            - self
                .inner
                .msf_edges()
                .iter()
                .filter(|e| -e.w >= theta)
                .count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path() -> SimilarityGraph {
        let mut g = SimilarityGraph::new(4);
        g.insert(&[(0, 1, 5), (1, 2, 1), (2, 3, 5)]).unwrap();
        g
    }

    #[test]
    fn path_queries() {
        let g = path();
        assert!(g.same_cluster(0, 1, 2));
        assert!(!g.same_cluster(1, 2, 2));
        assert_eq!(g.group_by_cluster(&[0, 2, 3], 2), vec![vec![0], vec![2, 3]]);
        assert_eq!(g.num_clusters(2), 2);
        assert_eq!(g.num_clusters(6), 4);
        assert_eq!(g.num_clusters(1), 1);
        assert!(g.same_cluster(0, 3, 1));
        assert!(!g.same_cluster(0, 3, 6));
    }

    #[test]
    fn threshold_is_inclusive() {
        let g = path();
        assert!(g.same_cluster(1, 2, 1));
        assert!(!g.same_cluster(1, 2, 2));
        assert!(g.same_cluster(3, 3, 100));
    }
}
