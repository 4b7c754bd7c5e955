//! Weighted forests answering heaviest-edge path queries and producing
//! compressed path trees relative to a set of marked vertices.
//!
//! Queries walk the affected component directly, so their cost is linear in
//! the component size.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use thiserror::Error;

use crate::graph::{pair, EdgeWeight, Pair, VertexId, WeightedEdge};
use crate::oracle::UnionFind;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PathError {
    #[error("inserting {{{0},{1}}} would close a cycle")]
    CycleCreated(VertexId, VertexId),
    #[error("edge {{{0},{1}}} is absent")]
    EdgeAbsent(VertexId, VertexId),
    #[error("vertices {0} and {1} are not connected")]
    NotConnected(VertexId, VertexId),
}

#[derive(Clone, Debug)]
pub struct PathForest<W> {
    adj: Vec<BTreeMap<VertexId, W>>,
    edges: usize,
    version: u64,
}

impl<W: EdgeWeight> PathForest<W> {
    pub fn new(n: usize) -> Self {
        PathForest {
            adj: vec![BTreeMap::new(); n],
            edges: 0,
            version: 0,
        }
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn len(&self) -> usize {
        self.edges
    }

    pub fn is_empty(&self) -> bool {
        self.edges == 0
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn contains(&self, p: Pair) -> bool {
        self.adj[p.0].contains_key(&p.1)
    }

    pub fn get(&self, p: Pair) -> Option<WeightedEdge<W>> {
        self.adj[p.0].get(&p.1).map(|&w| WeightedEdge::new(p.0, p.1, w))
    }

    /// All edges, sorted by the edge order.
    pub fn edges(&self) -> Vec<WeightedEdge<W>> {
        let mut out: Vec<_> = self
            .adj
            .iter()
            .enumerate()
            .flat_map(|(u, m)| {
                m.range(u + 1..)
                    .map(move |(&v, &w)| WeightedEdge::new(u, v, w))
            })
            .collect();
        out.sort();
        out
    }

    fn labels(&self) -> Vec<usize> {
        let mut label = vec![usize::MAX; self.n()];
        for s in 0..self.n() {
            if label[s] != usize::MAX {
                continue;
            }
            label[s] = s;
            let mut stack = vec![s];
            while let Some(x) = stack.pop() {
                for &y in self.adj[x].keys() {
                    if label[y] == usize::MAX {
                        label[y] = s;
                        stack.push(y);
                    }
                }
            }
        }
        label
    }

    pub fn insert_batch(&mut self, edges: &[WeightedEdge<W>]) -> Result<(), PathError> {
        let label = self.labels();
        let mut uf = UnionFind::new(self.n());
        for e in edges {
            if e.u == e.v || !uf.union(label[e.u], label[e.v]) {
                return Err(PathError::CycleCreated(e.u, e.v));
            }
        }
        for e in edges {
            self.adj[e.u].insert(e.v, e.w);
            self.adj[e.v].insert(e.u, e.w);
        }
        self.edges += edges.len();
        self.version += 1;
        Ok(())
    }

    pub fn delete_batch(&mut self, pairs: &[Pair]) -> Result<(), PathError> {
        let mut seen = BTreeSet::new();
        for &(u, v) in pairs {
            let p = pair(u, v);
            if !self.contains(p) || !seen.insert(p) {
                return Err(PathError::EdgeAbsent(p.0, p.1));
            }
        }
        for &(u, v) in pairs {
            self.adj[u].remove(&v);
            self.adj[v].remove(&u);
        }
        self.edges -= pairs.len();
        self.version += 1;
        Ok(())
    }

    /// Tree path from `u` to `v` as a list of edges, or `None` if disconnected.
    pub fn path(&self, u: VertexId, v: VertexId) -> Option<Vec<WeightedEdge<W>>> {
        let mut parent: HashMap<VertexId, VertexId> = HashMap::new();
        parent.insert(u, u);
        let mut queue = VecDeque::from([u]);
        while let Some(x) = queue.pop_front() {
            if x == v {
                break;
            }
            for &y in self.adj[x].keys() {
                if let std::collections::hash_map::Entry::Vacant(slot) = parent.entry(y) {
                    slot.insert(x);
                    queue.push_back(y);
                }
            }
        }
        parent.get(&v)?;
        let mut out = Vec::new();
        let mut x = v;
        while x != u {
            let p = parent[&x];
            out.push(WeightedEdge::new(p, x, self.adj[p][&x]));
            x = p;
        }
        out.reverse();
        Some(out)
    }

    pub fn connected(&self, u: VertexId, v: VertexId) -> bool {
        self.path(u, v).is_some()
    }

    pub fn heaviest_on_path(&self, u: VertexId, v: VertexId) -> Result<WeightedEdge<W>, PathError> {
        match self.path(u, v) {
            Some(p) if !p.is_empty() => Ok(p.into_iter().max().unwrap()),
            _ => Err(PathError::NotConnected(u, v)),
        }
    }

    pub fn compressed_path_tree(&self, marked: &BTreeSet<VertexId>) -> CompressedPathTree<W> {
        let mut vertices = Vec::new();
        let mut edges = Vec::new();
        let mut parent: Vec<usize> = vec![usize::MAX; self.n()];
        let mut has_mark = vec![false; self.n()];
        for &root in marked {
            if parent[root] != usize::MAX {
                continue;
            }
            parent[root] = root;
            let mut order = vec![root];
            let mut k = 0;
            while k < order.len() {
                let x = order[k];
                k += 1;
                for &y in self.adj[x].keys() {
                    if parent[y] == usize::MAX {
                        parent[y] = x;
                        order.push(y);
                    }
                }
            }
            let mut kept_children = HashMap::<VertexId, usize>::new();
            for &x in order.iter().rev() {
                has_mark[x] |= marked.contains(&x);
                if has_mark[x] && x != root {
                    has_mark[parent[x]] = true;
                    *kept_children.entry(parent[x]).or_default() += 1;
                }
            }
            let essential = |x: VertexId| {
                let degree = kept_children.get(&x).copied().unwrap_or(0) + usize::from(x != root);
                marked.contains(&x) || degree >= 3
            };
            for &x in &order {
                if !has_mark[x] || !essential(x) {
                    continue;
                }
                vertices.push(x);
                if x == root {
                    continue;
                }
                let mut path = Vec::new();
                let mut y = x;
                loop {
                    let p = parent[y];
                    path.push(WeightedEdge::new(p, y, self.adj[p][&y]));
                    y = p;
                    if essential(y) {
                        break;
                    }
                }
                let heaviest = *path.iter().max().unwrap();
                let (a, b) = pair(x, y);
                edges.push(CompressedEdge {
                    u: a,
                    v: b,
                    heaviest,
                    path,
                });
            }
        }
        vertices.sort_unstable();
        edges.sort_by_key(|e: &CompressedEdge<W>| e.pair());
        let index = edges
            .iter()
            .enumerate()
            .flat_map(|(i, c)| c.path.iter().map(move |e| (e.pair(), i)))
            .collect();
        CompressedPathTree {
            vertices,
            edges,
            index,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompressedEdge<W> {
    pub u: VertexId,
    pub v: VertexId,
    /// Heaviest original edge on the represented path.
    pub heaviest: WeightedEdge<W>,
    pub path: Vec<WeightedEdge<W>>,
}

impl<W> CompressedEdge<W> {
    pub fn pair(&self) -> Pair {
        (self.u, self.v)
    }
}

#[derive(Clone, Debug)]
pub struct CompressedPathTree<W> {
    pub vertices: Vec<VertexId>,
    pub edges: Vec<CompressedEdge<W>>,
    index: HashMap<Pair, usize>,
}

impl<W: EdgeWeight> CompressedPathTree<W> {
    /// Index of the compressed edge whose path contains the original edge.
    pub fn resolve_original(&self, p: Pair) -> Option<usize> {
        self.index.get(&pair(p.0, p.1)).copied()
    }

    /// The compressed tree as a forest of its own, one edge per compressed
    /// edge, weighted by the heaviest represented edge.
    pub fn as_forest(&self, n: usize) -> PathForest<WeightedEdge<W>> {
        let mut f = PathForest::new(n);
        let edges: Vec<_> = self
            .edges
            .iter()
            .map(|c| WeightedEdge::new(c.u, c.v, c.heaviest))
            .collect();
        f.insert_batch(&edges).expect("compressed edges form a forest");
        f
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // u=0, v=1, x=2, y=3
    fn table_forest() -> PathForest<i64> {
        let mut f = PathForest::new(4);
        f.insert_batch(&[
            WeightedEdge::new(0, 2, 2),
            WeightedEdge::new(1, 3, 3),
            WeightedEdge::new(2, 3, 1),
        ])
        .unwrap();
        f
    }

    #[test]
    fn heaviest_on_small_paths() {
        let f = table_forest();
        assert_eq!(f.heaviest_on_path(0, 1), Ok(WeightedEdge::new(1, 3, 3)));
        assert_eq!(f.heaviest_on_path(0, 2), Ok(WeightedEdge::new(0, 2, 2)));
        let mut g = f.clone();
        g.delete_batch(&[(2, 3)]).unwrap();
        assert_eq!(g.heaviest_on_path(0, 1), Err(PathError::NotConnected(0, 1)));
        assert_eq!(g.delete_batch(&[(2, 3)]), Err(PathError::EdgeAbsent(2, 3)));
        assert_eq!(
            f.clone().insert_batch(&[WeightedEdge::new(0, 1, 9)]),
            Err(PathError::CycleCreated(0, 1))
        );
    }

    #[test]
    fn compressing_a_path() {
        let f = table_forest();
        let cpt = f.compressed_path_tree(&BTreeSet::from([0, 1]));
        assert_eq!(cpt.vertices, vec![0, 1]);
        assert_eq!(cpt.edges.len(), 1);
        assert_eq!(cpt.edges[0].pair(), (0, 1));
        assert_eq!(cpt.edges[0].heaviest, WeightedEdge::new(1, 3, 3));
        assert_eq!(cpt.resolve_original((2, 0)), Some(0));
        let all = f.compressed_path_tree(&BTreeSet::from([0, 1, 2, 3]));
        assert_eq!(all.vertices, vec![0, 1, 2, 3]);
        assert_eq!(all.edges.len(), 3);
        assert!(all.edges.iter().all(|c| c.path.len() == 1));
    }

    #[test]
    fn branch_vertices_survive() {
        // Spider with center 0 and legs 0-1-2, 0-3-4, 0-5-6.
        let mut f = PathForest::new(8);
        f.insert_batch(&[
            WeightedEdge::new(0, 1, 1),
            WeightedEdge::new(1, 2, 2),
            WeightedEdge::new(0, 3, 3),
            WeightedEdge::new(3, 4, 4),
            WeightedEdge::new(0, 5, 5),
            WeightedEdge::new(5, 6, 6),
        ])
        .unwrap();
        let cpt = f.compressed_path_tree(&BTreeSet::from([2, 4, 6, 7]));
        assert_eq!(cpt.vertices, vec![0, 2, 4, 6, 7]);
        assert_eq!(cpt.edges.len(), 3);
        assert_eq!(cpt.resolve_original((1, 0)), cpt.resolve_original((1, 2)));
    }
}
