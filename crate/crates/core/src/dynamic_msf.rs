//! Fully dynamic minimum spanning forest under batches of insertions or
//! deletions.
//!
//! The global forest `F` lives in a [`PathForest`]. Non-tree edges are spread
//! over decremental structures `A_0 ..= A_{2L}`, where `A_i` holds at most
//! `2^i` of them together with a compressed copy of `F` relative to their
//! endpoints. Each `A_i` is built from its own sync forest `T_i`, which lags
//! behind `F` by the buffered differences `B_D[i]` (edges to drop) and
//! `B_I[i]` (edges to add), so that `(T_i \ B_D[i]) ∪ B_I[i] = F` always.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::euler_forest::log2_ceil;
use crate::graph::{pair, validate_batch, Batch, BatchError, EdgeWeight, Pair, VertexId, WeightedEdge};
use crate::level_structure::{EdgeId, LevelStructure, Mode};
use crate::oracle::{kruskal, UnionFind};
use crate::path_forest::{CompressedPathTree, PathForest};

#[derive(Clone, Debug, PartialEq, Eq)]
enum LocalEdge<W> {
    Compressed(usize),
    Original(WeightedEdge<W>),
}

#[derive(Clone, Debug)]
struct Local<W> {
    ls: Option<LevelStructure<WeightedEdge<W>>>,
    verts: Vec<VertexId>,
    kinds: Vec<LocalEdge<W>>,
    cpt: Option<CompressedPathTree<W>>,
    orig_to_local: HashMap<Pair, EdgeId>,
    comp_to_local: Vec<EdgeId>,
}

impl<W: EdgeWeight> Local<W> {
    fn empty() -> Self {
        Local {
            ls: None,
            verts: Vec::new(),
            kinds: Vec::new(),
            cpt: None,
            orig_to_local: HashMap::new(),
            comp_to_local: Vec::new(),
        }
    }

    fn build(tree: &PathForest<W>, edges: &BTreeSet<WeightedEdge<W>>, seed: u64) -> Self {
        if edges.is_empty() {
            return Local::empty();
        }
        let marked: BTreeSet<VertexId> = edges.iter().flat_map(|e| [e.u, e.v]).collect();
        let cpt = tree.compressed_path_tree(&marked);
        let mut verts: Vec<VertexId> = cpt.vertices.iter().copied().chain(marked.iter().copied()).collect();
        verts.sort_unstable();
        verts.dedup();
        let local = |x: VertexId| verts.binary_search(&x).unwrap();
        let mut kinds = Vec::new();
        let mut local_edges = Vec::new();
        let mut comp_to_local = Vec::new();
        for (idx, c) in cpt.edges.iter().enumerate() {
            comp_to_local.push(kinds.len());
            kinds.push(LocalEdge::Compressed(idx));
            local_edges.push(WeightedEdge::new(local(c.u), local(c.v), c.heaviest));
        }
        let mut orig_to_local = HashMap::new();
        for &e in edges {
            orig_to_local.insert(e.pair(), kinds.len());
            kinds.push(LocalEdge::Original(e));
            local_edges.push(WeightedEdge::new(local(e.u), local(e.v), e));
        }
        let ls = LevelStructure::init(verts.len(), &local_edges, Mode::Msf, seed).expect("no self-loops");
        Local {
            ls: Some(ls),
            verts,
            kinds,
            cpt: Some(cpt),
            orig_to_local,
            comp_to_local,
        }
    }

    /// Original edges that are currently local non-tree edges.
    fn nontree_originals(&self) -> Vec<WeightedEdge<W>> {
        let Some(ls) = &self.ls else {
            return Vec::new();
        };
        ls.nontree_edges()
            .into_iter()
            .filter_map(|(id, _)| match &self.kinds[id] {
                LocalEdge::Original(e) => Some(*e),
                LocalEdge::Compressed(_) => None,
            })
            .collect()
    }

    fn nontree_count(&self) -> usize {
        self.ls.as_ref().map_or(0, |ls| ls.nontree_edges().len())
    }

    /// Removes the local images of `deleted` and returns the original edges
    /// promoted to reconnect the local forest.
    fn delete(&mut self, deleted: &[WeightedEdge<W>]) -> Vec<WeightedEdge<W>> {
        let (Some(ls), Some(cpt)) = (&mut self.ls, &self.cpt) else {
            return Vec::new();
        };
        let mut ids = BTreeSet::new();
        for e in deleted {
            let via_path = cpt
                .resolve_original(e.pair())
                .map(|c| self.comp_to_local[c])
                .filter(|&id| ls.record(id).is_some());
            let direct = self
                .orig_to_local
                .get(&e.pair())
                .copied()
                .filter(|&id| ls.record(id).is_some() && self.kinds[id] == LocalEdge::Original(*e));
            if let Some(id) = via_path.or(direct) {
                ids.insert(id);
            }
        }
        if ids.is_empty() {
            return Vec::new();
        }
        let ids: Vec<EdgeId> = ids.into_iter().collect();
        let report = ls.delete_batch(&ids).expect("live local edges");
        report
            .replacements
            .into_iter()
            .filter_map(|(id, _)| match &self.kinds[id] {
                LocalEdge::Original(e) => Some(*e),
                LocalEdge::Compressed(_) => None,
            })
            .collect()
    }
}

/// Read-only view of one local structure, in global vertex ids.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalView<W> {
    /// Surviving compressed edges as `(u, v, heaviest represented edge)`.
    pub compressed: Vec<(VertexId, VertexId, WeightedEdge<W>)>,
    /// Original edges that are local tree edges.
    pub tree_originals: Vec<WeightedEdge<W>>,
    /// Original edges that are local non-tree edges.
    pub nontree: Vec<WeightedEdge<W>>,
}

#[derive(Clone)]
pub struct DynamicMsf<W: EdgeWeight = i64> {
    n: usize,
    graph: BTreeMap<Pair, WeightedEdge<W>>,
    forest: PathForest<W>,
    locals: Vec<Local<W>>,
    syncs: Vec<PathForest<W>>,
    bd: Vec<BTreeSet<WeightedEdge<W>>>,
    bi: Vec<BTreeSet<WeightedEdge<W>>>,
    max_m: usize,
    seed: u64,
    rebuilds: u64,
    pool: Option<Arc<rayon::ThreadPool>>,
}

impl<W: EdgeWeight> fmt::Debug for DynamicMsf<W> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DynamicMsf")
            .field("n", &self.n)
            .field("edges", &self.graph.len())
            .field("forest", &self.forest.len())
            .finish()
    }
}

impl<W: EdgeWeight> DynamicMsf<W> {
    pub fn new(n: usize) -> Self {
        Self::with_seed(n, 0)
    }

    pub fn with_seed(n: usize, seed: u64) -> Self {
        assert!(n >= 1, "need at least one vertex");
        let log_n = log2_ceil(n) as usize;
        let slots = 2 * log_n + 1;
        DynamicMsf {
            n,
            graph: BTreeMap::new(),
            forest: PathForest::new(n),
            locals: (0..slots).map(|_| Local::empty()).collect(),
            syncs: (0..slots).map(|_| PathForest::new(n)).collect(),
            bd: vec![BTreeSet::new(); slots],
            bi: vec![BTreeSet::new(); slots],
            max_m: 0,
            seed,
            rebuilds: 0,
            pool: None,
        }
    }

    /// Runs the per-structure deletions on a dedicated pool of `workers` threads.
    pub fn set_workers(&mut self, workers: usize) {
        self.pool = Some(Arc::new(
            rayon::ThreadPoolBuilder::new()
                .num_threads(workers.max(1))
                .build()
                .expect("thread pool"),
        ));
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_local_structures(&self) -> usize {
        self.locals.len()
    }

    pub fn edge_count(&self) -> usize {
        self.graph.len()
    }

    pub fn contains(&self, u: VertexId, v: VertexId) -> bool {
        self.graph.contains_key(&pair(u, v))
    }

    pub fn get(&self, u: VertexId, v: VertexId) -> Option<WeightedEdge<W>> {
        self.graph.get(&pair(u, v)).copied()
    }

    pub fn edges(&self) -> Vec<WeightedEdge<W>> {
        self.graph.values().copied().collect()
    }

    pub fn msf_edges(&self) -> Vec<WeightedEdge<W>> {
        self.forest.edges()
    }

    pub fn forest(&self) -> &PathForest<W> {
        &self.forest
    }

    pub fn apply(&mut self, batch: &Batch<W>) -> Result<(), BatchError> {
        match batch {
            Batch::Insert(edges) => self.batch_insert(edges),
            Batch::Delete(pairs) => self.batch_delete(pairs),
        }
    }

    pub fn batch_insert(&mut self, edges: &[WeightedEdge<W>]) -> Result<(), BatchError> {
        let edges: Vec<_> = edges.iter().map(|e| WeightedEdge::new(e.u, e.v, e.w)).collect();
        validate_batch(&Batch::Insert(edges.clone()), self.n, |p| self.graph.contains_key(&p))?;
        for e in &edges {
            self.graph.insert(e.pair(), *e);
        }
        self.max_m = self.max_m.max(self.graph.len());
        self.insert_present(edges.into_iter().collect());
        Ok(())
    }

    pub fn batch_delete(&mut self, pairs: &[Pair]) -> Result<(), BatchError> {
        validate_batch::<W>(&Batch::Delete(pairs.to_vec()), self.n, |p| self.graph.contains_key(&p))?;
        let deleted: Vec<WeightedEdge<W>> = pairs
            .iter()
            .map(|&(u, v)| self.graph.remove(&pair(u, v)).unwrap())
            .collect();
        let d: BTreeSet<WeightedEdge<W>> = deleted
            .iter()
            .filter(|e| self.forest.get(e.pair()) == Some(**e))
            .copied()
            .collect();
        let d_pairs: Vec<Pair> = d.iter().map(|e| e.pair()).collect();
        self.forest.delete_batch(&d_pairs).expect("tree edges present");
        for i in 0..self.locals.len() {
            for e in &d {
                if !self.bi[i].remove(e) {
                    self.bd[i].insert(*e);
                }
            }
        }
        let run = |locals: &mut Vec<Local<W>>| -> Vec<Vec<WeightedEdge<W>>> {
            locals.par_iter_mut().map(|local| local.delete(&deleted)).collect()
        };
        let found = match &self.pool {
            Some(pool) => pool.install(|| run(&mut self.locals)),
            None => run(&mut self.locals),
        };
        let replacements: BTreeSet<WeightedEdge<W>> = found
            .into_iter()
            .flatten()
            .filter(|e| self.graph.get(&e.pair()) == Some(e) && !self.forest.contains(e.pair()))
            .collect();
        if !replacements.is_empty() {
            self.insert_present(replacements);
        }
        Ok(())
    }

    /// Insertion step for edges already recorded in the graph and absent
    /// from `F`.
    fn insert_present(&mut self, u: BTreeSet<WeightedEdge<W>>) {
        if u.is_empty() {
            return;
        }
        let marked: BTreeSet<VertexId> = u.iter().flat_map(|e| [e.u, e.v]).collect();
        let cpt = self.forest.compressed_path_tree(&marked);
        let mut candidates: Vec<(WeightedEdge<W>, Option<usize>)> =
            cpt.edges.iter().enumerate().map(|(i, c)| (c.heaviest, Some(i))).collect();
        candidates.extend(u.iter().map(|&e| (e, None)));
        candidates.sort();
        let mut uf = UnionFind::new(self.n);
        let mut d = BTreeSet::new();
        let mut ins = BTreeSet::new();
        for (key, source) in candidates {
            let (a, b) = match source {
                Some(i) => cpt.edges[i].pair(),
                None => key.pair(),
            };
            let joined = uf.union(a, b);
            match (source, joined) {
                (Some(_), false) => {
                    d.insert(key);
                }
                (None, true) => {
                    ins.insert(key);
                }
                _ => {}
            }
        }
        let d_pairs: Vec<Pair> = d.iter().map(|e| e.pair()).collect();
        self.forest.delete_batch(&d_pairs).expect("tree edges present");
        let ins_list: Vec<_> = ins.iter().copied().collect();
        self.forest.insert_batch(&ins_list).expect("minimum spanning forest");
        for i in 0..self.locals.len() {
            let bd_add: Vec<_> = d.difference(&self.bi[i]).copied().collect();
            self.bd[i].extend(bd_add);
            for e in &d {
                self.bi[i].remove(e);
            }
            self.bi[i].extend(ins.iter().copied());
        }
        let mut rest: BTreeSet<WeightedEdge<W>> = d;
        rest.extend(u.difference(&ins).copied());
        self.update(rest);
    }

    /// Re-files the given non-tree edges, together with whatever the smaller
    /// structures held, into the first structure with room for all of them.
    fn update(&mut self, mut u: BTreeSet<WeightedEdge<W>>) {
        for i in 0..self.locals.len() {
            let absorbed = self.locals[i].nontree_originals();
            u.extend(
                absorbed
                    .into_iter()
                    .filter(|e| !self.forest.contains(e.pair()) && self.graph.get(&e.pair()) == Some(e)),
            );
            self.locals[i] = Local::empty();
            if u.len() <= 1usize << i {
                let drop: Vec<Pair> = self.bd[i]
                    .iter()
                    .filter(|e| self.syncs[i].get(e.pair()) == Some(**e))
                    .map(|e| e.pair())
                    .collect();
                self.syncs[i].delete_batch(&drop).expect("buffered deletions");
                let add: Vec<_> = self.bi[i].iter().copied().collect();
                self.syncs[i].insert_batch(&add).expect("buffered insertions");
                self.bd[i].clear();
                self.bi[i].clear();
                self.rebuilds += 1;
                let seed = self.seed ^ (self.rebuilds << 20) ^ i as u64;
                self.locals[i] = Local::build(&self.syncs[i], &u, seed);
                return;
            }
        }
        unreachable!("the last structure has room for every edge");
    }

    pub fn local_view(&self, i: usize) -> Option<LocalView<W>> {
        let local = self.locals.get(i)?;
        let ls = local.ls.as_ref()?;
        let mut view = LocalView {
            compressed: Vec::new(),
            tree_originals: Vec::new(),
            nontree: local.nontree_originals(),
        };
        for (id, _) in ls.tree_edges() {
            match &local.kinds[id] {
                LocalEdge::Compressed(c) => {
                    let c = &local.cpt.as_ref().unwrap().edges[*c];
                    view.compressed.push((c.u, c.v, c.heaviest));
                }
                LocalEdge::Original(e) => view.tree_originals.push(*e),
            }
        }
        view.compressed.sort();
        view.tree_originals.sort();
        Some(view)
    }

    /// `(B_D[i], B_I[i])`.
    pub fn buffers(&self, i: usize) -> (&BTreeSet<WeightedEdge<W>>, &BTreeSet<WeightedEdge<W>>) {
        (&self.bd[i], &self.bi[i])
    }

    pub fn sync_tree(&self, i: usize) -> &PathForest<W> {
        &self.syncs[i]
    }

    /// Checks every structural invariant; one line per violation.
    pub fn audit(&self) -> Vec<String> {
        let mut out = Vec::new();
        let current: Vec<_> = self.graph.values().copied().collect();
        let expected = kruskal(self.n, &current);
        if self.forest.edges() != expected {
            out.push("forest: F differs from the minimum spanning forest".to_string());
        }
        let f: BTreeSet<WeightedEdge<W>> = expected.iter().copied().collect();
        let mut resident = BTreeSet::new();
        let log_m = if self.max_m <= 1 { 0 } else { log2_ceil(self.max_m) as usize };
        for (i, local) in self.locals.iter().enumerate() {
            if local.nontree_count() > 1usize << i {
                out.push(format!("edge count: A_{i} holds {} non-tree edges", local.nontree_count()));
            }
            if i > log_m && local.ls.as_ref().is_some_and(|ls| ls.edge_count() > 0) {
                out.push(format!("space: A_{i} is occupied above log m = {log_m}"));
            }
            resident.extend(local.nontree_originals());
            if let Some(ls) = &local.ls {
                for line in ls.audit() {
                    out.push(format!("A_{i}: {line}"));
                }
                for (id, kind) in local.kinds.iter().enumerate() {
                    if let (Some(r), LocalEdge::Original(e)) = (ls.record(id), kind) {
                        let (a, b) = (local.verts[r.edge.u], local.verts[r.edge.v]);
                        if pair(a, b) != e.pair() {
                            out.push(format!("A_{i}: local edge {id} maps to the wrong endpoints"));
                        }
                    }
                }
            }
            let synced: BTreeSet<WeightedEdge<W>> = self.syncs[i]
                .edges()
                .into_iter()
                .filter(|e| !self.bd[i].contains(e))
                .chain(self.bi[i].iter().copied())
                .collect();
            if synced != f {
                out.push(format!("buffers: (T_{i} \\ B_D) ∪ B_I differs from F"));
            }
        }
        for e in current.iter().filter(|e| !f.contains(e)) {
            if !resident.contains(e) {
                out.push(format!("residency: non-tree edge {} {} {:?} is in no A_i", e.u, e.v, e.w));
            }
        }
        out
    }
}

impl<W: EdgeWeight + fmt::Display> DynamicMsf<W> {
    /// SHA-256 of the sorted `u v w` lines of the current forest, in hex.
    pub fn checksum(&self) -> String {
        msf_checksum(&self.forest.edges())
    }
}

impl<W: EdgeWeight + Copy + Into<i128>> DynamicMsf<W> {
    pub fn msf_weight(&self) -> i128 {
        self.forest.edges().iter().map(|e| e.w.into()).sum()
    }
}

/// SHA-256 of `u v w` lines for edges sorted by the edge order, in hex.
pub fn msf_checksum<W: EdgeWeight + fmt::Display>(edges: &[WeightedEdge<W>]) -> String {
    let mut sorted = edges.to_vec();
    sorted.sort();
    let mut hasher = Sha256::new();
    for e in &sorted {
        hasher.update(format!("{e}\n").as_bytes());
    }
    hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const U: usize = 0;
    const V: usize = 1;
    const X: usize = 2;
    const Y: usize = 3;

    fn e(a: usize, b: usize, w: i64) -> WeightedEdge<i64> {
        WeightedEdge::new(a, b, w)
    }

    fn set(es: &[WeightedEdge<i64>]) -> BTreeSet<WeightedEdge<i64>> {
        es.iter().copied().collect()
    }

    #[test]
    fn worked_example() {
        let mut d = DynamicMsf::new(4);
        assert!(d.msf_edges().is_empty());
        assert!(d.audit().is_empty());

        d.batch_insert(&[e(U, V, 4), e(U, X, 2), e(V, Y, 3), e(U, Y, 5), e(V, X, 6)])
            .unwrap();
        assert_eq!(set(&d.msf_edges()), set(&[e(U, V, 4), e(U, X, 2), e(V, Y, 3)]));
        assert!(d.local_view(0).is_none());
        assert_eq!(d.local_view(1).unwrap().nontree, vec![e(U, Y, 5), e(V, X, 6)]);
        assert_eq!(d.buffers(0).1, &set(&[e(U, V, 4), e(U, X, 2), e(V, Y, 3)]));
        assert!(d.audit().is_empty(), "{:?}", d.audit());

        d.batch_insert(&[e(X, Y, 1)]).unwrap();
        assert_eq!(set(&d.msf_edges()), set(&[e(U, X, 2), e(V, Y, 3), e(X, Y, 1)]));
        let a0 = d.local_view(0).unwrap();
        assert_eq!(a0.compressed, vec![(U, V, e(V, Y, 3))]);
        assert_eq!(a0.nontree, vec![e(U, V, 4)]);
        assert_eq!(d.buffers(1).0, &set(&[e(U, V, 4)]));
        assert_eq!(d.buffers(1).1, &set(&[e(X, Y, 1)]));
        assert!(d.audit().is_empty(), "{:?}", d.audit());

        d.batch_delete(&[(U, X), (V, Y)]).unwrap();
        assert_eq!(set(&d.msf_edges()), set(&[e(X, Y, 1), e(U, V, 4), e(U, Y, 5)]));
        assert_eq!(d.msf_weight(), 10);
        let a0 = d.local_view(0).unwrap();
        assert_eq!(a0.nontree, vec![e(V, X, 6)]);
        assert!(d.audit().is_empty(), "{:?}", d.audit());
    }

    #[test]
    fn single_edge_and_errors() {
        let mut d = DynamicMsf::new(3);
        d.batch_insert(&[e(0, 1, 5)]).unwrap();
        assert_eq!(d.msf_edges(), vec![e(0, 1, 5)]);
        assert!((0..d.num_local_structures()).all(|i| d.local_view(i).is_none()));
        assert_eq!(d.batch_insert(&[e(1, 0, 2)]), Err(BatchError::EdgeAlreadyPresent(0, 1)));
        assert_eq!(d.batch_insert(&[e(2, 2, 2)]), Err(BatchError::SelfLoop(2)));
        assert_eq!(d.batch_delete(&[(1, 2)]), Err(BatchError::EdgeAbsent(1, 2)));
        d.batch_delete(&[(0, 1)]).unwrap();
        assert!(d.msf_edges().is_empty());
        assert!(d.audit().is_empty());
    }

    #[test]
    fn one_vertex() {
        let d: DynamicMsf = DynamicMsf::new(1);
        assert!(d.msf_edges().is_empty());
        assert!(d.audit().is_empty());
        assert_eq!(d.checksum(), msf_checksum::<i64>(&[]));
    }
}
