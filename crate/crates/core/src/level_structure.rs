//! Batch-decremental minimum spanning forests (and connectivity) on a level
//! hierarchy `F_1 ⊆ … ⊆ F_L` of Euler-tour forests.
//!
//! Every edge has a level in `1..=L`. A tree edge of level `ℓ` belongs to
//! `F_ℓ, …, F_L`; a non-tree edge of level `ℓ` is filed at both endpoints in
//! `F_ℓ`. Components of `F_i` never exceed `2^i` vertices, and deletions look
//! for replacements level by level, pushing the edges they rule out one level
//! down so that each edge pays for at most `L - 1` failed inspections.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use thiserror::Error;

use crate::euler_forest::{log2_ceil, EulerForest};
use crate::graph::{pair, EdgeWeight, Pair, VertexId, WeightedEdge};
use crate::oracle::UnionFind;

pub type EdgeId = usize;

type Entry<W> = (WeightedEdge<W>, EdgeId);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Connectivity,
    Msf,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LevelError {
    #[error("edge {0} is absent")]
    EdgeAbsent(EdgeId),
    #[error("edge {0} appears twice in one batch")]
    DuplicateInBatch(EdgeId),
    #[error("no edge joins {0} and {1}")]
    PairAbsent(VertexId, VertexId),
    #[error("several edges join {0} and {1}")]
    AmbiguousPair(VertexId, VertexId),
    #[error("operation needs minimum-spanning-forest mode")]
    WrongMode,
    #[error("self-loop at vertex {0}")]
    SelfLoop(VertexId),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeRecord<W> {
    pub edge: WeightedEdge<W>,
    pub level: usize,
    pub tree: bool,
    pub pushes: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReplacementReport<W> {
    /// Former non-tree edges promoted into the top forest, in edge order.
    pub replacements: Vec<(EdgeId, WeightedEdge<W>)>,
    /// Endpoint pairs of deleted tree edges whose sides stayed apart, one per
    /// pair of resulting components.
    pub still_split: Vec<Pair>,
}

#[derive(Clone, Debug)]
pub struct LevelStructure<W> {
    n: usize,
    top: usize,
    mode: Mode,
    forests: Vec<EulerForest<Entry<W>>>,
    records: Vec<Option<EdgeRecord<W>>>,
    by_pair: HashMap<Pair, Vec<EdgeId>>,
    live: usize,
}

impl<W: EdgeWeight> LevelStructure<W> {
    /// Builds the structure with edge ids equal to positions in `edges`.
    pub fn init(n: usize, edges: &[WeightedEdge<W>], mode: Mode, seed: u64) -> Result<Self, LevelError> {
        let top = log2_ceil(n.max(1)) as usize;
        let mut s = LevelStructure {
            n,
            top,
            mode,
            forests: (1..=top).map(|i| EulerForest::new(n.max(1), i, seed)).collect(),
            records: Vec::with_capacity(edges.len()),
            by_pair: HashMap::new(),
            live: edges.len(),
        };
        for (id, e) in edges.iter().enumerate() {
            if e.u == e.v {
                return Err(LevelError::SelfLoop(e.u));
            }
            s.records.push(Some(EdgeRecord {
                edge: *e,
                level: top,
                tree: false,
                pushes: 0,
            }));
            s.by_pair.entry(e.pair()).or_default().push(id);
        }
        let mut order: Vec<EdgeId> = (0..edges.len()).collect();
        order.sort_by_key(|&id| (edges[id], id));
        let mut uf = UnionFind::new(n.max(1));
        let mut links = Vec::new();
        let mut filed = Vec::new();
        for id in order {
            let e = edges[id];
            if uf.union(e.u, e.v) {
                s.records[id].as_mut().unwrap().tree = true;
                links.push((e.u, e.v));
            } else {
                filed.push((e.u, (e, id)));
                filed.push((e.v, (e, id)));
            }
        }
        let f = s.forest_mut(top);
        f.link_batch(&links).expect("spanning forest");
        f.update_nontree_batch(&filed, &[]).expect("fresh entries");
        Ok(s)
    }

    /// Minimum-spanning-forest mode with a fixed seed.
    pub fn init_simple(n: usize, edges: &[WeightedEdge<W>]) -> Self {
        Self::init(n, edges, Mode::Msf, 0).expect("simple graph")
    }

    fn forest(&self, i: usize) -> &EulerForest<Entry<W>> {
        &self.forests[i - 1]
    }

    fn forest_mut(&mut self, i: usize) -> &mut EulerForest<Entry<W>> {
        &mut self.forests[i - 1]
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_levels(&self) -> usize {
        self.top
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn edge_count(&self) -> usize {
        self.live
    }

    pub fn record(&self, id: EdgeId) -> Option<&EdgeRecord<W>> {
        self.records.get(id).and_then(|r| r.as_ref())
    }

    pub fn ids_for(&self, u: VertexId, v: VertexId) -> &[EdgeId] {
        self.by_pair.get(&pair(u, v)).map_or(&[], |ids| ids.as_slice())
    }

    pub fn connected(&self, u: VertexId, v: VertexId) -> bool {
        self.forest(self.top).connected(u, v)
    }

    /// Tree edges of the top forest, in edge order, in either mode.
    pub fn tree_edges(&self) -> Vec<(EdgeId, WeightedEdge<W>)> {
        self.live_edges(true)
    }

    pub fn nontree_edges(&self) -> Vec<(EdgeId, WeightedEdge<W>)> {
        self.live_edges(false)
    }

    fn live_edges(&self, tree: bool) -> Vec<(EdgeId, WeightedEdge<W>)> {
        let mut out: Vec<_> = self
            .records
            .iter()
            .enumerate()
            .filter_map(|(id, r)| r.as_ref().filter(|r| r.tree == tree).map(|r| (id, r.edge)))
            .collect();
        out.sort_by_key(|&(id, e)| (e, id));
        out
    }

    pub fn msf(&self) -> Result<Vec<WeightedEdge<W>>, LevelError> {
        if self.mode != Mode::Msf {
            return Err(LevelError::WrongMode);
        }
        Ok(self.tree_edges().into_iter().map(|(_, e)| e).collect())
    }

    pub fn max_pushes(&self) -> usize {
        self.records.iter().flatten().map(|r| r.pushes).max().unwrap_or(0)
    }

    /// Deletes by endpoint pair; each pair must name exactly one edge.
    pub fn delete_pairs(&mut self, pairs: &[Pair]) -> Result<ReplacementReport<W>, LevelError> {
        let mut ids = Vec::with_capacity(pairs.len());
        for &(u, v) in pairs {
            match self.ids_for(u, v) {
                [] => return Err(LevelError::PairAbsent(u, v)),
                [id] => ids.push(*id),
                _ => return Err(LevelError::AmbiguousPair(u, v)),
            }
        }
        self.delete_batch(&ids)
    }

    pub fn delete_batch(&mut self, ids: &[EdgeId]) -> Result<ReplacementReport<W>, LevelError> {
        let mut seen = BTreeSet::new();
        for &id in ids {
            if self.record(id).is_none() {
                return Err(LevelError::EdgeAbsent(id));
            }
            if !seen.insert(id) {
                return Err(LevelError::DuplicateInBatch(id));
            }
        }
        let mut cut: Vec<EdgeRecord<W>> = Vec::new();
        let mut unfiled: BTreeMap<usize, Vec<(VertexId, Entry<W>)>> = BTreeMap::new();
        for &id in ids {
            let rec = self.records[id].take().unwrap();
            let ids = self.by_pair.get_mut(&rec.edge.pair()).unwrap();
            ids.retain(|&x| x != id);
            if ids.is_empty() {
                self.by_pair.remove(&rec.edge.pair());
            }
            self.live -= 1;
            if rec.tree {
                cut.push(rec);
            } else {
                let list = unfiled.entry(rec.level).or_default();
                list.push((rec.edge.u, (rec.edge, id)));
                list.push((rec.edge.v, (rec.edge, id)));
            }
        }
        for (level, entries) in unfiled {
            self.forest_mut(level)
                .update_nontree_batch(&[], &entries)
                .expect("filed entries");
        }
        for j in 1..=self.top {
            let pairs: Vec<Pair> = cut
                .iter()
                .filter(|r| r.level <= j)
                .map(|r| r.edge.pair())
                .collect();
            if !pairs.is_empty() {
                self.forest_mut(j).cut_batch(&pairs).expect("nested tree edges");
            }
        }
        let mut replacements = Vec::new();
        if let Some(lowest) = cut.iter().map(|r| r.level).min() {
            for i in lowest..=self.top {
                if self.all_rejoined(&cut) {
                    break;
                }
                self.search_level(i, &cut, &mut replacements);
            }
        }
        replacements.sort_by_key(|&(id, e)| (e, id));
        let top = self.forest(self.top);
        let mut split_seen = BTreeSet::new();
        let still_split = cut
            .iter()
            .filter(|r| !top.connected(r.edge.u, r.edge.v))
            .filter(|r| {
                let (a, b) = (top.representative(r.edge.u), top.representative(r.edge.v));
                split_seen.insert((a.min(b), a.max(b)))
            })
            .map(|r| r.edge.pair())
            .collect();
        Ok(ReplacementReport {
            replacements,
            still_split,
        })
    }

    fn all_rejoined(&self, cut: &[EdgeRecord<W>]) -> bool {
        let top = self.forest(self.top);
        cut.iter().all(|r| top.connected(r.edge.u, r.edge.v))
    }

    fn tree_id(&self, p: Pair) -> EdgeId {
        *self.by_pair[&p]
            .iter()
            .find(|&&id| self.records[id].as_ref().is_some_and(|r| r.tree))
            .expect("tree edge on record")
    }

    /// Rounds of replacement search at level `i` until no component is active.
    fn search_level(&mut self, i: usize, cut: &[EdgeRecord<W>], found_all: &mut Vec<(EdgeId, WeightedEdge<W>)>) {
        let limit = 1usize << (i - 1);
        loop {
            let f = self.forest(i);
            let mut active: BTreeMap<usize, VertexId> = BTreeMap::new();
            for r in cut.iter().filter(|r| r.level <= i) {
                for x in [r.edge.u, r.edge.v] {
                    let rep = f.representative(x);
                    if active.contains_key(&rep) {
                        continue;
                    }
                    if f.component_size(x) <= limit && f.component_nontree_count(x) > 0 {
                        active.insert(rep, x);
                    }
                }
            }
            if active.is_empty() {
                return;
            }

            let mut tree_push = Vec::new();
            for &x in active.values() {
                for p in f.component_tree_edges(x) {
                    let id = self.tree_id(p);
                    if self.records[id].as_ref().unwrap().level == i {
                        tree_push.push(id);
                    }
                }
            }
            let mut found: Vec<Entry<W>> = Vec::new();
            let mut push: Vec<EdgeId> = Vec::new();
            for &x in active.values() {
                let (hit, ruled_out) = self.doubling_search(i, x);
                found.extend(hit);
                push.extend(ruled_out);
            }

            if !tree_push.is_empty() {
                assert!(i > 1, "level-1 components have no tree edges");
                let pairs: Vec<Pair> = tree_push.iter().map(|&id| self.edge_of(id).pair()).collect();
                self.forest_mut(i - 1).link_batch(&pairs).expect("pushed tree edges");
                for &id in &tree_push {
                    let r = self.records[id].as_mut().unwrap();
                    r.level = i - 1;
                    r.pushes += 1;
                }
            }
            if !push.is_empty() {
                assert!(i > 1, "level-1 components have no internal edges");
                let entries: Vec<(VertexId, Entry<W>)> = push
                    .iter()
                    .flat_map(|&id| {
                        let e = self.edge_of(id);
                        [(e.u, (e, id)), (e.v, (e, id))]
                    })
                    .collect();
                self.forest_mut(i).update_nontree_batch(&[], &entries).expect("filed entries");
                self.forest_mut(i - 1).update_nontree_batch(&entries, &[]).expect("fresh entries");
                for &id in &push {
                    let r = self.records[id].as_mut().unwrap();
                    r.level = i - 1;
                    r.pushes += 1;
                }
            }

            found.sort();
            found.dedup_by_key(|&mut (_, id)| id);
            let f = self.forest(i);
            let mut index: HashMap<usize, usize> = HashMap::new();
            let mut uf = UnionFind::new(2 * found.len());
            let mut kept = Vec::new();
            for &(e, id) in &found {
                let mut slot = |x: VertexId| {
                    let next = index.len();
                    *index.entry(f.representative(x)).or_insert(next)
                };
                let (a, b) = (slot(e.u), slot(e.v));
                if uf.union(a, b) {
                    kept.push((e, id));
                }
            }
            if kept.is_empty() && push.is_empty() && tree_push.is_empty() {
                return;
            }
            let entries: Vec<(VertexId, Entry<W>)> =
                kept.iter().flat_map(|&(e, id)| [(e.u, (e, id)), (e.v, (e, id))]).collect();
            self.forest_mut(i).update_nontree_batch(&[], &entries).expect("filed entries");
            let pairs: Vec<Pair> = kept.iter().map(|(e, _)| e.pair()).collect();
            for j in i..=self.top {
                self.forest_mut(j).link_batch(&pairs).expect("replacements join distinct trees");
            }
            for &(e, id) in &kept {
                let r = self.records[id].as_mut().unwrap();
                r.tree = true;
                r.level = i;
                found_all.push((id, e));
            }
        }
    }

    fn edge_of(&self, id: EdgeId) -> WeightedEdge<W> {
        self.records[id].as_ref().unwrap().edge
    }

    /// Looks at `1, 2, 4, …` lightest level-`i` entries of `x`'s component
    /// until one leaves the component. Returns that edge (if any) and the
    /// internal edges seen on earlier phases.
    fn doubling_search(&self, i: usize, x: VertexId) -> (Option<Entry<W>>, Vec<EdgeId>) {
        let f = self.forest(i);
        let total = f.component_nontree_count(x);
        let mut ruled_out = BTreeSet::new();
        let mut k = 1;
        loop {
            let batch = f.k_lightest(x, k);
            let complete = batch.len() as u64 >= total;
            let mut phase = Vec::new();
            for &(e, id) in &batch {
                if !f.connected(e.u, e.v) {
                    return (Some((e, id)), ruled_out.into_iter().collect());
                }
                phase.push(id);
            }
            ruled_out.extend(phase);
            if complete {
                return (None, ruled_out.into_iter().collect());
            }
            k *= 2;
        }
    }

    /// Full structural audit; one line per violation.
    pub fn audit(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (idx, f) in self.forests.iter().enumerate() {
            if let Err(e) = f.check_invariants() {
                out.push(format!("forest F_{}: {e}", idx + 1));
            }
        }
        let live: Vec<(EdgeId, &EdgeRecord<W>)> = self
            .records
            .iter()
            .enumerate()
            .filter_map(|(id, r)| r.as_ref().map(|r| (id, r)))
            .collect();
        for j in 1..=self.top {
            let expected = live.iter().filter(|(_, r)| r.tree && r.level <= j).count();
            if self.forest(j).tree_edge_count() != expected {
                out.push(format!(
                    "nesting: F_{j} has {} tree edges, expected {expected}",
                    self.forest(j).tree_edge_count()
                ));
            }
        }
        for &(id, r) in &live {
            if r.level < 1 || r.level > self.top {
                out.push(format!("edge {id} ({}) has level {}", show(&r.edge), r.level));
            }
            if r.pushes >= self.top.max(1) && r.pushes > 0 {
                out.push(format!("edge {id} ({}) pushed {} times", show(&r.edge), r.pushes));
            }
            if r.tree {
                for j in 1..=self.top {
                    let here = self.forest(j).is_tree_edge(r.edge.u, r.edge.v);
                    if here != (j >= r.level) {
                        out.push(format!("nesting: tree edge {id} ({}) level {} in F_{j}: {here}", show(&r.edge), r.level));
                    }
                }
            }
        }
        for i in 1..=self.top {
            let f = self.forest(i);
            let mut seen = BTreeSet::new();
            for v in 0..self.n {
                if seen.insert(f.representative(v)) && f.component_size(v) > 1usize << i {
                    out.push(format!("size: F_{i} component of {v} has {} vertices", f.component_size(v)));
                }
            }
        }
        let mut expected: Vec<Vec<BTreeSet<Entry<W>>>> = vec![vec![BTreeSet::new(); self.n]; self.top + 1];
        let mut adj: Vec<Vec<(VertexId, Entry<W>, usize)>> = vec![Vec::new(); self.n];
        for &(id, r) in &live {
            if r.tree {
                adj[r.edge.u].push((r.edge.v, (r.edge, id), r.level));
                adj[r.edge.v].push((r.edge.u, (r.edge, id), r.level));
            } else if r.level <= self.top {
                expected[r.level][r.edge.u].insert((r.edge, id));
                expected[r.level][r.edge.v].insert((r.edge, id));
            }
        }
        for (i, per_vertex) in expected.iter().enumerate().take(self.top + 1).skip(1) {
            for (v, want) in per_vertex.iter().enumerate() {
                if self.forest(i).nontree_at(v) != want {
                    out.push(format!("incidence: vertex {v} level {i} non-tree set is stale"));
                }
            }
        }
        for &(id, r) in live.iter().filter(|(_, r)| !r.tree) {
            let e = r.edge;
            if !self.forest(r.level).connected(e.u, e.v) {
                out.push(format!("non-tree edge {id} ({}) endpoints apart in F_{}", show(&e), r.level));
                continue;
            }
            let Some(path) = tree_path(&adj, e.u, e.v) else {
                out.push(format!("non-tree edge {id} ({}) has no tree path", show(&e)));
                continue;
            };
            for (t, level) in path {
                if level > r.level {
                    out.push(format!("cycle: edge {id} ({}) level {} below tree edge {} level {level}", show(&e), r.level, show(&t.0)));
                }
                if self.mode == Mode::Msf && t > (e, id) {
                    out.push(format!("cycle: edge {id} ({}) lighter than tree edge {}", show(&e), show(&t.0)));
                }
            }
        }
        out
    }
}

fn show<W: std::fmt::Debug>(e: &WeightedEdge<W>) -> String {
    format!("{} {} {:?}", e.u, e.v, e.w)
}

fn tree_path<W: EdgeWeight>(
    adj: &[Vec<(VertexId, Entry<W>, usize)>],
    u: VertexId,
    v: VertexId,
) -> Option<Vec<(Entry<W>, usize)>> {
    let mut parent: HashMap<VertexId, (VertexId, Entry<W>, usize)> = HashMap::new();
    let mut queue = VecDeque::from([u]);
    let mut visited = BTreeSet::from([u]);
    while let Some(x) = queue.pop_front() {
        if x == v {
            break;
        }
        for &(y, entry, level) in &adj[x] {
            if visited.insert(y) {
                parent.insert(y, (x, entry, level));
                queue.push_back(y);
            }
        }
    }
    if !visited.contains(&v) {
        return None;
    }
    let mut out = Vec::new();
    let mut x = v;
    while x != u {
        let (p, entry, level) = parent[&x];
        out.push((entry, level));
        x = p;
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::kruskal;

    fn e(u: usize, v: usize, w: i64) -> WeightedEdge<i64> {
        WeightedEdge::new(u, v, w)
    }

    #[test]
    fn empty_graph() {
        let s = LevelStructure::<i64>::init_simple(5, &[]);
        assert_eq!(s.msf().unwrap(), vec![]);
        assert!(!s.connected(0, 4));
        assert!(s.audit().is_empty());
    }

    #[test]
    fn triangle() {
        let es = [e(0, 1, 1), e(1, 2, 2), e(0, 2, 3)];
        let mut s = LevelStructure::init_simple(3, &es);
        assert_eq!(s.msf().unwrap(), vec![es[0], es[1]]);
        assert_eq!(s.nontree_edges(), vec![(2, es[2])]);
        let report = s.delete_pairs(&[(0, 1)]).unwrap();
        assert_eq!(report.replacements, vec![(2, es[2])]);
        assert!(report.still_split.is_empty());
        assert_eq!(s.msf().unwrap(), vec![es[1], es[2]]);
        assert!(s.audit().is_empty(), "{:?}", s.audit());
    }

    #[test]
    fn bridge_leaves_a_split() {
        let mut s = LevelStructure::init_simple(2, &[e(0, 1, 7)]);
        let report = s.delete_pairs(&[(1, 0)]).unwrap();
        assert!(report.replacements.is_empty());
        assert_eq!(report.still_split, vec![(0, 1)]);
        assert!(!s.connected(0, 1));
        assert_eq!(s.delete_pairs(&[(0, 1)]), Err(LevelError::PairAbsent(0, 1)));
        assert_eq!(s.delete_batch(&[0]), Err(LevelError::EdgeAbsent(0)));
    }

    #[test]
    fn connectivity_mode_refuses_msf() {
        let s = LevelStructure::init(3, &[e(0, 1, 1)], Mode::Connectivity, 4).unwrap();
        assert_eq!(s.msf(), Err(LevelError::WrongMode));
        assert!(s.connected(0, 1));
    }

    #[test]
    fn complete_graph_teardown() {
        let n = 12;
        let mut es = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                es.push(e(u, v, ((u * 7 + v * 13) % 10) as i64));
            }
        }
        let mut s = LevelStructure::init_simple(n, &es);
        let mut alive: Vec<WeightedEdge<i64>> = es.clone();
        while !alive.is_empty() {
            let take: Vec<_> = alive.iter().step_by(3).copied().take(5).collect();
            alive.retain(|x| !take.contains(x));
            let pairs: Vec<Pair> = take.iter().map(|x| x.pair()).collect();
            s.delete_pairs(&pairs).unwrap();
            assert_eq!(s.msf().unwrap(), kruskal(n, &alive));
            let problems = s.audit();
            assert!(problems.is_empty(), "{problems:?}");
        }
    }
}
