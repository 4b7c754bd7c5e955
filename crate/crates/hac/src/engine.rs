//! Sequential graph HAC with exact similarities.
//!
//! Every adjacent cluster pair is stored once, in the ordered set of one of
//! its endpoints (the owner, picked by degree when the pair is created). The
//! owner orders its pairs by `agg / |other|` for size-scaled linkages, so a
//! change in the owner's own size never reorders its set; only the owner's
//! entry in the global order moves. When a cluster grows, the pairs it does
//! not own are rekeyed through its `foreign` list.

use std::cmp::Reverse;
use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeSet, HashMap, HashSet};
use std::hash::BuildHasherDefault;

use dynmsf::graph::{pair, Graph, VertexId};
use thiserror::Error;

use crate::dendrogram::Dendrogram;
use crate::linkage::Linkage;
use crate::policy::MergePolicy;
use crate::rational::{int, Rational};

type Fixed = BuildHasherDefault<DefaultHasher>;
type Map<K, V> = HashMap<K, V, Fixed>;
type Set<K> = HashSet<K, Fixed>;

/// How many eligible owners, and pairs per owner, a policy is offered.
pub const WINDOW: usize = 32;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("self-loop at vertex {0}")]
    SelfLoop(VertexId),
    #[error("vertex {v} out of range for n = {n}")]
    VertexOutOfRange { v: VertexId, n: usize },
    #[error("duplicate edge {{{0},{1}}}")]
    Duplicate(VertexId, VertexId),
}

/// A simple undirected graph with rational similarities.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HacGraph {
    n: usize,
    edges: Vec<(VertexId, VertexId, Rational)>,
}

impl HacGraph {
    pub fn new(
        n: usize,
        edges: impl IntoIterator<Item = (VertexId, VertexId, Rational)>,
    ) -> Result<Self, GraphError> {
        let mut out = Vec::new();
        let mut seen = Set::default();
        for (u, v, w) in edges {
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            for x in [u, v] {
                if x >= n {
                    return Err(GraphError::VertexOutOfRange { v: x, n });
                }
            }
            let (u, v) = pair(u, v);
            if !seen.insert((u, v)) {
                return Err(GraphError::Duplicate(u, v));
            }
            out.push((u, v, w));
        }
        out.sort_by_key(|e| (e.0, e.1));
        Ok(HacGraph { n, edges: out })
    }

    /// Reads integer weights of a core graph file as similarities.
    pub fn from_graph(g: &Graph) -> Result<Self, GraphError> {
        HacGraph::new(g.n, g.edges.iter().map(|e| (e.u, e.v, int(e.w))))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(VertexId, VertexId, Rational)] {
        &self.edges
    }

    pub fn with_edge(&self, u: VertexId, v: VertexId, w: Rational) -> Result<Self, GraphError> {
        HacGraph::new(self.n, self.edges.iter().cloned().chain([(u, v, w)]))
    }
}

#[derive(Clone, Debug)]
struct PairRec {
    ends: (usize, usize),
    agg: Rational,
    owner: usize,
    key: Rational,
    other_label: usize,
}

impl PairRec {
    fn other(&self) -> usize {
        if self.ends.0 == self.owner {
            self.ends.1
        } else {
            self.ends.0
        }
    }
}

type OwnedKey = (Reverse<Rational>, usize, usize);
type GlobalKey = (Reverse<Rational>, (usize, usize), usize);

#[derive(Clone, Debug)]
struct Cluster {
    size: usize,
    label: usize,
    node: usize,
    alive: bool,
    nbrs: Map<usize, usize>,
    owned: BTreeSet<OwnedKey>,
    foreign: Set<usize>,
    entry: Option<GlobalKey>,
    members: Vec<VertexId>,
}

/// A merge performed by [`Engine::step`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Merged {
    /// Cluster ids (smallest member) of the two merged clusters, smaller first.
    pub labels: (usize, usize),
    pub similarity: Rational,
    /// Maximum similarity over all pairs just before the merge.
    pub best: Rational,
}

pub struct Engine<'a> {
    linkage: &'a dyn Linkage,
    n: usize,
    clusters: Vec<Cluster>,
    pairs: Vec<Option<PairRec>>,
    free: Vec<usize>,
    global: BTreeSet<GlobalKey>,
    merges: Vec<(usize, usize, Rational)>,
}

impl<'a> Engine<'a> {
    pub fn new(graph: &HacGraph, linkage: &'a dyn Linkage) -> Self {
        let n = graph.n;
        let mut degree = vec![0usize; n];
        for &(u, v, _) in &graph.edges {
            degree[u] += 1;
            degree[v] += 1;
        }
        let clusters = (0..n)
            .map(|v| Cluster {
                size: 1,
                label: v,
                node: v,
                alive: true,
                nbrs: Map::default(),
                owned: BTreeSet::new(),
                foreign: Set::default(),
                entry: None,
                members: vec![v],
            })
            .collect();
        let mut e = Engine {
            linkage,
            n,
            clusters,
            pairs: Vec::with_capacity(graph.edges.len()),
            free: Vec::new(),
            global: BTreeSet::new(),
            merges: Vec::new(),
        };
        for (u, v, w) in &graph.edges {
            let owner = if (degree[*u], Reverse(*u)) >= (degree[*v], Reverse(*v)) { *u } else { *v };
            e.attach(*u, *v, w.clone(), owner);
        }
        for o in 0..n {
            e.refresh(o);
        }
        e
    }

    fn key_for(&self, other: usize, agg: &Rational) -> Rational {
        if self.linkage.size_scaled() {
            agg / int(self.clusters[other].size as i64)
        } else {
            agg.clone()
        }
    }

    fn attach(&mut self, a: usize, b: usize, agg: Rational, owner: usize) -> usize {
        let other = if owner == a { b } else { a };
        let rec = PairRec {
            ends: (a, b),
            key: self.key_for(other, &agg),
            other_label: self.clusters[other].label,
            agg,
            owner,
        };
        let id = match self.free.pop() {
            Some(id) => id,
            None => {
                self.pairs.push(None);
                self.pairs.len() - 1
            }
        };
        self.clusters[owner].owned.insert((Reverse(rec.key.clone()), rec.other_label, id));
        self.clusters[a].nbrs.insert(b, id);
        self.clusters[b].nbrs.insert(a, id);
        self.clusters[other].foreign.insert(owner);
        self.pairs[id] = Some(rec);
        id
    }

    fn detach(&mut self, id: usize) -> PairRec {
        let rec = self.pairs[id].take().expect("live pair");
        let other = rec.other();
        self.clusters[rec.owner]
            .owned
            .remove(&(Reverse(rec.key.clone()), rec.other_label, id));
        self.clusters[rec.ends.0].nbrs.remove(&rec.ends.1);
        self.clusters[rec.ends.1].nbrs.remove(&rec.ends.0);
        self.clusters[other].foreign.remove(&rec.owner);
        self.free.push(id);
        rec
    }

    /// Recomputes the owner-side key of a pair, optionally with a new aggregate.
    fn rekey(&mut self, id: usize, agg: Option<Rational>) -> usize {
        let mut rec = self.pairs[id].take().expect("live pair");
        let owner = rec.owner;
        self.clusters[owner]
            .owned
            .remove(&(Reverse(rec.key.clone()), rec.other_label, id));
        if let Some(agg) = agg {
            rec.agg = agg;
        }
        let other = rec.other();
        rec.key = self.key_for(other, &rec.agg);
        rec.other_label = self.clusters[other].label;
        self.clusters[owner]
            .owned
            .insert((Reverse(rec.key.clone()), rec.other_label, id));
        self.pairs[id] = Some(rec);
        owner
    }

    fn value_of(&self, owner: usize, key: &Rational) -> Rational {
        if self.linkage.size_scaled() {
            key / int(self.clusters[owner].size as i64)
        } else {
            key.clone()
        }
    }

    fn refresh(&mut self, o: usize) {
        if let Some(old) = self.clusters[o].entry.take() {
            self.global.remove(&old);
        }
        let c = &self.clusters[o];
        if !c.alive {
            return;
        }
        if let Some((Reverse(key), other_label, _)) = c.owned.first() {
            let labels = (c.label.min(*other_label), c.label.max(*other_label));
            let entry = (Reverse(self.value_of(o, key)), labels, o);
            self.global.insert(entry.clone());
            self.clusters[o].entry = Some(entry);
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_clusters(&self) -> usize {
        self.n - self.merges.len()
    }

    /// `W_max`, or `None` when no two clusters are adjacent.
    pub fn max_similarity(&self) -> Option<&Rational> {
        self.global.first().map(|(Reverse(v), _, _)| v)
    }

    /// Current clusters as sorted member lists, ordered by smallest member.
    pub fn clusters(&self) -> Vec<Vec<VertexId>> {
        let mut out: Vec<Vec<VertexId>> = self
            .clusters
            .iter()
            .filter(|c| c.alive)
            .map(|c| {
                let mut m = c.members.clone();
                m.sort_unstable();
                m
            })
            .collect();
        out.sort();
        out
    }

    /// Every adjacent cluster pair as `((id, id), similarity)`, sorted by ids.
    pub fn similarities(&self) -> Vec<((usize, usize), Rational)> {
        let mut out: Vec<_> = self
            .pairs
            .iter()
            .flatten()
            .map(|p| {
                let (a, b) = (&self.clusters[p.ends.0], &self.clusters[p.ends.1]);
                let sim = self.linkage.similarity(&p.agg, a.size, b.size);
                ((a.label.min(b.label), a.label.max(b.label)), sim)
            })
            .collect();
        out.sort();
        out
    }

    /// Performs one merge chosen by `policy`; `None` once no pair is adjacent.
    pub fn step(&mut self, policy: &mut dyn MergePolicy) -> Option<Merged> {
        let best = self.max_similarity()?.clone();
        let threshold = &best / policy.lambda();
        let owners: Vec<usize> = self
            .global
            .iter()
            .take_while(|(Reverse(v), _, _)| *v >= threshold)
            .take(WINDOW)
            .map(|e| e.2)
            .collect();
        let o = owners[policy.pick(owners.len())];
        let scaled_threshold = if self.linkage.size_scaled() {
            &threshold * int(self.clusters[o].size as i64)
        } else {
            threshold
        };
        let ids: Vec<usize> = self.clusters[o]
            .owned
            .iter()
            .take_while(|(Reverse(k), _, _)| *k >= scaled_threshold)
            .take(WINDOW)
            .map(|e| e.2)
            .collect();
        let id = ids[policy.pick(ids.len())];
        let rec = self.pairs[id].as_ref().expect("live pair");
        let similarity = self.value_of(o, &rec.key);
        let (a, b) = rec.ends;
        let labels = {
            let (x, y) = (self.clusters[a].label, self.clusters[b].label);
            (x.min(y), x.max(y))
        };
        self.merge(a, b, similarity.clone());
        Some(Merged {
            labels,
            similarity,
            best,
        })
    }

    fn rank(&self, s: usize) -> (usize, Reverse<usize>) {
        (self.clusters[s].nbrs.len(), Reverse(s))
    }

    fn merge(&mut self, a: usize, b: usize, similarity: Rational) {
        let (k, g) = if self.rank(a) >= self.rank(b) { (a, b) } else { (b, a) };
        let mut dirty = vec![k, g];
        let id = self.clusters[k].nbrs[&g];
        self.detach(id);
        let mut gone: Vec<(usize, usize)> = self.clusters[g].nbrs.iter().map(|(&c, &id)| (c, id)).collect();
        gone.sort_unstable();
        for (c, id) in gone {
            let rec = self.detach(id);
            dirty.push(rec.owner);
            match self.clusters[k].nbrs.get(&c).copied() {
                Some(kid) => {
                    let agg = {
                        let kept = &self.pairs[kid].as_ref().expect("live pair").agg;
                        self.linkage.fold(Some(kept), Some(&rec.agg))
                    };
                    dirty.push(self.rekey(kid, Some(agg)));
                }
                None => {
                    let agg = self.linkage.fold(None, Some(&rec.agg));
                    let owner = if self.rank(k) >= self.rank(c) { k } else { c };
                    self.attach(k, c, agg, owner);
                    dirty.push(owner);
                }
            }
        }
        let node = self.n + self.merges.len();
        self.merges
            .push((self.clusters[k].node, self.clusters[g].node, similarity));
        let moved = std::mem::take(&mut self.clusters[g].members);
        let (g_size, g_label) = (self.clusters[g].size, self.clusters[g].label);
        self.clusters[g].alive = false;
        let keeper = &mut self.clusters[k];
        keeper.members.extend(moved);
        keeper.size += g_size;
        keeper.node = node;
        let relabel = g_label < keeper.label;
        keeper.label = keeper.label.min(g_label);
        if relabel || self.linkage.size_scaled() {
            let mut owners: Vec<usize> = self.clusters[k].foreign.iter().copied().collect();
            owners.sort_unstable();
            for c in owners {
                let id = self.clusters[c].nbrs[&k];
                dirty.push(self.rekey(id, None));
            }
        }
        dirty.sort_unstable();
        dirty.dedup();
        for o in dirty {
            self.refresh(o);
        }
    }

    /// Runs until `W_max < theta` or no pair is adjacent and returns the clusters.
    pub fn run_to_threshold(&mut self, theta: &Rational, policy: &mut dyn MergePolicy) -> Vec<Vec<VertexId>> {
        while self.max_similarity().is_some_and(|w| w >= theta) {
            self.step(policy);
        }
        self.clusters()
    }

    pub fn dendrogram(&self) -> Dendrogram {
        Dendrogram::new(self.n, self.merges.clone()).expect("engine merges form a forest")
    }
}

/// Full agglomeration together with the clusters at `theta`.
#[derive(Clone, Debug)]
pub struct HacRun {
    pub dendrogram: Dendrogram,
    pub clusters: Vec<Vec<VertexId>>,
}

pub fn run_hac(
    graph: &HacGraph,
    linkage: &dyn Linkage,
    theta: &Rational,
    policy: &mut dyn MergePolicy,
) -> HacRun {
    let mut e = Engine::new(graph, linkage);
    let clusters = e.run_to_threshold(theta, policy);
    while e.step(policy).is_some() {}
    HacRun {
        dendrogram: e.dendrogram(),
        clusters,
    }
}

/// Clusters at `theta` without finishing the agglomeration.
pub fn clusters_at(
    graph: &HacGraph,
    linkage: &dyn Linkage,
    theta: &Rational,
    policy: &mut dyn MergePolicy,
) -> Vec<Vec<VertexId>> {
    Engine::new(graph, linkage).run_to_threshold(theta, policy)
}
