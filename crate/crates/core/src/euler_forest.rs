//! Dynamic forests stored as Euler tours in circular skip lists.
//!
//! Every vertex contributes a loop element and every tree edge contributes one
//! element per direction. A skip-list node at level `l` covers the level-`l-1`
//! nodes from itself up to (not including) its level-`l` successor, and carries
//! a quantile summary of the non-tree entries attached to the vertices it
//! covers. All structural changes go through [`EulerForest::splice`], which
//! swaps the successors of two elements at every level: applied to two
//! different tours it joins them, applied within one tour it splits it.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::graph::VertexId;
use crate::quantile::QuantileSummary;

const BASE_EPS: f64 = 0.25;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ForestError {
    #[error("linking {{{0},{1}}} would close a cycle")]
    CycleCreated(VertexId, VertexId),
    #[error("{{{0},{1}}} is not a tree edge")]
    NotATreeEdge(VertexId, VertexId),
    #[error("non-tree entry at vertex {0} is absent")]
    EdgeAbsent(VertexId),
    #[error("non-tree entry at vertex {0} is already present")]
    EdgeAlreadyPresent(VertexId),
    #[error("self-loop at vertex {0}")]
    SelfLoop(VertexId),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TourItem {
    Vertex(VertexId),
    Arc(VertexId, VertexId),
}

impl fmt::Display for TourItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TourItem::Vertex(v) => write!(f, "{v}"),
            TourItem::Arc(u, v) => write!(f, "({u},{v})"),
        }
    }
}

#[derive(Clone, Debug)]
struct Aug<T> {
    summary: Option<(QuantileSummary<T>, u32)>,
    vertices: usize,
}

#[derive(Clone, Debug)]
struct Elem<T> {
    item: TourItem,
    next: Vec<usize>,
    prev: Vec<usize>,
    aug: Vec<Aug<T>>,
}

impl<T> Elem<T> {
    fn height(&self) -> usize {
        self.next.len()
    }
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// `⌈log2 n⌉`, and 1 for `n <= 2`.
pub fn log2_ceil(n: usize) -> u32 {
    if n <= 2 {
        1
    } else {
        usize::BITS - (n - 1).leading_zeros()
    }
}

/// Prune parameter for a combine producing accumulated-error counter `t`:
/// `⌈8(log n + t²/log n)⌉`.
pub fn prune_parameter(log_n: u32, t: u32) -> u64 {
    let (l, t) = (log_n as u64, t as u64);
    (8 * (l * l + t * t)).div_ceil(l)
}

#[derive(Clone, Debug)]
pub struct EulerForest<T> {
    level: usize,
    seed: u64,
    log_n: u32,
    cap: usize,
    elems: Vec<Elem<T>>,
    free: Vec<usize>,
    arcs: HashMap<(VertexId, VertexId), usize>,
    nontree: Vec<BTreeSet<T>>,
}

impl<T: Ord + Clone> EulerForest<T> {
    pub fn new(n: usize, level: usize, seed: u64) -> Self {
        assert!(n >= 1, "forest needs at least one vertex");
        let log_n = log2_ceil(n);
        let mut f = EulerForest {
            level,
            seed,
            log_n,
            cap: 4 * log_n as usize,
            elems: Vec::with_capacity(3 * n),
            free: Vec::new(),
            arcs: HashMap::new(),
            nontree: vec![BTreeSet::new(); n],
        };
        for v in 0..n {
            f.alloc(TourItem::Vertex(v));
        }
        f
    }

    pub fn n(&self) -> usize {
        self.nontree.len()
    }

    pub fn level(&self) -> usize {
        self.level
    }

    fn height_for(&self, item: TourItem) -> usize {
        let key = match item {
            TourItem::Vertex(v) => (v as u64) << 1,
            TourItem::Arc(u, v) => (((u as u64) << 32) ^ (v as u64)).rotate_left(1) | 1,
        };
        let h = splitmix(self.seed ^ splitmix(key ^ (self.level as u64).rotate_left(48)));
        (1 + h.trailing_ones() as usize).min(self.cap)
    }

    fn alloc(&mut self, item: TourItem) -> usize {
        let h = self.height_for(item);
        let idx = self.free.pop().unwrap_or(self.elems.len());
        let vertices = usize::from(matches!(item, TourItem::Vertex(_)));
        let elem = Elem {
            item,
            next: vec![idx; h],
            prev: vec![idx; h],
            aug: vec![
                Aug {
                    summary: None,
                    vertices
                };
                h
            ],
        };
        if idx == self.elems.len() {
            self.elems.push(elem);
        } else {
            self.elems[idx] = elem;
        }
        idx
    }

    fn join(&self, a: &Aug<T>, b: &Aug<T>) -> Aug<T> {
        let summary = match (&a.summary, &b.summary) {
            (None, x) | (x, None) => x.clone(),
            (Some((q1, t1)), Some((q2, t2))) => {
                let t = t1.max(t2) + 1;
                Some((q1.combine(q2, prune_parameter(self.log_n, t)), t))
            }
        };
        Aug {
            summary,
            vertices: a.vertices + b.vertices,
        }
    }

    fn recompute(&mut self, x: usize, l: usize) {
        let end = self.elems[x].next[l];
        let mut acc = self.elems[x].aug[l - 1].clone();
        let mut c = self.elems[x].next[l - 1];
        while c != end {
            acc = self.join(&acc, &self.elems[c].aug[l - 1]);
            c = self.elems[c].next[l - 1];
        }
        self.elems[x].aug[l] = acc;
    }

    /// `anc[l]` is the last level-`l` element at or before `a` in its tour.
    fn ancestors(&self, a: usize) -> Vec<usize> {
        let mut res = vec![a];
        let (mut cur, mut l) = (a, 0);
        loop {
            if self.elems[cur].height() > l + 1 {
                res.push(cur);
                l += 1;
                continue;
            }
            let mut c = self.elems[cur].prev[l];
            loop {
                if c == cur {
                    return res;
                }
                if self.elems[c].height() > l + 1 {
                    break;
                }
                c = self.elems[c].prev[l];
            }
            res.push(c);
            cur = c;
            l += 1;
        }
    }

    fn refresh(&mut self, dirty: Vec<Vec<usize>>) {
        let mut by_level: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for anc in dirty {
            for (l, x) in anc.into_iter().enumerate().skip(1) {
                by_level.entry(l).or_default().push(x);
            }
        }
        for (l, mut xs) in by_level {
            xs.sort_unstable();
            xs.dedup();
            for x in xs {
                self.recompute(x, l);
            }
        }
    }

    /// Swaps the successors of `a` and `c` at every level and repairs the
    /// augmentation along both search paths.
    fn splice(&mut self, a: usize, c: usize) {
        let anc_a = self.ancestors(a);
        let anc_c = self.ancestors(c);
        for l in 0..anc_a.len().min(anc_c.len()) {
            let (pa, pc) = (anc_a[l], anc_c[l]);
            if pa == pc {
                continue;
            }
            let na = self.elems[pa].next[l];
            let nc = self.elems[pc].next[l];
            self.elems[pa].next[l] = nc;
            self.elems[nc].prev[l] = pa;
            self.elems[pc].next[l] = na;
            self.elems[na].prev[l] = pc;
        }
        let new_a = self.ancestors(a);
        let new_c = self.ancestors(c);
        self.refresh(vec![anc_a, anc_c, new_a, new_c]);
    }

    fn top_nodes(&self, x: usize) -> (usize, Vec<usize>) {
        let anc = self.ancestors(x);
        let top = anc.len() - 1;
        let start = anc[top];
        let mut nodes = vec![start];
        let mut c = self.elems[start].next[top];
        while c != start {
            nodes.push(c);
            c = self.elems[c].next[top];
        }
        let root = nodes.iter().enumerate().min_by_key(|(_, &n)| n).map(|(i, _)| i).unwrap();
        nodes.rotate_left(root);
        (top, nodes)
    }

    fn component_aug(&self, v: VertexId) -> Aug<T> {
        let (top, nodes) = self.top_nodes(v);
        let mut acc = self.elems[nodes[0]].aug[top].clone();
        for &x in &nodes[1..] {
            acc = self.join(&acc, &self.elems[x].aug[top]);
        }
        acc
    }

    /// Stable name of `v`'s tour between mutations.
    pub fn representative(&self, v: VertexId) -> usize {
        self.top_nodes(v).1[0]
    }

    pub fn connected(&self, u: VertexId, v: VertexId) -> bool {
        u == v || self.representative(u) == self.representative(v)
    }

    pub fn component_size(&self, v: VertexId) -> usize {
        self.component_aug(v).vertices
    }

    pub fn is_tree_edge(&self, u: VertexId, v: VertexId) -> bool {
        self.arcs.contains_key(&(u, v))
    }

    pub fn tree_edge_count(&self) -> usize {
        self.arcs.len() / 2
    }

    /// Links a batch of edges; fails without mutating if any would close a cycle.
    pub fn link_batch(&mut self, edges: &[(VertexId, VertexId)]) -> Result<(), ForestError> {
        let mut reps: HashMap<usize, usize> = HashMap::new();
        let mut uf = crate::oracle::UnionFind::new(2 * edges.len());
        for &(u, v) in edges {
            if u == v {
                return Err(ForestError::SelfLoop(u));
            }
            let next = reps.len();
            let ru = *reps.entry(self.representative(u)).or_insert(next);
            let next = reps.len();
            let rv = *reps.entry(self.representative(v)).or_insert(next);
            if !uf.union(ru, rv) {
                return Err(ForestError::CycleCreated(u, v));
            }
        }
        for &(u, v) in edges {
            let e1 = self.alloc(TourItem::Arc(u, v));
            let e2 = self.alloc(TourItem::Arc(v, u));
            self.arcs.insert((u, v), e1);
            self.arcs.insert((v, u), e2);
            self.splice(u, e1);
            self.splice(v, e2);
            self.splice(e1, e2);
        }
        Ok(())
    }

    /// Cuts a batch of tree edges; fails without mutating if one is absent.
    pub fn cut_batch(&mut self, edges: &[(VertexId, VertexId)]) -> Result<(), ForestError> {
        let mut seen = BTreeSet::new();
        for &(u, v) in edges {
            if !self.arcs.contains_key(&(u, v)) || !seen.insert((u.min(v), u.max(v))) {
                return Err(ForestError::NotATreeEdge(u, v));
            }
        }
        for &(u, v) in edges {
            let e1 = self.arcs.remove(&(u, v)).unwrap();
            let e2 = self.arcs.remove(&(v, u)).unwrap();
            let p1 = self.elems[e1].prev[0];
            debug_assert!(p1 != e2);
            self.splice(p1, e1);
            let p2 = self.elems[e2].prev[0];
            debug_assert!(p2 != e1);
            self.splice(p2, e2);
            self.splice(p1, p2);
            self.elems[e1].aug.clear();
            self.elems[e2].aug.clear();
            self.free.push(e1);
            self.free.push(e2);
        }
        Ok(())
    }

    fn rebuild_base(&mut self, v: VertexId) {
        let set = &self.nontree[v];
        let summary = if set.is_empty() {
            None
        } else {
            let sorted: Vec<T> = set.iter().cloned().collect();
            Some((QuantileSummary::from_sorted(&sorted, BASE_EPS).unwrap(), 0))
        };
        self.elems[v].aug[0].summary = summary;
    }

    /// Applies deletions then insertions of non-tree entries, each tagged
    /// with the vertex whose set it belongs to.
    pub fn update_nontree_batch(
        &mut self,
        inserts: &[(VertexId, T)],
        deletes: &[(VertexId, T)],
    ) -> Result<(), ForestError> {
        let mut grouped: BTreeMap<VertexId, (Vec<&T>, Vec<&T>)> = BTreeMap::new();
        for (v, x) in deletes {
            grouped.entry(*v).or_default().1.push(x);
        }
        for (v, x) in inserts {
            grouped.entry(*v).or_default().0.push(x);
        }
        for (&v, (ins, del)) in &grouped {
            let set = &self.nontree[v];
            let mut gone = BTreeSet::new();
            for &x in del {
                if !set.contains(x) || !gone.insert(x) {
                    return Err(ForestError::EdgeAbsent(v));
                }
            }
            let mut added = BTreeSet::new();
            for &x in ins {
                if (set.contains(x) && !gone.contains(x)) || !added.insert(x) {
                    return Err(ForestError::EdgeAlreadyPresent(v));
                }
            }
        }
        let touched: Vec<VertexId> = grouped.keys().copied().collect();
        for (v, (ins, del)) in grouped {
            for x in del {
                self.nontree[v].remove(x);
            }
            for x in ins {
                self.nontree[v].insert(x.clone());
            }
        }
        let mut dirty = Vec::with_capacity(touched.len());
        for &v in &touched {
            self.rebuild_base(v);
            dirty.push(self.ancestors(v));
        }
        self.refresh(dirty);
        Ok(())
    }

    pub fn nontree_at(&self, v: VertexId) -> &BTreeSet<T> {
        &self.nontree[v]
    }

    /// Number of non-tree entries attached to `v`'s component.
    pub fn component_nontree_count(&self, v: VertexId) -> u64 {
        self.component_aug(v)
            .summary
            .map(|(q, _)| q.count())
            .unwrap_or(0)
    }

    /// The component summary with its accumulated-error counter.
    pub fn component_summary(&self, v: VertexId) -> Option<(QuantileSummary<T>, u32)> {
        self.component_aug(v).summary
    }

    /// A lightest prefix of the component's non-tree entries whose length is
    /// within `[⌈k/2⌉, ⌊3k/2⌋]`, or everything when fewer entries exist.
    pub fn k_lightest(&self, v: VertexId, k: usize) -> Vec<T> {
        assert!(k >= 1, "k must be positive");
        let (top, nodes) = self.top_nodes(v);
        let mut acc = self.elems[nodes[0]].aug[top].clone();
        for &x in &nodes[1..] {
            acc = self.join(&acc, &self.elems[x].aug[top]);
        }
        let Some((q, _)) = acc.summary else {
            return Vec::new();
        };
        let bound = if k as u64 >= q.count() {
            None
        } else {
            Some(q.query(k as u64).clone())
        };
        let mut out = Vec::new();
        for &x in &nodes {
            self.collect(x, top, bound.as_ref(), &mut out);
        }
        out.sort();
        out
    }

    fn collect(&self, x: usize, l: usize, bound: Option<&T>, out: &mut Vec<T>) {
        let lighter = |aug: &Aug<T>| match (&aug.summary, bound) {
            (None, _) => false,
            (Some(_), None) => true,
            (Some((q, _)), Some(w)) => q.min_element().is_some_and(|m| m <= w),
        };
        if !lighter(&self.elems[x].aug[l]) {
            return;
        }
        if l == 0 {
            if let TourItem::Vertex(v) = self.elems[x].item {
                match bound {
                    None => out.extend(self.nontree[v].iter().cloned()),
                    Some(w) => out.extend(self.nontree[v].range(..=w).cloned()),
                }
            }
            return;
        }
        let end = self.elems[x].next[l];
        let mut c = x;
        loop {
            self.collect(c, l - 1, bound, out);
            c = self.elems[c].next[l - 1];
            if c == end {
                break;
            }
        }
    }

    /// The tour of `v`'s component starting at `v`'s loop element.
    pub fn tour(&self, v: VertexId) -> Vec<TourItem> {
        let mut out = vec![self.elems[v].item];
        let mut c = self.elems[v].next[0];
        while c != v {
            out.push(self.elems[c].item);
            c = self.elems[c].next[0];
        }
        out
    }

    pub fn component_vertices(&self, v: VertexId) -> Vec<VertexId> {
        let mut out: Vec<VertexId> = self
            .tour(v)
            .into_iter()
            .filter_map(|i| match i {
                TourItem::Vertex(x) => Some(x),
                TourItem::Arc(..) => None,
            })
            .collect();
        out.sort_unstable();
        out
    }

    /// Tree edges of `v`'s component in canonical orientation.
    pub fn component_tree_edges(&self, v: VertexId) -> Vec<(VertexId, VertexId)> {
        let mut out: Vec<_> = self
            .tour(v)
            .into_iter()
            .filter_map(|i| match i {
                TourItem::Arc(a, b) if a < b => Some((a, b)),
                _ => None,
            })
            .collect();
        out.sort_unstable();
        out
    }

    /// Tour rendered as `x (x,v) v ...`.
    pub fn dump_tour(&self, v: VertexId) -> String {
        self.tour(v)
            .iter()
            .map(|i| i.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Recomputes every augmented value from scratch and compares vertex and
    /// entry counts with the stored ones; also checks tour shapes and links.
    pub fn check_invariants(&self) -> Result<(), String> {
        let mut seen_tours = BTreeSet::new();
        for v in 0..self.n() {
            if !seen_tours.insert(self.representative(v)) {
                continue;
            }
            let tour = self.tour(v);
            let verts = tour.iter().filter(|i| matches!(i, TourItem::Vertex(_))).count();
            let arcs = tour.len() - verts;
            if arcs != 2 * (verts - 1) {
                return Err(format!("tour of {v}: {verts} vertices but {arcs} arcs"));
            }
            let at = |i: &TourItem| match *i {
                TourItem::Vertex(x) | TourItem::Arc(_, x) => x,
            };
            let from = |i: &TourItem| match *i {
                TourItem::Vertex(x) | TourItem::Arc(x, _) => x,
            };
            for k in 0..tour.len() {
                if at(&tour[k]) != from(&tour[(k + 1) % tour.len()]) {
                    return Err(format!("tour of {v} is not a closed walk at position {k}"));
                }
            }
            let entries: usize = self
                .component_vertices(v)
                .iter()
                .map(|&x| self.nontree[x].len())
                .sum();
            if self.component_nontree_count(v) != entries as u64 {
                return Err(format!("component of {v}: summary count is stale"));
            }
            if self.component_size(v) != verts {
                return Err(format!("component of {v}: vertex count is stale"));
            }
        }
        for (i, e) in self.elems.iter().enumerate() {
            if e.aug.is_empty() {
                continue;
            }
            for l in 0..e.height() {
                if self.elems[e.next[l]].prev[l] != i {
                    return Err(format!("broken link at element {i} level {l}"));
                }
                if l == 0 {
                    continue;
                }
                let end = e.next[l];
                let (mut verts, mut count) = (0, 0);
                let mut c = i;
                loop {
                    let aug = &self.elems[c].aug[l - 1];
                    verts += aug.vertices;
                    count += aug.summary.as_ref().map_or(0, |(q, _)| q.count());
                    c = self.elems[c].next[l - 1];
                    if c == end {
                        break;
                    }
                }
                let aug = &e.aug[l];
                if aug.vertices != verts || aug.summary.as_ref().map_or(0, |(q, _)| q.count()) != count {
                    return Err(format!("stale augmentation at element {i} level {l}"));
                }
            }
        }
        Ok(())
    }
}
