//! Hardness gadgets encoding a source problem with a dynamic subset `S` as a
//! HAC instance.
//!
//! Every source element (a vertex for subgraph problems, a set for subset
//! union, a bipartite vertex for triangle detection) owns two edge lists: the
//! edges present while it is in `S` and those present while it is not.
//! Updating `S` toggles between them, and the query reads the clusters the
//! engine reaches at `θ`.
//!
//! Gadget sizes (vertices, with `m = |X|`, `u = |U|`):
//!
//! | gadget | vertices |
//! |---|---|
//! | `subconn-complete` | `2n` |
//! | `subconn-wpgma` | `n(2 + ℓ)`, `ℓ = ⌈log₂ 2λ⌉` |
//! | `subconn-upgma` | `n + λn³` |
//! | `subunion-upgma` | `m + λu + ℓ_y + ℓ_x + 4` |
//! | `subunion-complete` | `m + u + 3` |
//! | `subunion-wpgma` | `m + u + 3ℓ + 5`, `ℓ = ⌈log₂ 2(λ+1)⁷⌉` |
//! | `subunion-upgma-count` | `m + u + ℓ_x + 2` |
//! | `triangle-upgma-count` | `2n(λ + 1)` |

use std::collections::BTreeSet;
use std::ops::Range;

use dynmsf::graph::{pair, Pair, VertexId};
use dynmsf::oracle::UnionFind;
use num::{BigInt, One};
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::engine::{clusters_at, HacGraph};
use crate::linkage::linkage_by_name;
use crate::policy::MergePolicy;
use crate::rational::{frac, int, to_count, Rational};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ReductionError {
    #[error("unknown reduction `{0}`")]
    Unknown(String),
    #[error("reduction `{reduction}` expects a {expected} source")]
    WrongSource {
        reduction: &'static str,
        expected: &'static str,
    },
    #[error("invalid source: {0}")]
    BadSource(String),
    #[error("approximation factor must be at least 1")]
    BadLambda,
    #[error("membership vector has {got} entries, expected {expected}")]
    Members { got: usize, expected: usize },
    #[error("element {0} is out of range")]
    ElementOutOfRange(usize),
    #[error("element {0} is already in S")]
    AlreadyMember(usize),
    #[error("element {0} is not in S")]
    NotMember(usize),
    #[error("partially dynamic instance accepts only `{0}` updates until restored")]
    NotMonotone(&'static str),
    #[error("exponents need a, b > 0 and 0 ≤ c < 1/a")]
    BadExponents,
}

/// The source problem a gadget answers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Problem {
    /// Are `s` and `t` connected in the subgraph induced by `S`?
    SubConn,
    /// Is the subgraph induced by `S` connected?
    ConnSub,
    /// Does the union of the sets in `S` cover the universe?
    SubUnion,
    /// Triangle-detection inner step: does an edge of the bipartite double
    /// cover join two activated vertices?
    ActiveEdge,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Source {
    Graph {
        n: usize,
        edges: Vec<Pair>,
        s: VertexId,
        t: VertexId,
    },
    Sets {
        universe: usize,
        sets: Vec<Vec<usize>>,
    },
}

impl Source {
    /// Number of elements `S` is drawn from for `problem`.
    pub fn elements(&self, problem: Problem) -> usize {
        match (self, problem) {
            (Source::Graph { n, .. }, Problem::ActiveEdge) => 2 * n,
            (Source::Graph { n, .. }, _) => *n,
            (Source::Sets { sets, .. }, _) => sets.len(),
        }
    }

    fn graph(&self, reduction: &'static str) -> Result<(usize, &[Pair], VertexId, VertexId), ReductionError> {
        match self {
            Source::Graph { n, edges, s, t } => {
                let mut seen = BTreeSet::new();
                for &(u, v) in edges {
                    if u == v || u >= *n || v >= *n || !seen.insert(pair(u, v)) {
                        return Err(ReductionError::BadSource(format!("edge {{{u},{v}}}")));
                    }
                }
                Ok((*n, edges, *s, *t))
            }
            _ => Err(ReductionError::WrongSource {
                reduction,
                expected: "graph",
            }),
        }
    }

    fn sets(&self, reduction: &'static str) -> Result<(usize, &[Vec<usize>]), ReductionError> {
        match self {
            Source::Sets { universe, sets } => {
                for set in sets {
                    let distinct: BTreeSet<_> = set.iter().collect();
                    if distinct.len() != set.len() || set.iter().any(|&x| x >= *universe) {
                        return Err(ReductionError::BadSource(format!("set {set:?}")));
                    }
                }
                Ok((*universe, sets))
            }
            _ => Err(ReductionError::WrongSource {
                reduction,
                expected: "set system",
            }),
        }
    }
}

/// Brute-force answer to `problem` for membership vector `members`.
pub fn source_answer(src: &Source, problem: Problem, members: &[bool]) -> bool {
    match (src, problem) {
        (Source::Graph { n, edges, s, t }, Problem::SubConn | Problem::ConnSub) => {
            let mut uf = UnionFind::new(*n);
            for &(u, v) in edges {
                if members[u] && members[v] {
                    uf.union(u, v);
                }
            }
            if problem == Problem::SubConn {
                members[*s] && members[*t] && uf.same(*s, *t)
            } else {
                let roots: BTreeSet<_> = (0..*n).filter(|&v| members[v]).map(|v| uf.find(v)).collect();
                roots.len() <= 1
            }
        }
        (Source::Graph { n, edges, .. }, Problem::ActiveEdge) => edges
            .iter()
            .any(|&(u, v)| (members[u] && members[n + v]) || (members[v] && members[n + u])),
        (Source::Sets { universe, sets }, Problem::SubUnion) => {
            let covered: BTreeSet<usize> = sets
                .iter()
                .zip(members)
                .filter(|(_, &m)| m)
                .flat_map(|(s, _)| s.iter().copied())
                .collect();
            covered.len() == *universe
        }
        _ => panic!("{problem:?} is not defined on this source"),
    }
}

/// Brute-force triangle detection over all vertex triples.
pub fn has_triangle(n: usize, edges: &[Pair]) -> bool {
    let adj: BTreeSet<Pair> = edges.iter().map(|&(u, v)| pair(u, v)).collect();
    (0..n).any(|a| {
        (a + 1..n).any(|b| adj.contains(&(a, b)) && (b + 1..n).any(|c| adj.contains(&(a, c)) && adj.contains(&(b, c))))
    })
}

/// How clusters at `θ` are read back.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Query {
    SameCluster { s: VertexId, t: VertexId },
    /// `s` and `t` share a cluster that does not contain `x`.
    SameClusterApart { s: VertexId, t: VertexId, x: VertexId },
    /// Connected iff the cluster count is at most `offset + 1`.
    ConnectedCount { offset: usize },
    ExactlyTwo,
    /// An active edge exists iff the count differs from `base + |S|`.
    NoActiveEdge { base: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SourceUpdate {
    Add(usize),
    Remove(usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum EdgeOp {
    Insert(VertexId, VertexId, String),
    Delete(VertexId, VertexId),
}

type WEdge = (VertexId, VertexId, Rational);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Snapshot {
    members: Vec<bool>,
    direction: Option<&'static str>,
}

#[derive(Clone, Debug)]
pub struct GadgetInstance {
    pub reduction: &'static str,
    pub linkage: &'static str,
    pub problem: Problem,
    pub lambda: u64,
    pub theta: Rational,
    pub n: usize,
    pub special: Vec<(String, VertexId)>,
    pub constants: Vec<(&'static str, Rational)>,
    pub query: Query,
    /// Partially dynamic instances accept one update kind until restored.
    pub partial: bool,
    fixed: Vec<WEdge>,
    when_in: Vec<Vec<WEdge>>,
    when_out: Vec<Vec<WEdge>>,
    members: Vec<bool>,
    direction: Option<&'static str>,
}

fn ops(insert: &[WEdge], delete: &[WEdge]) -> Vec<EdgeOp> {
    delete
        .iter()
        .map(|(u, v, _)| EdgeOp::Delete(*u, *v))
        .chain(insert.iter().map(|(u, v, w)| EdgeOp::Insert(*u, *v, w.to_string())))
        .collect()
}

impl GadgetInstance {
    pub fn members(&self) -> &[bool] {
        &self.members
    }

    pub fn elements(&self) -> usize {
        self.members.len()
    }

    pub fn constant(&self, name: &str) -> Option<&Rational> {
        self.constants.iter().find(|(k, _)| *k == name).map(|(_, v)| v)
    }

    pub fn vertex(&self, name: &str) -> Option<VertexId> {
        self.special.iter().find(|(k, _)| k == name).map(|(_, v)| *v)
    }

    /// The HAC graph for the current `S`.
    pub fn graph(&self) -> HacGraph {
        let toggled = self
            .members
            .iter()
            .enumerate()
            .flat_map(|(e, &m)| if m { &self.when_in[e] } else { &self.when_out[e] });
        HacGraph::new(self.n, self.fixed.iter().chain(toggled).cloned()).expect("gadget graphs are simple")
    }

    /// Edge operations per element: `(element, ops for Add, ops for Remove)`.
    pub fn update_table(&self) -> Vec<(usize, Vec<EdgeOp>, Vec<EdgeOp>)> {
        (0..self.elements())
            .map(|e| {
                (
                    e,
                    ops(&self.when_in[e], &self.when_out[e]),
                    ops(&self.when_out[e], &self.when_in[e]),
                )
            })
            .collect()
    }

    pub fn translate(&self, update: SourceUpdate) -> Result<Vec<EdgeOp>, ReductionError> {
        let (e, adding) = match update {
            SourceUpdate::Add(e) => (e, true),
            SourceUpdate::Remove(e) => (e, false),
        };
        let member = *self.members.get(e).ok_or(ReductionError::ElementOutOfRange(e))?;
        match (adding, member) {
            (true, true) => Err(ReductionError::AlreadyMember(e)),
            (false, false) => Err(ReductionError::NotMember(e)),
            (true, false) => Ok(ops(&self.when_in[e], &self.when_out[e])),
            (false, true) => Ok(ops(&self.when_out[e], &self.when_in[e])),
        }
    }

    pub fn apply(&mut self, update: SourceUpdate) -> Result<Vec<EdgeOp>, ReductionError> {
        let kind = match update {
            SourceUpdate::Add(_) => "add",
            SourceUpdate::Remove(_) => "remove",
        };
        if self.partial {
            if let Some(d) = self.direction {
                if d != kind {
                    return Err(ReductionError::NotMonotone(d));
                }
            }
        }
        let out = self.translate(update)?;
        if self.partial {
            self.direction = Some(kind);
        }
        match update {
            SourceUpdate::Add(e) => self.members[e] = true,
            SourceUpdate::Remove(e) => self.members[e] = false,
        }
        Ok(out)
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            members: self.members.clone(),
            direction: self.direction,
        }
    }

    /// Rolls back to `snap`, which also releases the update direction of a
    /// partially dynamic instance if it was unset there.
    pub fn restore(&mut self, snap: &Snapshot) {
        self.members = snap.members.clone();
        self.direction = snap.direction;
    }

    /// Source answer read from clusters at `θ`.
    pub fn interpret(&self, clusters: &[Vec<VertexId>]) -> bool {
        match self.query {
            Query::SameCluster { s, t } => clusters.iter().any(|c| c.contains(&s) && c.contains(&t)),
            Query::SameClusterApart { s, t, x } => clusters
                .iter()
                .any(|c| c.contains(&s) && c.contains(&t) && !c.contains(&x)),
            Query::ConnectedCount { offset } => clusters.len() <= offset + 1,
            Query::ExactlyTwo => clusters.len() == 2,
            Query::NoActiveEdge { base } => {
                clusters.len() != base + self.members.iter().filter(|&&m| m).count()
            }
        }
    }

    /// Runs the reference engine to `θ` under `policy` and interprets the result.
    pub fn answer(&self, policy: &mut dyn MergePolicy) -> bool {
        let linkage = linkage_by_name(self.linkage).expect("registered linkage");
        let clusters = clusters_at(&self.graph(), linkage.as_ref(), &self.theta, policy);
        self.interpret(&clusters)
    }
}

struct Builder {
    n: usize,
    fixed: Vec<WEdge>,
    special: Vec<(String, VertexId)>,
    constants: Vec<(&'static str, Rational)>,
}

impl Builder {
    fn new() -> Self {
        Builder {
            n: 0,
            fixed: Vec::new(),
            special: Vec::new(),
            constants: Vec::new(),
        }
    }

    fn vertices(&mut self, k: usize) -> Range<VertexId> {
        self.n += k;
        self.n - k..self.n
    }

    fn named(&mut self, name: &str) -> VertexId {
        let v = self.vertices(1).start;
        self.special.push((name.into(), v));
        v
    }

    fn edge(&mut self, u: VertexId, v: VertexId, w: &Rational) {
        self.fixed.push((u, v, w.clone()));
    }

    fn star(&mut self, center: VertexId, leaves: usize, w: &Rational) -> Range<VertexId> {
        let r = self.vertices(leaves);
        for leaf in r.clone() {
            self.edge(center, leaf, w);
        }
        r
    }

    fn constant(&mut self, name: &'static str, value: &Rational) {
        self.constants.push((name, value.clone()));
    }
}

struct Parts {
    b: Builder,
    theta: Rational,
    query: Query,
    when_in: Vec<Vec<WEdge>>,
    when_out: Vec<Vec<WEdge>>,
}

fn pow(x: &Rational, k: u32) -> Rational {
    num::pow(x.clone(), k as usize)
}

/// Smallest `ℓ` with `2^ℓ ≥ x`.
fn ceil_log2(x: &Rational) -> usize {
    let mut l = 0;
    let mut p = Rational::one();
    while &p < x {
        p *= int(2);
        l += 1;
    }
    l
}

fn count(r: &Rational) -> usize {
    to_count(&r.ceil()).expect("gadget sizes are small nonnegative integers")
}

fn checked_endpoints(n: usize, s: VertexId, t: VertexId) -> Result<(), ReductionError> {
    if s == t || s >= n || t >= n {
        return Err(ReductionError::BadSource(format!("need distinct s, t < {n}, got {s}, {t}")));
    }
    Ok(())
}

fn subgraph_query(problem: Problem, s: VertexId, t: VertexId, offset: usize) -> Query {
    match problem {
        Problem::SubConn => Query::SameCluster { s, t },
        _ => Query::ConnectedCount { offset },
    }
}

fn subconn_complete(src: &Source, lambda: u64, _partial: bool, problem: Problem) -> Result<Parts, ReductionError> {
    let (n, edges, s, t) = src.graph("subconn-complete")?;
    checked_endpoints(n, s, t)?;
    let lp = int(lambda as i64 + 1);
    let mut b = Builder::new();
    b.vertices(n);
    b.special.extend([("s".into(), s), ("t".into(), t)]);
    let primes = b.vertices(n);
    b.constant("lambda'", &lp);
    for &(u, v) in edges {
        b.edge(u, v, &lp);
        b.edge(primes.start + u, v, &int(1));
        b.edge(primes.start + v, u, &int(1));
    }
    let when_out = (0..n).map(|v| vec![(v, primes.start + v, pow(&lp, 2))]).collect();
    Ok(Parts {
        b,
        theta: lp,
        query: subgraph_query(problem, s, t, n),
        when_in: vec![Vec::new(); n],
        when_out,
    })
}

fn subconn_wpgma(src: &Source, lambda: u64, _partial: bool, problem: Problem) -> Result<Parts, ReductionError> {
    let (n, edges, s, t) = src.graph("subconn-wpgma")?;
    checked_endpoints(n, s, t)?;
    let lam = int(lambda as i64);
    let lp = int(lambda as i64 + 1);
    let theta = int(2) * &lam;
    let ell = ceil_log2(&theta);
    let mut b = Builder::new();
    b.vertices(n);
    b.special.extend([("s".into(), s), ("t".into(), t)]);
    b.constant("lambda'", &lp);
    b.constant("l", &int(ell as i64));
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in edges {
        b.edge(u, v, &theta);
        adj[u].push(v);
        adj[v].push(u);
    }
    let mut when_out = Vec::new();
    for (v, nbrs) in adj.iter().enumerate() {
        let center = b.vertices(1).start;
        for leaf in b.star(center, ell, &(int(2) * pow(&lp, 2))) {
            for &w in nbrs {
                b.edge(leaf, w, &int(1));
            }
        }
        when_out.push(vec![(v, center, int(2) * pow(&lp, 3))]);
    }
    Ok(Parts {
        b,
        theta,
        query: subgraph_query(problem, s, t, n),
        when_in: vec![Vec::new(); n],
        when_out,
    })
}

fn subconn_upgma(src: &Source, lambda: u64, _partial: bool, problem: Problem) -> Result<Parts, ReductionError> {
    let (n, edges, s, t) = src.graph("subconn-upgma")?;
    checked_endpoints(n, s, t)?;
    if n < 4 {
        return Err(ReductionError::BadSource(format!("average-linkage subgraph gadget needs n ≥ 4, got {n}")));
    }
    let lam = int(lambda as i64);
    let n3 = pow(&int(n as i64), 3);
    let heavy = int(2) * pow(&lam, 2) * &n3;
    let mut b = Builder::new();
    b.vertices(n);
    b.special.extend([("s".into(), s), ("t".into(), t)]);
    let x = b.named("x");
    b.constant("heavy", &heavy);
    b.star(x, count(&(&lam * &n3 - int(1))), &heavy);
    for &(u, v) in edges {
        b.edge(u, v, &int(1));
    }
    let when_out = (0..n).map(|v| vec![(x, v, heavy.clone())]).collect();
    Ok(Parts {
        b,
        theta: frac(4, (n * n) as i64),
        query: match problem {
            Problem::SubConn => Query::SameClusterApart { s, t, x },
            _ => Query::ConnectedCount { offset: 1 },
        },
        when_in: vec![Vec::new(); n],
        when_out,
    })
}

fn subunion_upgma(src: &Source, lambda: u64, partial: bool, _problem: Problem) -> Result<Parts, ReductionError> {
    let (universe, sets) = src.sets("subunion-upgma")?;
    let (m, u) = (int(sets.len() as i64), int(universe as i64));
    let lam = int(lambda as i64);
    let lp = int(lambda as i64 + 1);
    let w_t = &lp * &lam;
    let l_y = &lam * &w_t * &u;
    let big_l = pow(&lp, 2) * &lam * (&l_y + int(1) + &m + &lam * &u);
    let w_y = (&l_y + &m) * &big_l + int(1);
    let (l_x, w_x) = if partial {
        let l_x = (int(2) * &m * &w_y / &lp).ceil();
        let w_x = &lam * (&l_x + &m) * &w_y + int(1);
        (l_x, w_x)
    } else {
        let l_x = &m * &big_l / &lam;
        let w_x = &lam * (&l_x + &m) * &big_l + int(1);
        (l_x, w_x)
    };
    let mut b = Builder::new();
    for (name, v) in [("w_t", &w_t), ("l_y", &l_y), ("L", &big_l), ("l_x", &l_x), ("w_y", &w_y), ("w_x", &w_x)] {
        b.constant(name, v);
    }
    let xs = b.vertices(sets.len());
    let us = b.vertices(universe);
    let (s, t, y, x) = (b.named("s"), b.named("t"), b.named("y"), b.named("x"));
    for (i, set) in sets.iter().enumerate() {
        for &e in set {
            b.edge(xs.start + i, us.start + e, &big_l);
        }
    }
    for c in us.clone() {
        b.star(c, lambda as usize - 1, &w_x);
        b.edge(t, c, &w_t);
    }
    b.star(y, count(&l_y), &w_y);
    b.star(x, count(&l_x), &w_x);
    b.edge(s, t, &int(1));
    let mut when_in = Vec::new();
    let mut when_out = Vec::new();
    for i in xs {
        if partial {
            b.edge(y, i, &w_y);
            when_in.push(Vec::new());
        } else {
            when_in.push(vec![(y, i, w_y.clone())]);
        }
        when_out.push(vec![(x, i, w_x.clone())]);
    }
    Ok(Parts {
        b,
        theta: int(1),
        query: Query::SameCluster { s, t },
        when_in,
        when_out,
    })
}

fn subunion_complete(src: &Source, lambda: u64, _partial: bool, _problem: Problem) -> Result<Parts, ReductionError> {
    let (universe, sets) = src.sets("subunion-complete")?;
    let lp = int(lambda as i64 + 1);
    let one = int(1);
    let mut b = Builder::new();
    b.constant("lambda'", &lp);
    let xs = b.vertices(sets.len());
    let us = b.vertices(universe);
    let (x, s, t) = (b.named("x"), b.named("s"), b.named("t"));
    for (i, set) in sets.iter().enumerate() {
        for &e in set {
            b.edge(xs.start + i, us.start + e, &pow(&lp, 3));
        }
    }
    for c in us {
        b.edge(x, c, &one);
        b.edge(s, c, &one);
        b.edge(t, c, &pow(&lp, 2));
    }
    b.edge(s, t, &lp);
    for i in xs.clone() {
        b.edge(t, i, &one);
    }
    Ok(Parts {
        b,
        theta: lp.clone(),
        query: Query::SameCluster { s, t },
        when_in: vec![Vec::new(); sets.len()],
        when_out: xs.map(|i| vec![(x, i, pow(&lp, 4))]).collect(),
    })
}

fn subunion_wpgma(src: &Source, lambda: u64, _partial: bool, _problem: Problem) -> Result<Parts, ReductionError> {
    let (universe, sets) = src.sets("subunion-wpgma")?;
    let lam = int(lambda as i64);
    let lp = int(lambda as i64 + 1);
    let two = int(2);
    let one = int(1);
    let w = |k: u32| &two * pow(&lp, k);
    let ell = ceil_log2(&w(7));
    let mut b = Builder::new();
    b.constant("lambda'", &lp);
    b.constant("l", &int(ell as i64));
    let xs = b.vertices(sets.len());
    let us = b.vertices(universe);
    let (s, t, x, y, z) = (b.named("s"), b.named("t"), b.named("x"), b.named("y"), b.named("z"));
    for (i, set) in sets.iter().enumerate() {
        for &e in set {
            b.edge(xs.start + i, us.start + e, &w(7));
        }
    }
    b.edge(s, t, &(&two * &lam));
    for c in us.clone() {
        b.edge(t, c, &w(4));
        b.edge(z, c, &w(3));
    }
    for leaf in b.star(x, ell, &w(8)) {
        b.edge(leaf, y, &one);
        for c in us.clone() {
            b.edge(leaf, c, &one);
        }
    }
    for leaf in b.star(y, ell, &w(5)) {
        b.edge(leaf, t, &one);
        b.edge(leaf, z, &one);
    }
    for i in xs.clone() {
        b.edge(y, i, &w(6));
    }
    for leaf in b.star(z, ell, &w(2)) {
        b.edge(leaf, s, &one);
    }
    Ok(Parts {
        b,
        theta: &two * &lam,
        query: Query::SameCluster { s, t },
        when_in: vec![Vec::new(); sets.len()],
        when_out: xs.map(|i| vec![(x, i, w(9))]).collect(),
    })
}

fn subunion_upgma_count(src: &Source, lambda: u64, partial: bool, _problem: Problem) -> Result<Parts, ReductionError> {
    let (universe, sets) = src.sets("subunion-upgma-count")?;
    if universe + sets.len() == 0 {
        return Err(ReductionError::BadSource("empty universe and collection".into()));
    }
    let (m, u) = (int(sets.len() as i64), int(universe as i64));
    let lam = int(lambda as i64);
    let theta = Rational::new(BigInt::one(), (&m + &u).to_integer());
    let w_y = &lam * &m + int(1);
    let (l_x, w_x) = if partial {
        let l_x = int(2) * &lam * &m * &w_y / &theta;
        let w_x = &lam * (&l_x + &m) * &w_y + int(1);
        (l_x, w_x)
    } else {
        let l_x = &lam * &m / &theta;
        let w_x = &lam * (&l_x + &m) + int(1);
        (l_x, w_x)
    };
    let mut b = Builder::new();
    for (name, v) in [("w_y", &w_y), ("l_x", &l_x), ("w_x", &w_x)] {
        b.constant(name, v);
    }
    let xs = b.vertices(sets.len());
    let us = b.vertices(universe);
    let (x, y) = (b.named("x"), b.named("y"));
    for (i, set) in sets.iter().enumerate() {
        for &e in set {
            b.edge(xs.start + i, us.start + e, &int(1));
        }
    }
    b.star(x, count(&l_x), &w_x);
    let mut when_in = Vec::new();
    for i in xs.clone() {
        if partial {
            b.edge(y, i, &w_y);
            when_in.push(Vec::new());
        } else {
            when_in.push(vec![(y, i, w_y.clone())]);
        }
    }
    Ok(Parts {
        b,
        theta,
        query: Query::ExactlyTwo,
        when_in,
        when_out: xs.map(|i| vec![(x, i, w_x.clone())]).collect(),
    })
}

fn triangle_upgma_count(src: &Source, lambda: u64, _partial: bool, _problem: Problem) -> Result<Parts, ReductionError> {
    let (n, edges, _, _) = src.graph("triangle-upgma-count")?;
    let heavy = pow(&int(lambda as i64 + 1), 2);
    let mut b = Builder::new();
    b.constant("heavy", &heavy);
    b.vertices(2 * n);
    for &(u, v) in edges {
        b.edge(u, n + v, &int(1));
        b.edge(v, n + u, &int(1));
    }
    let mut when_out = Vec::new();
    for e in 0..2 * n {
        let center = b.vertices(1).start;
        b.star(center, lambda as usize - 1, &heavy);
        when_out.push(vec![(e, center, heavy.clone())]);
    }
    Ok(Parts {
        b,
        theta: int(1),
        query: Query::NoActiveEdge { base: 2 * n },
        when_in: vec![Vec::new(); 2 * n],
        when_out,
    })
}

/// A named gadget generator.
pub trait Reduction: Send + Sync {
    fn name(&self) -> &'static str;
    fn linkage(&self) -> &'static str;
    fn problem(&self) -> Problem;
    fn partial(&self) -> bool;
    fn build(&self, src: &Source, members: &[bool], lambda: u64) -> Result<GadgetInstance, ReductionError>;
}

type Construct = fn(&Source, u64, bool, Problem) -> Result<Parts, ReductionError>;

struct Gadget {
    name: &'static str,
    linkage: &'static str,
    problem: Problem,
    partial: bool,
    construct: Construct,
}

impl Reduction for Gadget {
    fn name(&self) -> &'static str {
        self.name
    }

    fn linkage(&self) -> &'static str {
        self.linkage
    }

    fn problem(&self) -> Problem {
        self.problem
    }

    fn partial(&self) -> bool {
        self.partial
    }

    fn build(&self, src: &Source, members: &[bool], lambda: u64) -> Result<GadgetInstance, ReductionError> {
        if lambda == 0 {
            return Err(ReductionError::BadLambda);
        }
        let parts = (self.construct)(src, lambda, self.partial, self.problem)?;
        let expected = src.elements(self.problem);
        if members.len() != expected {
            return Err(ReductionError::Members {
                got: members.len(),
                expected,
            });
        }
        Ok(GadgetInstance {
            reduction: self.name,
            linkage: self.linkage,
            problem: self.problem,
            lambda,
            theta: parts.theta,
            n: parts.b.n,
            special: parts.b.special,
            constants: parts.b.constants,
            query: parts.query,
            partial: self.partial,
            fixed: parts.b.fixed,
            when_in: parts.when_in,
            when_out: parts.when_out,
            members: members.to_vec(),
            direction: None,
        })
    }
}

const GADGETS: [(&str, &str, Problem, bool, Construct); 13] = [
    ("subconn-complete", "complete", Problem::SubConn, false, subconn_complete),
    ("subconn-wpgma", "weighted_average", Problem::SubConn, false, subconn_wpgma),
    ("subconn-upgma", "average", Problem::SubConn, false, subconn_upgma),
    ("connsub-complete", "complete", Problem::ConnSub, false, subconn_complete),
    ("connsub-wpgma", "weighted_average", Problem::ConnSub, false, subconn_wpgma),
    ("connsub-upgma", "average", Problem::ConnSub, false, subconn_upgma),
    ("subunion-upgma", "average", Problem::SubUnion, false, subunion_upgma),
    ("subunion-upgma-partial", "average", Problem::SubUnion, true, subunion_upgma),
    ("subunion-complete", "complete", Problem::SubUnion, false, subunion_complete),
    ("subunion-wpgma", "weighted_average", Problem::SubUnion, false, subunion_wpgma),
    ("subunion-upgma-count", "average", Problem::SubUnion, false, subunion_upgma_count),
    ("subunion-upgma-count-partial", "average", Problem::SubUnion, true, subunion_upgma_count),
    ("triangle-upgma-count", "average", Problem::ActiveEdge, false, triangle_upgma_count),
];

pub fn registry() -> Vec<Box<dyn Reduction>> {
    GADGETS
        .iter()
        .map(|&(name, linkage, problem, partial, construct)| {
            Box::new(Gadget {
                name,
                linkage,
                problem,
                partial,
                construct,
            }) as Box<dyn Reduction>
        })
        .collect()
}

pub fn reduction_names() -> Vec<&'static str> {
    GADGETS.iter().map(|g| g.0).collect()
}

pub fn reduction_by_name(name: &str) -> Result<Box<dyn Reduction>, ReductionError> {
    registry()
        .into_iter()
        .find(|r| r.name() == name)
        .ok_or_else(|| ReductionError::Unknown(name.into()))
}

/// How the triangle driver switches vertices on and off.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DriverMode {
    /// Activate `N(v)` by deletions, query, reinsert.
    Dynamic,
    /// Activate by deletions, query, roll back to the initial snapshot.
    Decremental,
    /// Start fully active, deactivate the rest by insertions, roll back.
    Incremental,
}

/// Triangle detection through the bipartite activation gadget: for each `v`,
/// activate both copies of every neighbor of `v` and ask for an active edge.
pub fn detect_triangle(
    src: &Source,
    lambda: u64,
    mode: DriverMode,
    policy: &mut dyn MergePolicy,
) -> Result<bool, ReductionError> {
    let (n, edges, _, _) = src.graph("triangle-upgma-count")?;
    let mut adj = vec![BTreeSet::new(); n];
    for &(u, v) in edges {
        adj[u].insert(v);
        adj[v].insert(u);
    }
    let start = vec![mode == DriverMode::Incremental; 2 * n];
    let mut g = reduction_by_name("triangle-upgma-count")?.build(src, &start, lambda)?;
    let initial = g.snapshot();
    for nbrs in &adj {
        let active: Vec<usize> = nbrs.iter().flat_map(|&u| [u, n + u]).collect();
        match mode {
            DriverMode::Dynamic | DriverMode::Decremental => {
                for &e in &active {
                    g.apply(SourceUpdate::Add(e))?;
                }
            }
            DriverMode::Incremental => {
                for e in (0..2 * n).filter(|e| !active.contains(e)) {
                    g.apply(SourceUpdate::Remove(e))?;
                }
            }
        }
        let hit = g.answer(policy);
        if mode == DriverMode::Dynamic {
            for &e in &active {
                g.apply(SourceUpdate::Remove(e))?;
            }
        } else {
            g.restore(&initial);
        }
        if hit {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Parameter setting for turning a `λ`-approximate gadget of size
/// `Õ(λ^a |U|^b)` into a conditional lower bound for `O(n^c)`-approximate
/// algorithms. Exponents are of `|U|`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ApproxParameters {
    /// `λ = Θ̃(|U|^{bc/(1−ac)})`.
    pub lambda_exponent: f64,
    /// `n′ = Õ(|U|^{b/(1−ac)})`.
    pub size_exponent: f64,
    /// Update or query work is `Ω(n^{(1−ac)/b − o(1)})`.
    pub bound_exponent: f64,
}

pub fn subunion_approx_parameters(a: f64, b: f64, c: f64) -> Result<ApproxParameters, ReductionError> {
    if a <= 0.0 || b <= 0.0 || c < 0.0 || a * c >= 1.0 {
        return Err(ReductionError::BadExponents);
    }
    let gap = 1.0 - a * c;
    Ok(ApproxParameters {
        lambda_exponent: b * c / gap,
        size_exponent: b / gap,
        bound_exponent: gap / b,
    })
}

impl ApproxParameters {
    /// `(λ, n′)` for a universe of the given size, ignoring polylog factors.
    pub fn at(&self, universe: f64) -> (f64, f64) {
        (universe.powf(self.lambda_exponent), universe.powf(self.size_exponent))
    }
}

/// Random source graph with `n` vertices, edge probability `p` and random
/// distinct endpoints `s`, `t`.
pub fn random_graph_source(n: usize, p: f64, rng: &mut impl Rng) -> Source {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }
    let s = rng.gen_range(0..n);
    let t = (s + rng.gen_range(1..n)) % n;
    Source::Graph { n, edges, s, t }
}

/// Random set system: each of `sets` sets contains each universe element
/// with probability `p`.
pub fn random_set_source(universe: usize, sets: usize, p: f64, rng: &mut impl Rng) -> Source {
    let sets = (0..sets)
        .map(|_| (0..universe).filter(|_| rng.gen_bool(p)).collect())
        .collect();
    Source::Sets { universe, sets }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig5() -> Source {
        Source::Sets {
            universe: 4,
            sets: vec![vec![0, 1], vec![0, 2], vec![1, 2, 3]],
        }
    }

    #[test]
    fn fig5_constants_at_unit_lambda() {
        let g = reduction_by_name("subunion-upgma")
            .unwrap()
            .build(&fig5(), &[false, true, true], 1)
            .unwrap();
        let expect = [("w_t", 2), ("l_y", 8), ("L", 64), ("l_x", 192), ("w_y", 705), ("w_x", 12481)];
        for (name, v) in expect {
            assert_eq!(g.constant(name), Some(&int(v)), "{name}");
        }
        assert_eq!(g.n, 3 + 4 + 8 + 192 + 4);
    }

    #[test]
    fn ceil_log2_values() {
        assert_eq!(ceil_log2(&int(1)), 0);
        assert_eq!(ceil_log2(&int(2)), 1);
        assert_eq!(ceil_log2(&int(8)), 3);
        assert_eq!(ceil_log2(&int(9)), 4);
        assert_eq!(ceil_log2(&int(256)), 8);
    }

    #[test]
    fn update_errors() {
        let mut g = reduction_by_name("subunion-upgma-partial")
            .unwrap()
            .build(&fig5(), &[false, true, false], 1)
            .unwrap();
        assert_eq!(g.apply(SourceUpdate::Add(1)), Err(ReductionError::AlreadyMember(1)));
        assert_eq!(g.apply(SourceUpdate::Remove(0)), Err(ReductionError::NotMember(0)));
        assert_eq!(g.apply(SourceUpdate::Add(7)), Err(ReductionError::ElementOutOfRange(7)));
        let snap = g.snapshot();
        g.apply(SourceUpdate::Add(0)).unwrap();
        assert_eq!(g.apply(SourceUpdate::Remove(1)), Err(ReductionError::NotMonotone("add")));
        g.restore(&snap);
        assert_eq!(g.apply(SourceUpdate::Remove(1)).unwrap(), vec![EdgeOp::Insert(g.vertex("x").unwrap(), 1, g.constant("w_x").unwrap().to_string())]);
    }

    #[test]
    fn source_kinds_are_checked() {
        let r = reduction_by_name("subconn-complete").unwrap();
        assert!(matches!(r.build(&fig5(), &[true; 3], 1), Err(ReductionError::WrongSource { .. })));
        let tiny = Source::Graph {
            n: 3,
            edges: vec![(0, 1)],
            s: 0,
            t: 1,
        };
        let r = reduction_by_name("subconn-upgma").unwrap();
        assert!(matches!(r.build(&tiny, &[true; 3], 1), Err(ReductionError::BadSource(_))));
        assert!(matches!(reduction_by_name("nope"), Err(ReductionError::Unknown(_))));
    }

    #[test]
    fn approx_calculator() {
        let p = subunion_approx_parameters(5.0, 1.0, 0.1).unwrap();
        assert!((p.lambda_exponent - 0.2).abs() < 1e-12);
        assert!((p.size_exponent - 2.0).abs() < 1e-12);
        assert!((p.bound_exponent - 0.5).abs() < 1e-12);
        assert!(subunion_approx_parameters(5.0, 1.0, 0.2).is_err());
    }
}
