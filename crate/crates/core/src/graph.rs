//! Vertices, weighted edges, batches and the text formats shared by every layer.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;
use std::hash::Hash;
use std::str::FromStr;

use thiserror::Error;

pub type VertexId = usize;

/// Unordered vertex pair stored as `(min, max)`.
pub type Pair = (VertexId, VertexId);

pub fn pair(u: VertexId, v: VertexId) -> Pair {
    if u <= v {
        (u, v)
    } else {
        (v, u)
    }
}

/// Bound for weight types: any total order that is cheap to copy.
pub trait EdgeWeight: Ord + Copy + Hash + fmt::Debug + Send + Sync + 'static {}

impl<T: Ord + Copy + Hash + fmt::Debug + Send + Sync + 'static> EdgeWeight for T {}

/// An undirected edge in canonical orientation `u < v`.
///
/// Ordering is by `(w, u, v)`, so distinct edges never compare equal even when
/// their weights tie.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct WeightedEdge<W = i64> {
    pub u: VertexId,
    pub v: VertexId,
    pub w: W,
}

impl<W: EdgeWeight> WeightedEdge<W> {
    pub fn new(u: VertexId, v: VertexId, w: W) -> Self {
        let (u, v) = pair(u, v);
        WeightedEdge { u, v, w }
    }

    pub fn pair(&self) -> Pair {
        (self.u, self.v)
    }

    pub fn other(&self, x: VertexId) -> VertexId {
        if x == self.u {
            self.v
        } else {
            self.u
        }
    }
}

impl<W: Ord> Ord for WeightedEdge<W> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.w
            .cmp(&other.w)
            .then(self.u.cmp(&other.u))
            .then(self.v.cmp(&other.v))
    }
}

impl<W: Ord> PartialOrd for WeightedEdge<W> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<W: fmt::Display> fmt::Display for WeightedEdge<W> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.u, self.v, self.w)
    }
}

/// Total order used everywhere edges are ranked.
pub fn compare<W: Ord>(a: &WeightedEdge<W>, b: &WeightedEdge<W>) -> Ordering {
    a.cmp(b)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Batch<W = i64> {
    Insert(Vec<WeightedEdge<W>>),
    Delete(Vec<Pair>),
}

impl<W> Batch<W> {
    pub fn len(&self) -> usize {
        match self {
            Batch::Insert(e) => e.len(),
            Batch::Delete(p) => p.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum BatchError {
    #[error("edge {{{0},{1}}} appears twice in one batch")]
    DuplicateInBatch(VertexId, VertexId),
    #[error("edge {{{0},{1}}} is already present")]
    EdgeAlreadyPresent(VertexId, VertexId),
    #[error("edge {{{0},{1}}} is absent")]
    EdgeAbsent(VertexId, VertexId),
    #[error("self-loop at vertex {0}")]
    SelfLoop(VertexId),
    #[error("vertex {0} out of range for n = {1}")]
    VertexOutOfRange(VertexId, usize),
}

fn check_pair(u: VertexId, v: VertexId, n: usize) -> Result<Pair, BatchError> {
    if u >= n {
        return Err(BatchError::VertexOutOfRange(u, n));
    }
    if v >= n {
        return Err(BatchError::VertexOutOfRange(v, n));
    }
    if u == v {
        return Err(BatchError::SelfLoop(u));
    }
    Ok(pair(u, v))
}

/// Checks a batch against the current edge set, described by `present`.
pub fn validate_batch<W>(
    batch: &Batch<W>,
    n: usize,
    present: impl Fn(Pair) -> bool,
) -> Result<(), BatchError> {
    let mut seen = HashSet::new();
    match batch {
        Batch::Insert(edges) => {
            for e in edges {
                let p = check_pair(e.u, e.v, n)?;
                if !seen.insert(p) {
                    return Err(BatchError::DuplicateInBatch(p.0, p.1));
                }
                if present(p) {
                    return Err(BatchError::EdgeAlreadyPresent(p.0, p.1));
                }
            }
        }
        Batch::Delete(pairs) => {
            for &(u, v) in pairs {
                let p = check_pair(u, v, n)?;
                if !seen.insert(p) {
                    return Err(BatchError::DuplicateInBatch(p.0, p.1));
                }
                if !present(p) {
                    return Err(BatchError::EdgeAbsent(p.0, p.1));
                }
            }
        }
    }
    Ok(())
}

/// A static weighted graph as read from or written to a graph file.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Graph {
    pub n: usize,
    pub edges: Vec<WeightedEdge<i64>>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: batch mixes {first} and {second} commands")]
    MixedBatch {
        line: usize,
        first: &'static str,
        second: &'static str,
    },
}

fn syntax(line: usize, msg: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        line,
        msg: msg.into(),
    }
}

fn field<T: FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T, ParseError> {
    let tok = tok.ok_or_else(|| syntax(line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| syntax(line, format!("bad {what} `{tok}`")))
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

impl Graph {
    /// Parses `n m` followed by `m` lines of `u v w`.
    pub fn parse(text: &str) -> Result<Graph, ParseError> {
        let mut lines = content_lines(text);
        let (ln, header) = lines.next().ok_or_else(|| syntax(1, "empty graph file"))?;
        let mut it = header.split_whitespace();
        let n: usize = field(it.next(), ln, "n")?;
        let m: usize = field(it.next(), ln, "m")?;
        let mut edges = Vec::with_capacity(m);
        let mut seen = HashSet::new();
        for (ln, l) in lines {
            let mut it = l.split_whitespace();
            let u: usize = field(it.next(), ln, "u")?;
            let v: usize = field(it.next(), ln, "v")?;
            let w: i64 = field(it.next(), ln, "w")?;
            let p = check_pair(u, v, n).map_err(|e| syntax(ln, e.to_string()))?;
            if !seen.insert(p) {
                return Err(syntax(ln, format!("duplicate edge {{{},{}}}", p.0, p.1)));
            }
            edges.push(WeightedEdge::new(u, v, w));
        }
        if edges.len() != m {
            return Err(syntax(ln, format!("header promises {m} edges, found {}", edges.len())));
        }
        Ok(Graph { n, edges })
    }

    pub fn render(&self) -> String {
        let mut out = format!("{} {}\n", self.n, self.edges.len());
        for e in &self.edges {
            out.push_str(&format!("{e}\n"));
        }
        out
    }
}

/// One line of a trace file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Command {
    Insert(WeightedEdge<i64>),
    Delete(Pair),
    Same { s: VertexId, t: VertexId, theta: i64 },
    Group { members: Vec<VertexId>, theta: i64 },
    Count { theta: i64 },
}

impl Command {
    fn kind(&self) -> &'static str {
        match self {
            Command::Insert(_) => "insert",
            Command::Delete(_) => "delete",
            _ => "query",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TraceBatch {
    Update(Batch<i64>),
    Query(Vec<Command>),
}

/// A parsed trace: vertex count plus uniform-kind batches.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Trace {
    pub n: usize,
    pub batches: Vec<TraceBatch>,
}

impl Trace {
    /// Parses a trace. The first content line may be `n <count>`; otherwise
    /// `default_n` is used.
    pub fn parse(text: &str, default_n: Option<usize>) -> Result<Trace, ParseError> {
        let mut n = default_n;
        let mut batches = Vec::new();
        let mut cur: Vec<Command> = Vec::new();
        let mut first_line = true;
        let flush = |cur: &mut Vec<Command>, batches: &mut Vec<TraceBatch>| {
            if cur.is_empty() {
                return;
            }
            let cmds = std::mem::take(cur);
            let batch = match cmds[0] {
                Command::Insert(_) => TraceBatch::Update(Batch::Insert(
                    cmds.into_iter()
                        .map(|c| match c {
                            Command::Insert(e) => e,
                            _ => unreachable!(),
                        })
                        .collect(),
                )),
                Command::Delete(_) => TraceBatch::Update(Batch::Delete(
                    cmds.into_iter()
                        .map(|c| match c {
                            Command::Delete(p) => p,
                            _ => unreachable!(),
                        })
                        .collect(),
                )),
                _ => TraceBatch::Query(cmds),
            };
            batches.push(batch);
        };
        for (ln, l) in content_lines(text) {
            let mut it = l.split_whitespace();
            let tag = it.next().unwrap_or("");
            if first_line && tag == "n" {
                n = Some(field(it.next(), ln, "n")?);
                first_line = false;
                continue;
            }
            first_line = false;
            let cmd = match tag {
                "B" => {
                    flush(&mut cur, &mut batches);
                    continue;
                }
                "I" => {
                    let u: usize = field(it.next(), ln, "u")?;
                    let v: usize = field(it.next(), ln, "v")?;
                    let w: i64 = field(it.next(), ln, "w")?;
                    Command::Insert(WeightedEdge::new(u, v, w))
                }
                "D" => {
                    let u: usize = field(it.next(), ln, "u")?;
                    let v: usize = field(it.next(), ln, "v")?;
                    Command::Delete(pair(u, v))
                }
                "Q" => Command::Same {
                    s: field(it.next(), ln, "s")?,
                    t: field(it.next(), ln, "t")?,
                    theta: field(it.next(), ln, "theta")?,
                },
                "G" => {
                    let k: usize = field(it.next(), ln, "k")?;
                    let mut members = Vec::with_capacity(k);
                    for _ in 0..k {
                        members.push(field(it.next(), ln, "vertex")?);
                    }
                    Command::Group {
                        members,
                        theta: field(it.next(), ln, "theta")?,
                    }
                }
                "C" => Command::Count {
                    theta: field(it.next(), ln, "theta")?,
                },
                other => return Err(syntax(ln, format!("unknown command `{other}`"))),
            };
            if it.next().is_some() {
                return Err(syntax(ln, "trailing tokens"));
            }
            if let Some(first) = cur.first() {
                if first.kind() != cmd.kind() {
                    return Err(ParseError::MixedBatch {
                        line: ln,
                        first: first.kind(),
                        second: cmd.kind(),
                    });
                }
            }
            cur.push(cmd);
        }
        flush(&mut cur, &mut batches);
        let n = n.ok_or_else(|| syntax(1, "trace has no `n` header and no default"))?;
        Ok(Trace { n, batches })
    }

    pub fn render(&self) -> String {
        let mut out = format!("n {}\n", self.n);
        for (i, b) in self.batches.iter().enumerate() {
            if i > 0 {
                out.push_str("B\n");
            }
            match b {
                TraceBatch::Update(Batch::Insert(es)) => {
                    for e in es {
                        out.push_str(&format!("I {} {} {}\n", e.u, e.v, e.w));
                    }
                }
                TraceBatch::Update(Batch::Delete(ps)) => {
                    for (u, v) in ps {
                        out.push_str(&format!("D {u} {v}\n"));
                    }
                }
                TraceBatch::Query(cmds) => {
                    for c in cmds {
                        match c {
                            Command::Same { s, t, theta } => {
                                out.push_str(&format!("Q {s} {t} {theta}\n"))
                            }
                            Command::Group { members, theta } => {
                                out.push_str(&format!("G {}", members.len()));
                                for m in members {
                                    out.push_str(&format!(" {m}"));
                                }
                                out.push_str(&format!(" {theta}\n"));
                            }
                            Command::Count { theta } => out.push_str(&format!("C {theta}\n")),
                            _ => unreachable!(),
                        }
                    }
                }
            }
        }
        out
    }
}
