//! Seeded workload generation.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use dynmsf::graph::{pair, Batch, Command, Pair, Trace, TraceBatch, WeightedEdge};
use rand::seq::IteratorRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GenError {
    #[error("infeasible workload: {0}")]
    InfeasibleMix(String),
    #[error("bad op mix `{0}`; expected insert:delete:query weights")]
    BadMix(String),
}

/// Relative frequencies of insert, delete and query batches.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OpMix {
    pub insert: u32,
    pub delete: u32,
    pub query: u32,
}

impl Default for OpMix {
    fn default() -> Self {
        OpMix {
            insert: 1,
            delete: 1,
            query: 0,
        }
    }
}

impl FromStr for OpMix {
    type Err = GenError;

    fn from_str(s: &str) -> Result<Self, GenError> {
        let parts: Vec<u32> = s
            .split(':')
            .map(|p| p.trim().parse())
            .collect::<Result<_, _>>()
            .map_err(|_| GenError::BadMix(s.into()))?;
        match parts[..] {
            [insert, delete, query] => Ok(OpMix { insert, delete, query }),
            [insert, delete] => Ok(OpMix {
                insert,
                delete,
                query: 0,
            }),
            _ => Err(GenError::BadMix(s.into())),
        }
    }
}

impl fmt::Display for OpMix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.insert, self.delete, self.query)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenParams {
    pub n: usize,
    /// Cap on simultaneously present edges.
    pub max_edges: usize,
    /// Total update operations (inserted plus deleted edges) to emit.
    pub ops: usize,
    pub batch_min: usize,
    pub batch_max: usize,
    pub mix: OpMix,
    /// Weights are drawn from `1..=max_weight`; small values force ties.
    pub max_weight: i64,
    /// Consecutive batches of one update kind before the kind is redrawn.
    pub phase: usize,
    pub seed: u64,
}

impl GenParams {
    pub fn new(n: usize, seed: u64) -> Self {
        GenParams {
            n,
            max_edges: 2 * n,
            ops: 10 * n,
            batch_min: 1,
            batch_max: 64,
            mix: OpMix::default(),
            max_weight: 1000,
            phase: 4,
            seed,
        }
    }
}

/// Deterministic workload: every update batch is valid against the edge set
/// left by the batches before it.
pub fn generate(p: &GenParams) -> Result<Trace, GenError> {
    let capacity = p.n * p.n.saturating_sub(1) / 2;
    let infeasible = |msg: &str| Err(GenError::InfeasibleMix(msg.into()));
    if p.mix.insert + p.mix.delete + p.mix.query == 0 {
        return infeasible("all mix weights are zero");
    }
    if p.batch_min == 0 || p.batch_min > p.batch_max {
        return infeasible("batch sizes need 1 ≤ min ≤ max");
    }
    if p.max_weight < 1 {
        return infeasible("weights need max_weight ≥ 1");
    }
    if p.ops > 0 {
        if p.mix.insert == 0 {
            return infeasible("updates requested but inserts disabled, so nothing can be deleted");
        }
        if p.n < 2 || p.max_edges == 0 {
            return infeasible("no edge fits the graph");
        }
    }
    let cap = p.max_edges.min(capacity);
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut live: BTreeSet<Pair> = BTreeSet::new();
    let mut batches = Vec::new();
    let mut done = 0;
    let mut kind = 0;
    let mut left_in_phase = 0;
    while done < p.ops {
        if left_in_phase == 0 {
            let total = p.mix.insert + p.mix.delete + p.mix.query;
            let r = rng.gen_range(0..total);
            kind = if r < p.mix.insert {
                0
            } else if r < p.mix.insert + p.mix.delete {
                1
            } else {
                2
            };
            left_in_phase = p.phase.max(1);
        }
        left_in_phase -= 1;
        if kind == 1 && live.is_empty() || kind == 0 && live.len() >= cap {
            kind = 1 - kind;
        }
        let want = rng.gen_range(p.batch_min..=p.batch_max).min(p.ops - done);
        match kind {
            0 => {
                let room = want.min(cap - live.len());
                let mut edges = Vec::with_capacity(room);
                let mut tries = 0;
                while edges.len() < room && tries < 50 * room {
                    tries += 1;
                    let (u, v) = (rng.gen_range(0..p.n), rng.gen_range(0..p.n));
                    if u != v && live.insert(pair(u, v)) {
                        edges.push(WeightedEdge::new(u, v, rng.gen_range(1..=p.max_weight)));
                    }
                }
                if edges.is_empty() {
                    left_in_phase = 0;
                    continue;
                }
                done += edges.len();
                batches.push(TraceBatch::Update(Batch::Insert(edges)));
            }
            1 => {
                let chosen: Vec<Pair> = live.iter().copied().choose_multiple(&mut rng, want.min(live.len()));
                for q in &chosen {
                    live.remove(q);
                }
                let pairs = chosen
                    .into_iter()
                    .map(|(u, v)| if rng.gen_bool(0.5) { (u, v) } else { (v, u) })
                    .collect::<Vec<_>>();
                done += pairs.len();
                batches.push(TraceBatch::Update(Batch::Delete(pairs)));
            }
            _ => {
                let theta = -rng.gen_range(1..=p.max_weight);
                let cmds = (0..want.min(8))
                    .map(|_| match rng.gen_range(0..3) {
                        0 => Command::Same {
                            s: rng.gen_range(0..p.n),
                            t: rng.gen_range(0..p.n),
                            theta,
                        },
                        1 => {
                            let k = rng.gen_range(1..=p.n.min(8));
                            let members: BTreeSet<usize> = (0..k).map(|_| rng.gen_range(0..p.n)).collect();
                            Command::Group {
                                members: members.into_iter().collect(),
                                theta,
                            }
                        }
                        _ => Command::Count { theta },
                    })
                    .collect();
                batches.push(TraceBatch::Query(cmds));
            }
        }
    }
    Ok(Trace { n: p.n, batches })
}

/// `batches` insert batches of `size` fresh edges followed by deletion of all
/// of them in batches of the same size.
pub fn insert_then_delete(n: usize, size: usize, batches: usize, seed: u64) -> Trace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut live = BTreeSet::new();
    let mut out = Vec::new();
    let mut inserted = Vec::new();
    for _ in 0..batches {
        let mut edges = Vec::with_capacity(size);
        while edges.len() < size {
            let (u, v) = (rng.gen_range(0..n), rng.gen_range(0..n));
            if u != v && live.insert(pair(u, v)) {
                edges.push(WeightedEdge::new(u, v, rng.gen_range(1..=1_000_000)));
                inserted.push(pair(u, v));
            }
        }
        out.push(TraceBatch::Update(Batch::Insert(edges)));
    }
    for chunk in inserted.chunks(size) {
        out.push(TraceBatch::Update(Batch::Delete(chunk.to_vec())));
    }
    Trace { n, batches: out }
}
