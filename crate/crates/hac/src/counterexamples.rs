//! Graphs whose dendrogram changes in Θ(n) nodes after one edge insertion.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::engine::HacGraph;
use crate::rational::{int, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CounterexampleKind {
    /// Two stars with interleaved odd and even weights, joined by a bridge.
    Single,
    /// Hub 0 with pendant pairs `(i, k + i)` and a low-weight sink `n − 1`.
    WpgmaComplete,
    /// Hub 0 with pendant pairs and a heavy star centered on `n − 1`.
    Upgma,
}

impl CounterexampleKind {
    pub const ALL: [CounterexampleKind; 3] = [
        CounterexampleKind::Single,
        CounterexampleKind::WpgmaComplete,
        CounterexampleKind::Upgma,
    ];

    /// Linkages the family is meant for.
    pub fn linkages(self) -> &'static [&'static str] {
        match self {
            CounterexampleKind::Single => &["single"],
            CounterexampleKind::WpgmaComplete => &["weighted_average", "complete"],
            CounterexampleKind::Upgma => &["average"],
        }
    }
}

impl fmt::Display for CounterexampleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CounterexampleKind::Single => "single",
            CounterexampleKind::WpgmaComplete => "wpgma_complete",
            CounterexampleKind::Upgma => "upgma",
        })
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CounterexampleError {
    #[error("unknown counterexample family `{0}`")]
    UnknownKind(String),
    #[error("family parameter k must be at least 2, got {0}")]
    TooSmall(usize),
}

impl FromStr for CounterexampleKind {
    type Err = CounterexampleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "single" => Ok(CounterexampleKind::Single),
            "wpgma_complete" | "wpgma" | "complete" => Ok(CounterexampleKind::WpgmaComplete),
            "upgma" | "average" => Ok(CounterexampleKind::Upgma),
            _ => Err(CounterexampleError::UnknownKind(s.into())),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Counterexample {
    pub graph: HacGraph,
    pub extra: (usize, usize, Rational),
}

impl Counterexample {
    pub fn with_extra(&self) -> HacGraph {
        let (u, v, w) = self.extra.clone();
        self.graph.with_edge(u, v, w).expect("extra edge is new")
    }
}

/// Builds the family member with parameter `k`:
///
/// * `Single`: `n = 2k`; star on center `k − 1` with leaf `j` at weight
///   `2j + 1`, star on center `k` with leaf `k + 1 + j` at weight
///   `n − 2 − 2j`; extra edge `{k − 1, k}` of weight `n − 1`.
/// * `WpgmaComplete`: `n = 2k + 2`; for `i ∈ 1..=k` edges `{0, i}` at
///   `3k + i`, `{i, k + i}` at `2k + i`, `{i, n − 1}` at 1; extra edge
///   `{0, n − 1}` at `4k + 1`.
/// * `Upgma`: `n = 4k + 1`; for `i ∈ 1..=k` edges `{0, i}` at `2k² + i` and
///   `{i, k + i}` at `k + i`; `{i, n − 1}` at `8k³` for `i ∈ 2k+1..4k`;
///   extra edge `{0, n − 1}` at `8k³`.
pub fn counterexample(kind: CounterexampleKind, k: usize) -> Result<Counterexample, CounterexampleError> {
    if k < 2 {
        return Err(CounterexampleError::TooSmall(k));
    }
    let w = |x: usize| int(x as i64);
    let mut edges = Vec::new();
    let (n, extra) = match kind {
        CounterexampleKind::Single => {
            let n = 2 * k;
            for j in 0..k - 1 {
                edges.push((j, k - 1, w(2 * j + 1)));
                edges.push((k, k + 1 + j, w(n - 2 - 2 * j)));
            }
            (n, (k - 1, k, w(n - 1)))
        }
        CounterexampleKind::WpgmaComplete => {
            let n = 2 * k + 2;
            for i in 1..=k {
                edges.push((0, i, w(3 * k + i)));
                edges.push((i, k + i, w(2 * k + i)));
                edges.push((i, n - 1, w(1)));
            }
            (n, (0, n - 1, w(4 * k + 1)))
        }
        CounterexampleKind::Upgma => {
            let n = 4 * k + 1;
            for i in 1..=k {
                edges.push((0, i, w(2 * k * k + i)));
                edges.push((i, k + i, w(k + i)));
            }
            for i in 2 * k + 1..4 * k {
                edges.push((i, n - 1, w(8 * k * k * k)));
            }
            (n, (0, n - 1, w(8 * k * k * k)))
        }
    };
    Ok(Counterexample {
        graph: HacGraph::new(n, edges).expect("family graphs are simple"),
        extra,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes() {
        for k in [2, 3, 8] {
            let s = counterexample(CounterexampleKind::Single, k).unwrap();
            assert_eq!((s.graph.n(), s.graph.edges().len()), (2 * k, 2 * k - 2));
            let c = counterexample(CounterexampleKind::WpgmaComplete, k).unwrap();
            assert_eq!((c.graph.n(), c.graph.edges().len()), (2 * k + 2, 3 * k));
            let u = counterexample(CounterexampleKind::Upgma, k).unwrap();
            assert_eq!((u.graph.n(), u.graph.edges().len()), (4 * k + 1, 4 * k - 1));
        }
        assert_eq!(
            counterexample(CounterexampleKind::Upgma, 1).unwrap_err(),
            CounterexampleError::TooSmall(1)
        );
    }

    #[test]
    fn figure_one_graph() {
        let s = counterexample(CounterexampleKind::Single, 3).unwrap();
        let expect: Vec<_> = [(0, 2, 1), (1, 2, 3), (3, 4, 4), (3, 5, 2)]
            .into_iter()
            .map(|(u, v, x)| (u, v, int(x)))
            .collect();
        assert_eq!(s.graph.edges(), expect.as_slice());
        assert_eq!(s.extra, (2, 3, int(5)));
    }

    #[test]
    fn names_round_trip() {
        for kind in CounterexampleKind::ALL {
            assert_eq!(kind.to_string().parse::<CounterexampleKind>().unwrap(), kind);
        }
    }
}
