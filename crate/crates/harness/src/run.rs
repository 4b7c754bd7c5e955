//! Replaying workloads through the dynamic MSF with optional oracle checks.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use dynmsf::dynamic_msf::{msf_checksum, DynamicMsf};
use dynmsf::graph::{pair, Batch, BatchError, Command, Pair, Trace, TraceBatch, WeightedEdge};
use dynmsf::oracle::{kruskal, UnionFind};
use dynmsf::slhac::SimilarityGraph;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckMode {
    None,
    Oracle,
    /// Oracle comparison plus structural audits.
    Audit,
}

impl FromStr for CheckMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "none" => Ok(CheckMode::None),
            "oracle" => Ok(CheckMode::Oracle),
            "audit" | "oracle+audit" => Ok(CheckMode::Audit),
            _ => Err(format!("unknown check mode `{s}` (none, oracle, oracle+audit)")),
        }
    }
}

impl fmt::Display for CheckMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CheckMode::None => "none",
            CheckMode::Oracle => "oracle",
            CheckMode::Audit => "oracle+audit",
        })
    }
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub check: CheckMode,
    pub workers: usize,
    /// Oracle comparison on every `oracle_every`-th batch.
    pub oracle_every: usize,
    /// Audit on every `audit_every`-th batch when auditing.
    pub audit_every: usize,
    pub seed: u64,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            check: CheckMode::Oracle,
            workers: 1,
            oracle_every: 1,
            audit_every: 1,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mismatch {
    pub batch: usize,
    pub what: String,
}

#[derive(Clone, Debug, Default)]
pub struct RunReport {
    pub workers: usize,
    /// MSF checksum after every batch, queries included.
    pub checksums: Vec<String>,
    pub mismatches: Vec<Mismatch>,
    /// `(batch, violation)` pairs from structural audits.
    pub violations: Vec<(usize, String)>,
    pub audited: usize,
    pub timings: Vec<Duration>,
    /// One line per query command, in order.
    pub answers: Vec<String>,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty() && self.violations.is_empty()
    }

    pub fn first_mismatch(&self) -> Option<usize> {
        self.mismatches.first().map(|m| m.batch)
    }

    pub fn final_checksum(&self) -> String {
        self.checksums.last().cloned().unwrap_or_else(|| msf_checksum::<i64>(&[]))
    }

    /// Exit status: 0 pass, 2 oracle mismatch, 3 invariant violation.
    pub fn exit_code(&self) -> i32 {
        if !self.mismatches.is_empty() {
            2
        } else if !self.violations.is_empty() {
            3
        } else {
            0
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RunError {
    #[error("batch {batch}: {source}")]
    InvalidBatch { batch: usize, source: BatchError },
    #[error("workload needs n ≥ 1")]
    Empty,
}

fn oracle_answer(n: usize, edges: &BTreeMap<Pair, i64>, cmd: &Command) -> String {
    let theta = match cmd {
        Command::Same { theta, .. } | Command::Group { theta, .. } | Command::Count { theta } => *theta,
        _ => unreachable!("update command in a query batch"),
    };
    let mut uf = UnionFind::new(n);
    for (&(u, v), &w) in edges {
        if -w >= theta {
            uf.union(u, v);
        }
    }
    match cmd {
        Command::Same { s, t, .. } => format!("Q {s} {t} {theta} {}", uf.same(*s, *t)),
        Command::Group { members, .. } => {
            let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
            for &m in members {
                groups.entry(uf.find(m)).or_default().push(m);
            }
            let mut g: Vec<Vec<usize>> = groups.into_values().collect();
            g.sort();
            format!("G {theta} {g:?}")
        }
        _ => format!("C {theta} {}", uf.component_count()),
    }
}

fn answer(sg: &SimilarityGraph, cmd: &Command) -> String {
    match cmd {
        Command::Same { s, t, theta } => format!("Q {s} {t} {theta} {}", sg.same_cluster(*s, *t, *theta)),
        Command::Group { members, theta } => {
            let mut g = sg.group_by_cluster(members, *theta);
            for x in &mut g {
                x.sort();
            }
            g.sort();
            format!("G {theta} {g:?}")
        }
        Command::Count { theta } => format!("C {theta} {}", sg.num_clusters(*theta)),
        _ => unreachable!("update command in a query batch"),
    }
}

pub fn run(trace: &Trace, opts: &RunOptions) -> Result<RunReport, RunError> {
    if trace.n == 0 {
        return Err(RunError::Empty);
    }
    let mut msf = DynamicMsf::with_seed(trace.n, opts.seed);
    if opts.workers > 1 {
        msf.set_workers(opts.workers);
    }
    let mut sg = SimilarityGraph::from_msf(msf);
    let mut edges: BTreeMap<Pair, i64> = BTreeMap::new();
    let mut report = RunReport {
        workers: opts.workers,
        ..RunReport::default()
    };
    for (i, batch) in trace.batches.iter().enumerate() {
        let check = opts.check != CheckMode::None && i % opts.oracle_every.max(1) == 0;
        let start = Instant::now();
        match batch {
            TraceBatch::Update(b) => {
                sg.inner_mut()
                    .apply(b)
                    .map_err(|source| RunError::InvalidBatch { batch: i, source })?;
                report.timings.push(start.elapsed());
                match b {
                    Batch::Insert(es) => edges.extend(es.iter().map(|e| (e.pair(), e.w))),
                    Batch::Delete(ps) => {
                        for &(u, v) in ps {
                            edges.remove(&pair(u, v));
                        }
                    }
                }
                if check {
                    let all: Vec<WeightedEdge<i64>> =
                        edges.iter().map(|(&(u, v), &w)| WeightedEdge::new(u, v, w)).collect();
                    if sg.inner().msf_edges() != kruskal(trace.n, &all) {
                        report.mismatches.push(Mismatch {
                            batch: i,
                            what: "forest differs from Kruskal".into(),
                        });
                    }
                }
            }
            TraceBatch::Query(cmds) => {
                let got: Vec<String> = cmds.iter().map(|c| answer(&sg, c)).collect();
                report.timings.push(start.elapsed());
                if check {
                    for (c, g) in cmds.iter().zip(&got) {
                        let want = oracle_answer(trace.n, &edges, c);
                        if &want != g {
                            report.mismatches.push(Mismatch {
                                batch: i,
                                what: format!("query answered `{g}`, oracle says `{want}`"),
                            });
                        }
                    }
                }
                report.answers.extend(got);
            }
        }
        if opts.check == CheckMode::Audit && i % opts.audit_every.max(1) == 0 {
            report.audited += 1;
            report
                .violations
                .extend(sg.inner().audit().into_iter().map(|v| (i, v)));
        }
        report.checksums.push(sg.inner().checksum());
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workload::{generate, GenParams};

    #[test]
    fn worked_trace_final_forest() {
        let text = "n 4\nI 0 1 4\nI 0 2 2\nI 1 3 3\nI 0 3 5\nI 1 2 6\nB\nI 2 3 1\nB\nD 0 2\nD 1 3\n";
        let t = Trace::parse(text, None).unwrap();
        let r = run(&t, &RunOptions { check: CheckMode::Audit, ..RunOptions::default() }).unwrap();
        assert!(r.passed(), "{:?}", r.mismatches);
        let want = [WeightedEdge::new(2, 3, 1), WeightedEdge::new(0, 1, 4), WeightedEdge::new(0, 3, 5)];
        assert_eq!(r.final_checksum(), msf_checksum(&want));
    }

    #[test]
    fn empty_workload_gives_empty_report() {
        let r = run(&Trace { n: 5, batches: vec![] }, &RunOptions::default()).unwrap();
        assert!(r.checksums.is_empty() && r.passed());
        assert_eq!(r.exit_code(), 0);
    }

    #[test]
    fn queries_match_oracle_and_unchecked_mode() {
        let mut p = GenParams::new(30, 2);
        p.mix = "2:1:1".parse().unwrap();
        p.max_weight = 20;
        let t = generate(&p).unwrap();
        let checked = run(&t, &RunOptions::default()).unwrap();
        assert!(checked.passed(), "{:?}", checked.mismatches);
        assert!(!checked.answers.is_empty());
        let plain = run(&t, &RunOptions { check: CheckMode::None, ..RunOptions::default() }).unwrap();
        assert_eq!(plain.checksums, checked.checksums);
        assert_eq!(plain.answers, checked.answers);
    }

    #[test]
    fn invalid_batch_is_reported() {
        let t = Trace::parse("n 3\nD 0 1\n", None).unwrap();
        assert!(matches!(run(&t, &RunOptions::default()), Err(RunError::InvalidBatch { batch: 0, .. })));
    }
}
