use std::collections::BTreeSet;

use dynmsf::graph::{pair, Batch, Pair, WeightedEdge};
use dynmsf::oracle::kruskal;
use dynmsf::DynamicMsf;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random mixed stream; every batch is all-insert or all-delete.
fn stream(n: usize, batches: usize, max_batch: usize, wmax: i64, seed: u64) -> Vec<Batch<i64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut present: BTreeSet<Pair> = BTreeSet::new();
    let mut out = Vec::new();
    let full = n * (n - 1) / 2;
    for _ in 0..batches {
        let k = rng.gen_range(1..=max_batch);
        let insert = present.is_empty() || (present.len() < full && rng.gen_bool(0.55));
        if insert {
            let mut es = Vec::new();
            let mut taken = BTreeSet::new();
            for _ in 0..4 * k {
                if es.len() == k {
                    break;
                }
                let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
                let p = pair(a, b);
                if a != b && !present.contains(&p) && taken.insert(p) {
                    es.push(WeightedEdge::new(a, b, rng.gen_range(0..wmax)));
                }
            }
            present.extend(taken);
            if !es.is_empty() {
                out.push(Batch::Insert(es));
            }
        } else {
            let mut all: Vec<Pair> = present.iter().copied().collect();
            all.shuffle(&mut rng);
            all.truncate(k);
            for p in &all {
                present.remove(p);
            }
            out.push(Batch::Delete(all));
        }
    }
    out
}

fn replay(n: usize, batches: &[Batch<i64>], audit_every: usize) -> Vec<String> {
    let mut d = DynamicMsf::with_seed(n, 3);
    let mut sums = Vec::new();
    for (k, b) in batches.iter().enumerate() {
        d.apply(b).unwrap();
        assert_eq!(d.msf_edges(), kruskal(n, &d.edges()), "batch {k}");
        if audit_every > 0 && k % audit_every == 0 {
            let problems = d.audit();
            assert!(problems.is_empty(), "batch {k}: {problems:?}");
        }
        sums.push(d.checksum());
    }
    sums
}

#[test]
fn small_streams_with_full_audits() {
    for seed in 0..8 {
        let batches = stream(16, 120, 8, 6, seed);
        replay(16, &batches, 1);
    }
}

#[test]
fn medium_stream() {
    let batches = stream(64, 200, 32, 1000, 41);
    replay(64, &batches, 10);
}

#[test]
fn worker_count_does_not_change_results() {
    let batches = stream(32, 80, 16, 20, 9);
    let baseline = replay(32, &batches, 0);
    for workers in [1, 2, 4] {
        let mut d = DynamicMsf::with_seed(32, 3);
        d.set_workers(workers);
        let sums: Vec<String> = batches
            .iter()
            .map(|b| {
                d.apply(b).unwrap();
                d.checksum()
            })
            .collect();
        assert_eq!(sums, baseline);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn matches_kruskal(n in 2usize..24, wmax in 1i64..40, seed in any::<u64>()) {
        let batches = stream(n, 40, 6, wmax, seed);
        replay(n, &batches, 2);
    }
}
