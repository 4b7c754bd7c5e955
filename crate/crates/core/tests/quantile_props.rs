use dynmsf::euler_forest::prune_parameter;
use dynmsf::quantile::QuantileSummary;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// True rank of every answer, for summaries over distinct integers where
/// `sorted` is the summarized set.
fn assert_ranks(q: &QuantileSummary<u64>, sorted: &[u64]) {
    q.check_invariants().unwrap();
    assert_eq!(q.count() as usize, sorted.len());
    let eps = q.eps();
    for r in 1..=q.count() {
        let y = q.query(r);
        let true_rank = sorted.partition_point(|x| x < y) as f64 + 1.0;
        let r = r as f64;
        assert!(
            true_rank >= r * (1.0 - eps) - 1e-9 && true_rank <= r * (1.0 + eps) + 1e-9,
            "rank {r} answered by {y} of true rank {true_rank} at eps {eps}"
        );
    }
    for (k, x) in q.elems().iter().enumerate() {
        let true_rank = sorted.partition_point(|y| y < x) as u64 + 1;
        assert!(q.rmin()[k] <= true_rank && true_rank <= q.rmax()[k]);
    }
}

fn summarize(set: &[u64], eps: f64) -> QuantileSummary<u64> {
    let mut sorted = set.to_vec();
    sorted.sort_unstable();
    QuantileSummary::from_sorted(&sorted, eps).unwrap()
}

#[test]
fn built_summaries_answer_every_rank() {
    for n in [8u64, 64, 1024, 4096] {
        for eps in [0.5, 0.25, 0.125] {
            let q = QuantileSummary::build(|r| r, n, eps).unwrap();
            let set: Vec<u64> = (1..=n).collect();
            assert_ranks(&q, &set);
            let bound = 3.0 * (eps * n as f64 + 2.0).log2() / eps;
            assert!((q.len() as f64) <= bound, "n={n} eps={eps}: {} > {bound}", q.len());
        }
    }
}

#[test]
fn merged_random_splits() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let set: Vec<u64> = (1..=512).collect();
    for _ in 0..100 {
        let (a, b): (Vec<u64>, Vec<u64>) = set.iter().partition(|_| rng.gen_bool(0.5));
        let eps = [0.5, 0.25, 0.125][rng.gen_range(0..3)];
        let m = summarize(&a, eps).merge(&summarize(&b, eps));
        assert_ranks(&m, &set);
    }
}

#[test]
fn pruned_summaries_keep_their_promise() {
    for n in [64u64, 256, 1024, 4096] {
        for b in [2u64, 4, 8, 16, 32] {
            let q = QuantileSummary::build(|r| r, n, 0.125).unwrap();
            let p = q.prune(b);
            let set: Vec<u64> = (1..=n).collect();
            assert_ranks(&p, &set);
            if p != q {
                assert!((p.eps() - (0.125 + 1.0 / b as f64)).abs() < 1e-12);
            }
            let bound = 3.0 * b as f64 * (n as f64 / b as f64 + 2.0).log2() + 1.0;
            assert!((p.len() as f64) <= bound, "n={n} b={b}: {} > {bound}", p.len());
        }
    }
}

#[test]
fn combine_of_split_halves() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let set: Vec<u64> = (1..=128).collect();
    for _ in 0..50 {
        let (a, b): (Vec<u64>, Vec<u64>) = set.iter().partition(|_| rng.gen_bool(0.5));
        let q1 = summarize(&a, 0.125);
        let q2 = summarize(&b, 0.125);
        let c = q1.combine(&q2, 16);
        assert!((c.eps() - (0.125 + 1.0 / 16.0)).abs() < 1e-12);
        assert_ranks(&c, &set);
    }
    let q = summarize(&set, 0.25);
    let c = QuantileSummary::empty(0.25).combine(&q, 8);
    let p = q.prune(8);
    assert_eq!((c.elems(), c.rmin(), c.rmax()), (p.elems(), p.rmin(), p.rmax()));
    assert!((c.eps() - 0.375).abs() < 1e-12);
}

/// Folds leaves pairwise the way skip-list nodes do, tracking the combine
/// depth `t` and using the matching prune parameter.
fn schedule(leaves: Vec<Vec<u64>>, log_n: u32, rng: &mut ChaCha8Rng) -> (QuantileSummary<u64>, u32) {
    let mut level: Vec<(QuantileSummary<u64>, u32)> = leaves.iter().map(|l| (summarize(l, 0.25), 0)).collect();
    while level.len() > 1 {
        let mut next = Vec::new();
        let mut i = 0;
        while i < level.len() {
            let width = rng.gen_range(1..=3).min(level.len() - i);
            let mut acc = level[i].clone();
            for item in &level[i + 1..i + width] {
                let t = acc.1.max(item.1) + 1;
                acc = (acc.0.combine(&item.0, prune_parameter(log_n, t)), t);
            }
            next.push(acc);
            i += width;
        }
        level = next;
    }
    level.pop().unwrap()
}

#[test]
fn skip_list_schedule_stays_under_one_half() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in [16usize, 256, 4096] {
        let log_n = (n as f64).log2().ceil() as u32;
        let mut all: Vec<u64> = (1..=(4 * n) as u64).collect();
        all.shuffle(&mut rng);
        let leaves: Vec<Vec<u64>> = all.chunks(4).map(|c| c.to_vec()).collect();
        let (q, _) = schedule(leaves, log_n, &mut rng);
        assert!(q.eps() < 0.5, "n={n}: eps {}", q.eps());
        let mut sorted = all.clone();
        sorted.sort_unstable();
        assert_ranks(&q, &sorted);
    }
}

#[test]
fn dump_format() {
    let q = QuantileSummary::build(|r| r, 4, 0.5).unwrap();
    assert_eq!(q.dump(), "0.5 4\n1 1 1\n2 2 2\n3 3 3\n4 4 4\n");
}

fn random_tree(set: &[u64], rng: &mut ChaCha8Rng, depth: u32) -> QuantileSummary<u64> {
    if set.len() <= 8 || depth == 0 {
        let eps = [0.5, 0.25, 0.125][rng.gen_range(0..3)];
        return summarize(set, eps);
    }
    let cut = rng.gen_range(1..set.len());
    let (a, b) = set.split_at(cut);
    let q1 = random_tree(a, rng, depth - 1);
    let q2 = random_tree(b, rng, depth - 1);
    let out = match rng.gen_range(0..3) {
        0 => q1.merge(&q2),
        1 => q1.merge(&q2).prune(rng.gen_range(8..64)),
        _ => q1.combine(&q2, rng.gen_range(8..64)),
    };
    out.check_invariants().unwrap();
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn random_operation_trees(n in 1usize..600, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut set: Vec<u64> = (1..=n as u64).collect();
        set.shuffle(&mut rng);
        let q = random_tree(&set, &mut rng, 5);
        let mut sorted = set.clone();
        sorted.sort_unstable();
        if q.eps() < 1.0 {
            assert_ranks(&q, &sorted);
        }
        prop_assert!(q.elems().iter().all(|x| sorted.binary_search(x).is_ok()));
    }

    #[test]
    fn determinism(n in 1u64..300, b in 1u64..40) {
        let a = QuantileSummary::build(|r| r * 3, n, 0.2).unwrap().prune(b);
        let c = QuantileSummary::build(|r| r * 3, n, 0.2).unwrap().prune(b);
        prop_assert_eq!(a, c);
    }
}
