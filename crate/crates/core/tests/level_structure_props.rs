use dynmsf::graph::{Pair, WeightedEdge};
use dynmsf::level_structure::{LevelStructure, Mode};
use dynmsf::oracle::{kruskal, UnionFind};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_graph(n: usize, m: usize, wmax: i64, rng: &mut ChaCha8Rng) -> Vec<WeightedEdge<i64>> {
    let mut pairs: Vec<Pair> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
    pairs.shuffle(rng);
    pairs
        .into_iter()
        .take(m)
        .map(|(u, v)| WeightedEdge::new(u, v, rng.gen_range(0..wmax)))
        .collect()
}

fn teardown(n: usize, m: usize, wmax: i64, batch: usize, seed: u64, audit_every: usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let edges = random_graph(n, m, wmax, &mut rng);
    let mut s = LevelStructure::init(n, &edges, Mode::Msf, seed).unwrap();
    assert_eq!(s.msf().unwrap(), kruskal(n, &edges));
    let mut alive: Vec<usize> = (0..edges.len()).collect();
    let mut round = 0;
    while !alive.is_empty() {
        alive.shuffle(&mut rng);
        let k = rng.gen_range(1..=batch.min(alive.len()));
        let gone: Vec<usize> = alive.drain(..k).collect();
        let before = s.msf().unwrap();
        let report = s.delete_batch(&gone).unwrap();
        let rest: Vec<_> = alive.iter().map(|&i| edges[i]).collect();
        let after = s.msf().unwrap();
        assert_eq!(after, kruskal(n, &rest), "seed {seed} round {round}");
        let promoted: Vec<_> = after.iter().filter(|e| !before.contains(e)).copied().collect();
        let reported: Vec<_> = report.replacements.iter().map(|&(_, e)| e).collect();
        assert_eq!(reported, promoted);
        let mut uf = UnionFind::new(n);
        for e in &rest {
            uf.union(e.u, e.v);
        }
        for &(u, v) in &report.still_split {
            assert!(!uf.same(u, v));
        }
        if round % audit_every == 0 {
            let problems = s.audit();
            assert!(problems.is_empty(), "seed {seed} round {round}: {problems:?}");
        }
        assert!(s.max_pushes() < s.num_levels().max(1));
        round += 1;
    }
}

#[test]
fn dense_graphs_with_ties() {
    for seed in 0..10 {
        teardown(20, 120, 4, 6, seed, 1);
    }
}

#[test]
fn sixty_four_vertices() {
    for seed in 0..3 {
        teardown(64, 400, 1000, 8, seed, 5);
    }
}

#[test]
fn connectivity_mode_tracks_union_find() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 40;
    let edges = random_graph(n, 120, 1, &mut rng);
    let mut s = LevelStructure::init(n, &edges, Mode::Connectivity, 1).unwrap();
    let mut alive: Vec<usize> = (0..edges.len()).collect();
    while !alive.is_empty() {
        let k = alive.len().min(7);
        let gone: Vec<usize> = alive.drain(..k).collect();
        s.delete_batch(&gone).unwrap();
        let mut uf = UnionFind::new(n);
        for &i in &alive {
            uf.union(edges[i].u, edges[i].v);
        }
        for u in 0..n {
            for v in 0..n {
                assert_eq!(s.connected(u, v), uf.same(u, v));
            }
        }
        assert!(s.audit().is_empty());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn msf_matches_kruskal(n in 2usize..30, density in 1usize..5, seed in any::<u64>()) {
        let m = (n * density).min(n * (n - 1) / 2);
        teardown(n, m, 50, 5, seed, 3);
    }
}
