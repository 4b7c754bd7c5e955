use std::collections::BTreeMap;

use dynmsf::graph::pair;
use dynmsf::oracle::components;
use dynmsf::slhac::SimilarityGraph;
use dynmsf::WeightedEdge;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Agglomerates clusters one merge at a time, always taking the most similar
/// linked pair, until the best similarity drops below `theta`.
fn agglomerate(n: usize, sims: &BTreeMap<(usize, usize), i64>, theta: i64) -> Vec<usize> {
    let mut label: Vec<usize> = (0..n).collect();
    loop {
        let mut best: Option<(i64, usize, usize)> = None;
        for (&(u, v), &s) in sims {
            let (a, b) = (label[u], label[v]);
            if a != b && best.is_none_or(|(bs, _, _)| s > bs) {
                best = Some((s, a, b));
            }
        }
        match best {
            Some((s, a, b)) if s >= theta => {
                for l in label.iter_mut() {
                    if *l == b {
                        *l = a;
                    }
                }
            }
            _ => return label,
        }
    }
}

fn compare(n: usize, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = SimilarityGraph::new(n);
    let mut sims: BTreeMap<(usize, usize), i64> = BTreeMap::new();
    for _ in 0..6 {
        if sims.is_empty() || rng.gen_bool(0.7) {
            let mut batch = Vec::new();
            for _ in 0..rng.gen_range(1..2 * n) {
                let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
                if a != b && !sims.contains_key(&pair(a, b)) {
                    let s = rng.gen_range(-5..10);
                    sims.insert(pair(a, b), s);
                    batch.push((a, b, s));
                }
            }
            g.insert(&batch).unwrap();
        } else {
            let mut keys: Vec<_> = sims.keys().copied().collect();
            keys.shuffle(&mut rng);
            keys.truncate(rng.gen_range(1..=keys.len()));
            for k in &keys {
                sims.remove(k);
            }
            g.delete(&keys).unwrap();
        }
        let mut thetas: Vec<i64> = sims.values().copied().collect();
        thetas.sort_unstable();
        thetas.dedup();
        let mut sweep = Vec::new();
        for w in thetas.windows(2) {
            sweep.push(w[0]);
            sweep.push(w[0] + (w[1] - w[0]) / 2);
        }
        sweep.extend(thetas.last().copied());
        sweep.extend([thetas.first().map_or(0, |t| t - 1), thetas.last().map_or(0, |t| t + 1)]);
        let edges: Vec<WeightedEdge<i64>> = sims.iter().map(|(&(u, v), &s)| WeightedEdge::new(u, v, s)).collect();
        for theta in sweep {
            let label = agglomerate(n, &sims, theta);
            for s in 0..n {
                for t in 0..n {
                    assert_eq!(g.same_cluster(s, t, theta), label[s] == label[t], "θ={theta} s={s} t={t}");
                }
            }
            let thresholded = components(n, &edges, |e| e.w >= theta);
            assert_eq!(g.num_clusters(theta), thresholded.len());
            let mut members: Vec<usize> = (0..n).collect();
            members.shuffle(&mut rng);
            members.truncate(rng.gen_range(1..=n));
            let groups = g.group_by_cluster(&members, theta);
            members.sort_unstable();
            let mut expected: Vec<Vec<usize>> = Vec::new();
            for &m in &members {
                match expected.iter_mut().find(|grp| label[grp[0]] == label[m]) {
                    Some(grp) => grp.push(m),
                    None => expected.push(vec![m]),
                }
            }
            assert_eq!(groups, expected);
        }
    }
}

#[test]
fn path_example() {
    let mut g = SimilarityGraph::new(4);
    g.insert(&[(0, 1, 5), (1, 2, 1), (2, 3, 5)]).unwrap();
    assert_eq!(g.group_by_cluster(&[0, 2, 3], 2), vec![vec![0], vec![2, 3]]);
    assert!(!g.same_cluster(0, 3, 6));
}

#[test]
fn fifty_random_graphs() {
    for seed in 0..50 {
        compare(1 + (seed as usize * 7) % 40, seed);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]
    #[test]
    fn raising_theta_refines(n in 2usize..30, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut g = SimilarityGraph::new(n);
        let mut batch = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.gen_bool(0.3) {
                    batch.push((u, v, rng.gen_range(0..20)));
                }
            }
        }
        g.insert(&batch).unwrap();
        let all: Vec<usize> = (0..n).collect();
        for theta in 0..20 {
            let coarse = g.group_by_cluster(&all, theta);
            let fine = g.group_by_cluster(&all, theta + 1);
            prop_assert!(fine.iter().all(|f| coarse.iter().any(|c| f.iter().all(|x| c.contains(x)))));
        }
    }
}
