use std::collections::BTreeMap;

use dynmsf_hac::policy::{Adversarial, Exact, MergePolicy, Reluctant};
use dynmsf_hac::rational::{int, Rational};
use dynmsf_hac::reductions::{
    detect_triangle, has_triangle, random_graph_source, random_set_source, reduction_by_name, reduction_names,
    source_answer, DriverMode, EdgeOp, GadgetInstance, Problem, ReductionError, Source, SourceUpdate,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn policies(lambda: u64, seed: u64) -> Vec<Box<dyn MergePolicy>> {
    let l = int(lambda as i64);
    vec![
        Box::new(Exact::new()),
        Box::new(Adversarial::new(l.clone(), seed)),
        Box::new(Reluctant::new(l)),
    ]
}

/// Graph for the current membership, rebuilt by replaying the edge operations.
fn replayed(base: &BTreeMap<(usize, usize), Rational>, ops: &[EdgeOp]) -> BTreeMap<(usize, usize), Rational> {
    let mut out = base.clone();
    for op in ops {
        match op {
            EdgeOp::Insert(u, v, w) => assert!(out.insert((*u.min(v), *u.max(v)), w.parse().unwrap()).is_none()),
            EdgeOp::Delete(u, v) => assert!(out.remove(&(*u.min(v), *u.max(v))).is_some()),
        }
    }
    out
}

fn edge_map(g: &GadgetInstance) -> BTreeMap<(usize, usize), Rational> {
    g.graph().edges().iter().map(|(u, v, w)| ((*u, *v), w.clone())).collect()
}

fn check(g: &GadgetInstance, src: &Source, seed: u64) {
    let want = source_answer(src, g.problem, g.members());
    for mut p in policies(g.lambda, seed) {
        assert_eq!(
            g.answer(p.as_mut()),
            want,
            "{} λ={} policy={} members={:?} src={src:?}",
            g.reduction,
            g.lambda,
            p.name(),
            g.members()
        );
    }
}

fn source_for(problem: Problem, name: &str, size: usize, rng: &mut impl Rng) -> Source {
    match problem {
        Problem::SubUnion => random_set_source(rng.gen_range(1..=size), rng.gen_range(1..=size), 0.5, rng),
        _ => {
            let lo = if name.ends_with("upgma") { 4 } else { 2 };
            random_graph_source(rng.gen_range(lo..=size.max(lo)), 0.5, rng)
        }
    }
}

/// Random add/remove walk; every step checks the gadget answer and that the
/// emitted edge operations turn the old graph into the new one.
fn walk(name: &str, lambda: u64, size: usize, steps: usize, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = reduction_by_name(name).unwrap();
    let src = source_for(r.problem(), name, size, &mut rng);
    let k = src.elements(r.problem());
    let members: Vec<bool> = (0..k).map(|_| rng.gen_bool(0.5)).collect();
    let mut g = r.build(&src, &members, lambda).unwrap();
    check(&g, &src, seed);
    let start = g.snapshot();
    let adding = rng.gen_bool(0.5);
    for step in 0..steps {
        let e = rng.gen_range(0..k);
        let update = if r.partial() {
            if adding == g.members()[e] {
                continue;
            }
            if adding { SourceUpdate::Add(e) } else { SourceUpdate::Remove(e) }
        } else if g.members()[e] {
            SourceUpdate::Remove(e)
        } else {
            SourceUpdate::Add(e)
        };
        let before = edge_map(&g);
        let ops = g.apply(update).unwrap();
        assert_eq!(replayed(&before, &ops), edge_map(&g), "{name} step {step}");
        check(&g, &src, seed + step as u64);
    }
    g.restore(&start);
    assert_eq!(g.members(), members.as_slice());
}

#[test]
fn graph_gadgets_answer_connectivity() {
    for name in ["subconn-complete", "subconn-wpgma", "connsub-complete", "connsub-wpgma"] {
        for lambda in [1, 2, 4] {
            for seed in 0..12 {
                walk(name, lambda, 9, 8, seed);
            }
        }
    }
}

#[test]
fn average_graph_gadgets_answer_connectivity() {
    for name in ["subconn-upgma", "connsub-upgma"] {
        for lambda in [1, 2, 4] {
            for seed in 0..6 {
                walk(name, lambda, 6, 5, seed);
            }
        }
    }
}

#[test]
fn set_gadgets_answer_coverage() {
    for name in ["subunion-complete", "subunion-wpgma", "subunion-upgma-count"] {
        for lambda in [1, 2, 4] {
            for seed in 0..12 {
                walk(name, lambda, 5, 8, seed);
            }
        }
    }
    for lambda in [1, 2] {
        for seed in 0..6 {
            walk("subunion-upgma", lambda, 4, 5, seed);
        }
    }
    for seed in 0..4 {
        walk("subunion-upgma", 4, 2, 4, seed);
    }
}

#[test]
fn partial_gadgets_answer_coverage() {
    for seed in 0..6 {
        walk("subunion-upgma-partial", 1, 3, 5, seed);
        walk("subunion-upgma-partial", 2, 2, 4, seed);
        for lambda in [1, 2, 4] {
            walk("subunion-upgma-count-partial", lambda, 4, 6, seed);
        }
    }
}

#[test]
fn partial_gadgets_reject_mixed_directions() {
    let src = Source::Sets {
        universe: 2,
        sets: vec![vec![0], vec![1]],
    };
    for name in ["subunion-upgma-partial", "subunion-upgma-count-partial"] {
        let mut g = reduction_by_name(name).unwrap().build(&src, &[true, false], 1).unwrap();
        g.apply(SourceUpdate::Remove(0)).unwrap();
        assert_eq!(g.apply(SourceUpdate::Add(1)), Err(ReductionError::NotMonotone("remove")));
        let mut full = reduction_by_name("subunion-upgma").unwrap().build(&src, &[true, false], 1).unwrap();
        full.apply(SourceUpdate::Remove(0)).unwrap();
        full.apply(SourceUpdate::Add(1)).unwrap();
    }
}

#[test]
fn triangle_driver_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for round in 0..24 {
        let n = rng.gen_range(3..9);
        let Source::Graph { edges, .. } = random_graph_source(n, 0.35, &mut rng) else { unreachable!() };
        let src = Source::Graph { n, edges: edges.clone(), s: 0, t: 1 };
        let want = has_triangle(n, &edges);
        for lambda in [1, 2, 4] {
            for mode in [DriverMode::Dynamic, DriverMode::Decremental, DriverMode::Incremental] {
                for mut p in policies(lambda, round) {
                    assert_eq!(detect_triangle(&src, lambda, mode, p.as_mut()).unwrap(), want, "{mode:?} λ={lambda}");
                }
            }
        }
    }
}

#[test]
fn every_registered_name_builds() {
    let graph = Source::Graph {
        n: 4,
        edges: vec![(0, 1), (1, 2), (2, 3)],
        s: 0,
        t: 3,
    };
    let sets = Source::Sets {
        universe: 2,
        sets: vec![vec![0], vec![0, 1]],
    };
    assert_eq!(reduction_names().len(), 13);
    for name in reduction_names() {
        let r = reduction_by_name(name).unwrap();
        let src = if r.problem() == Problem::SubUnion { &sets } else { &graph };
        let g = r.build(src, &vec![true; src.elements(r.problem())], 1).unwrap();
        assert_eq!(g.reduction, name);
        check(&g, src, 0);
    }
}

#[test]
fn gadget_sizes() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for lambda in [1u64, 2, 4] {
        let lam = lambda as usize;
        let graph = random_graph_source(6, 0.5, &mut rng);
        let n = 6;
        let size = |name: &str| reduction_by_name(name).unwrap().build(&graph, &[false; 6], lambda).unwrap().n;
        assert_eq!(size("subconn-complete"), 2 * n);
        let ell = (2 * lam).next_power_of_two().trailing_zeros() as usize;
        assert_eq!(size("subconn-wpgma"), n * (2 + ell));
        assert_eq!(size("subconn-upgma"), n + lam * n * n * n);
        let tri = reduction_by_name("triangle-upgma-count").unwrap().build(&graph, &[false; 12], lambda).unwrap();
        assert_eq!(tri.n, 2 * n * (lam + 1));

        let (m, u) = (3, 2);
        let sets = random_set_source(u, m, 0.5, &mut rng);
        let build = |name: &str| reduction_by_name(name).unwrap().build(&sets, &[true; 3], lambda).unwrap();
        assert_eq!(build("subunion-complete").n, m + u + 3);
        let lp7 = 2 * (lam + 1).pow(7);
        let ell = lp7.next_power_of_two().trailing_zeros() as usize;
        assert_eq!(build("subunion-wpgma").n, m + u + 3 * ell + 5);
        for name in ["subunion-upgma-count", "subunion-upgma-count-partial"] {
            let g = build(name);
            let lx: usize = g.constant("l_x").unwrap().to_integer().try_into().unwrap();
            assert_eq!(g.n, m + u + lx + 2);
        }
        if lambda <= 2 {
            let g = build("subunion-upgma");
            let c = |k: &str| -> usize { g.constant(k).unwrap().to_integer().try_into().unwrap() };
            assert_eq!(g.n, m + lam * u + c("l_y") + c("l_x") + 4);
            assert_eq!(c("w_t"), (lam + 1) * lam);
            assert_eq!(c("l_y"), lam * c("w_t") * u);
            assert_eq!(c("L"), (lam + 1).pow(2) * lam * (c("l_y") + 1 + m + lam * u));
            assert_eq!(c("l_x") * lam, m * c("L"));
        }
    }
}

/// The weighted-average star keeps the out-edge endpoint within a factor
/// `1 + (2λ − 1)2^{−ℓ} < 2` of the heavy weight after halving through `ℓ`
/// leaf merges.
#[test]
fn star_decay_stays_below_two() {
    for lambda in 1u64..=64 {
        let two_lambda = 2 * lambda;
        let ell = two_lambda.next_power_of_two().trailing_zeros();
        let factor = 1.0 + (two_lambda as f64 - 1.0) / 2f64.powi(ell as i32);
        assert!(factor < 2.0, "λ={lambda} ℓ={ell}");
    }
}

/// At `θ = 4/n²` the average-linkage gadget with `S = V` ends with exactly the
/// star cluster and one cluster per component of `G`.
#[test]
fn average_threshold_leaves_components() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..10 {
        let src = random_graph_source(rng.gen_range(4..7), 0.4, &mut rng);
        let n = src.elements(Problem::ConnSub);
        let g = reduction_by_name("connsub-upgma").unwrap().build(&src, &vec![true; n], 1).unwrap();
        let clusters = dynmsf_hac::clusters_at(
            &g.graph(),
            dynmsf_hac::linkage_by_name("average").unwrap().as_ref(),
            &g.theta,
            &mut Exact::new(),
        );
        let Source::Graph { edges, .. } = &src else { unreachable!() };
        let mut uf = dynmsf::oracle::UnionFind::new(n);
        for &(u, v) in edges {
            uf.union(u, v);
        }
        assert_eq!(clusters.len(), 1 + uf.component_count());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn complete_and_wpgma_gadgets_are_sound(seed in any::<u64>(), li in 0usize..3, which in 0usize..6) {
        let name = ["subconn-complete", "connsub-complete", "subconn-wpgma", "connsub-wpgma", "subunion-complete", "subunion-wpgma"][which];
        walk(name, [1, 2, 4][li], 7, 6, seed);
    }

    #[test]
    fn counting_gadgets_are_sound(seed in any::<u64>(), li in 0usize..3) {
        walk("subunion-upgma-count", [1, 2, 4][li], 5, 6, seed);
    }
}
