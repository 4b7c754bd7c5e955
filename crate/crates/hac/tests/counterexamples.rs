use dynmsf_hac::counterexamples::{counterexample, CounterexampleKind};
use dynmsf_hac::dendrogram::dendrogram_diff;
use dynmsf_hac::engine::{run_hac, HacGraph};
use dynmsf_hac::linkage::linkage_by_name;
use dynmsf_hac::policy::Exact;
use dynmsf_hac::rational::int;
use dynmsf_hac::Dendrogram;

fn dendro(g: &HacGraph, linkage: &str) -> Dendrogram {
    let l = linkage_by_name(linkage).unwrap();
    run_hac(g, l.as_ref(), &int(0), &mut Exact::new()).dendrogram
}

fn ratio(kind: CounterexampleKind, linkage: &str, k: usize) -> f64 {
    let c = counterexample(kind, k).unwrap();
    let before = dendro(&c.graph, linkage);
    let after = dendro(&c.with_extra(), linkage);
    dendrogram_diff(&before, &after).unwrap() as f64 / c.graph.n() as f64
}

#[test]
fn single_linkage_figure() {
    let c = counterexample(CounterexampleKind::Single, 3).unwrap();
    assert_eq!(dendro(&c.graph, "single").render(), "(0 (1 2):3):1\n((3 4):4 5):2\n");
    assert_eq!(dendro(&c.with_extra(), "single").render(), "(0 ((1 ((2 3):5 4):4):3 5):2):1\n");
}

#[test]
fn weighted_average_figure() {
    let c = counterexample(CounterexampleKind::WpgmaComplete, 2).unwrap();
    assert_eq!(
        dendro(&c.graph, "weighted_average").render(),
        "(((((0 2):8 1):7 4):6 3):5 5):1\n"
    );
    assert_eq!(
        dendro(&c.with_extra(), "weighted_average").render(),
        "(((0 5):9 (2 4):6):9/2 (1 3):5):4\n"
    );
}

/// With the extra edge every pendant pair `(i, k + i)` becomes a dendrogram
/// node; without it none does.
#[test]
fn pendant_pairs_merge_directly() {
    for k in [2, 3, 5, 8] {
        for kind in [CounterexampleKind::WpgmaComplete, CounterexampleKind::Upgma] {
            let c = counterexample(kind, k).unwrap();
            for &linkage in kind.linkages() {
                let pairs = |d: &Dendrogram| {
                    (d.leaves()..d.node_count())
                        .filter(|&x| (1..=k).any(|i| d.content(x) == vec![i, k + i]))
                        .count()
                };
                assert_eq!(pairs(&dendro(&c.graph, linkage)), 0, "{kind} {linkage} k={k}");
                assert_eq!(pairs(&dendro(&c.with_extra(), linkage)), k, "{kind} {linkage} k={k}");
            }
        }
    }
}

#[test]
fn change_stays_linear() {
    for kind in CounterexampleKind::ALL {
        for &linkage in kind.linkages() {
            let base = ratio(kind, linkage, 2);
            assert!(base > 0.0);
            for k in [4, 8, 16, 32, 64] {
                let r = ratio(kind, linkage, k);
                assert!(r >= base / 10.0 && r > 0.0, "{kind} {linkage} k={k}: {r} vs {base}");
            }
        }
    }
}
