mod common;

use common::{close, connected_graph, monte_carlo_commute, random_connected};
use prior_rewire::cayley::trimmed_cayley;
use prior_rewire::spectral::{average_commute_time, commute_time, diameter, effective_resistance, spectral_gap, LaplacianSummary};
use prior_rewire::Graph;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn adding_an_edge_never_increases_resistance(g in connected_graph(12), a in 0usize..12, b in 0usize..12) {
        let n = g.num_nodes();
        prop_assume!(n >= 2);
        let (a, b) = (a % n, b % n);
        prop_assume!(a != b && !g.has_edge(a, b));
        let mut edges = g.edges().to_vec();
        edges.push((a, b));
        let h = Graph::new(n, edges).unwrap();
        let (sg, sh) = (LaplacianSummary::new(&g), LaplacianSummary::new(&h));
        for u in 0..n {
            for v in u + 1..n {
                let before = sg.effective_resistance(u, v).unwrap();
                let after = sh.effective_resistance(u, v).unwrap();
                prop_assert!(after <= before + 1e-9, "R({u},{v}) {before} -> {after}");
            }
        }
    }

    #[test]
    fn commute_time_is_symmetric(g in connected_graph(12)) {
        prop_assume!(g.num_edges() > 0);
        let s = LaplacianSummary::new(&g);
        for u in 0..g.num_nodes() {
            for v in 0..g.num_nodes() {
                prop_assert_eq!(s.commute_time(u, v).unwrap(), s.commute_time(v, u).unwrap());
            }
        }
    }

    #[test]
    fn tree_resistance_is_path_length(n in 2usize..15, seed in any::<u64>()) {
        let tree = random_connected(n, 0, seed);
        let dist = tree.all_pairs_distances();
        for u in 0..n {
            for v in 0..n {
                let r = effective_resistance(&tree, u, v).unwrap();
                prop_assert!(close(r, dist.get(u, v).unwrap() as f64, 1e-9, 1e-9));
            }
        }
    }
}

#[test]
fn monte_carlo_agrees_on_small_graphs() {
    let star = Graph::new(5, [(0, 1), (0, 2), (0, 3), (0, 4)]).unwrap();
    let g = random_connected(10, 4, 11);
    for (graph, u, v) in [(&star, 1, 2), (&g, 0, 9), (&Graph::cycle(6), 0, 3)] {
        let exact = commute_time(graph, u, v).unwrap();
        let mc = monte_carlo_commute(graph, u, v, 20_000, 5);
        assert!(close(mc, exact, 0.05, 0.0), "{mc} vs {exact}");
    }
}

#[test]
fn cayley_beats_path_on_average_commute() {
    let c = trimmed_cayley(30).unwrap().graph;
    assert!(average_commute_time(&c).unwrap() < average_commute_time(&Graph::path(30)).unwrap());
}

#[test]
fn summary_edge_cases() {
    let single = Graph::empty(1);
    assert_eq!(spectral_gap(&single), 0.0);
    assert_eq!(diameter(&single).unwrap(), 0);
    assert!(commute_time(&single, 0, 0).is_err());
    assert!(effective_resistance(&Graph::path(2), 0, 5).is_err());
}
