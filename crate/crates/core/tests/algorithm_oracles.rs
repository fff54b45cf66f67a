//! Graph algorithms against brute-force references on small random graphs.

mod common;

use common::*;
use graphbench::community::modularity;
use graphbench::features::betweenness_centrality;
use graphbench::traversal::{
    bfs, connected_components, dijkstra, floyd_warshall, kruskal, prim,
    strongly_connected_components,
};
use graphbench::Partition;
use proptest::prelude::*;

fn config() -> ProptestConfig {
    ProptestConfig {
        failure_persistence: None,
        ..ProptestConfig::with_cases(200)
    }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn shortest_paths_agree_with_enumeration(
        seed in any::<u64>(), n in 1usize..=8, p in 0.1f64..0.7, directed in any::<bool>()
    ) {
        let edges = random_edges(&mut seeded(seed), n, p, directed, 9);
        let g = build(n, directed, &edges);
        let reference = all_simple_path_distances(n, directed, &edges);
        let fw = floyd_warshall(&g).unwrap();
        for s in 0..n {
            let d = dijkstra(&g, s).unwrap();
            for t in 0..n {
                prop_assert_eq!(d.dist[t], reference[s][t]);
                prop_assert_eq!(fw.get(s, t), reference[s][t]);
            }
        }
    }

    #[test]
    fn spanning_forests_agree_with_exhaustive_minimum(
        seed in any::<u64>(), n in 1usize..=9, p in 0.15f64..0.6
    ) {
        let edges = random_edges(&mut seeded(seed), n, p, false, 9);
        let g = build(n, false, &edges);
        let reference = exhaustive_spanning_forest_weight(n, &edges);
        let pr = prim(&g).unwrap();
        let kr = kruskal(&g).unwrap();
        prop_assert_eq!(pr.total_weight, reference);
        prop_assert_eq!(kr.total_weight, reference);
        let trees = connected_components(&g).n_communities();
        prop_assert_eq!((pr.n_components, kr.n_components), (trees, trees));
        prop_assert_eq!((pr.edges.len(), kr.edges.len()), (n - trees, n - trees));
    }

    #[test]
    fn minimum_tree_survives_cut_exchanges(seed in any::<u64>(), n in 2usize..=9, p in 0.2f64..0.8) {
        let edges = random_edges(&mut seeded(seed), n, p, false, 9);
        let g = build(n, false, &edges);
        let tree = kruskal(&g).unwrap();
        for (drop, &(a, b, w)) in tree.edges.iter().enumerate() {
            let rest: Vec<Edge> = tree
                .edges
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != drop)
                .map(|(_, &e)| e)
                .collect();
            let side = connected_components(&build(n, false, &rest));
            let (ca, cb) = (side.community_of(a), side.community_of(b));
            for &(u, v, x) in &edges {
                let (su, sv) = (side.community_of(u), side.community_of(v));
                if (su == ca && sv == cb) || (su == cb && sv == ca) {
                    prop_assert!(x >= w, "edge ({u},{v},{x}) beats tree edge ({a},{b},{w})");
                }
            }
        }
    }

    #[test]
    fn scc_matches_mutual_reachability(seed in any::<u64>(), n in 1usize..=7, p in 0.05f64..0.6) {
        let edges = random_edges(&mut seeded(seed), n, p, true, 1);
        let g = build(n, true, &edges);
        let scc = strongly_connected_components(&g).unwrap();
        prop_assert_eq!(co_membership(scc.assign()), mutual_reachability(n, &edges));
    }

    #[test]
    fn scc_condensation_is_acyclic(seed in any::<u64>(), n in 1usize..=12, p in 0.05f64..0.4) {
        let edges = random_edges(&mut seeded(seed), n, p, true, 1);
        let scc = strongly_connected_components(&build(n, true, &edges)).unwrap();
        let k = scc.n_communities();
        let mut indegree = vec![0usize; k];
        let mut out = vec![std::collections::BTreeSet::new(); k];
        for &(u, v, _) in &edges {
            let (a, b) = (scc.community_of(u), scc.community_of(v));
            if a != b && out[a].insert(b) {
                indegree[b] += 1;
            }
        }
        let mut ready: Vec<usize> = (0..k).filter(|&c| indegree[c] == 0).collect();
        let mut seen = 0;
        while let Some(c) = ready.pop() {
            seen += 1;
            for &d in &out[c] {
                indegree[d] -= 1;
                if indegree[d] == 0 {
                    ready.push(d);
                }
            }
        }
        prop_assert_eq!(seen, k);
    }

    #[test]
    fn modularity_matches_double_sum(
        seed in any::<u64>(), n in 2usize..=8, p in 0.2f64..0.8, k in 1usize..=4
    ) {
        let mut r = seeded(seed);
        let edges = random_edges(&mut r, n, p, false, 1);
        prop_assume!(!edges.is_empty());
        let labels = random_labels(&mut r, n, k);
        let q = modularity(&build(n, false, &edges), &Partition::from_labels(&labels)).unwrap();
        prop_assert!((q - modularity_double_sum(n, &edges, &labels)).abs() < 1e-12);
    }

    #[test]
    fn betweenness_matches_path_enumeration(
        seed in any::<u64>(), n in 1usize..=7, p in 0.1f64..0.8, directed in any::<bool>()
    ) {
        let edges = random_edges(&mut seeded(seed), n, p, directed, 1);
        let b = betweenness_centrality(&build(n, directed, &edges), false);
        let reference = betweenness_by_paths(n, directed, &edges);
        for (x, y) in b.iter().zip(&reference) {
            prop_assert!((x - y).abs() < 1e-9, "{b:?} vs {reference:?}");
        }
    }

    #[test]
    fn bfs_hops_equal_unit_dijkstra(seed in any::<u64>(), n in 1usize..=30, p in 0.02f64..0.3) {
        let edges = random_edges(&mut seeded(seed), n, p, false, 1);
        let g = build(n, false, &edges);
        let hops = bfs(&g, 0).hop_dist;
        let d = dijkstra(&g, 0).unwrap().dist;
        for (h, d) in hops.iter().zip(&d) {
            match h {
                Some(h) => prop_assert_eq!(*h as f64, *d),
                None => prop_assert!(d.is_infinite()),
            }
        }
    }
}

#[test]
fn negative_weights_are_handled_by_floyd_warshall_only() {
    let edges = [(0, 1, 4.0), (0, 2, 1.0), (2, 1, -2.0)];
    let g = build(3, true, &edges);
    let fw = floyd_warshall(&g).unwrap();
    assert_eq!(fw.get(0, 1), -1.0);
    assert_eq!(all_simple_path_distances(3, true, &edges)[0][1], -1.0);
    assert!(dijkstra(&g, 0).is_err());
}

#[test]
fn negative_cycle_is_reported() {
    let g = build(3, true, &[(0, 1, 1.0), (1, 2, -3.0), (2, 0, 1.0)]);
    assert!(floyd_warshall(&g).is_err());
}
