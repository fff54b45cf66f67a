//! Community detection, random walks, embeddings and clustering baselines
//! on Karate and small synthetic graphs, checked against exhaustive search,
//! linear-system solutions and reference thresholds.

mod common;

use common::*;
use graphbench::baselines::{kmeans, spectral_clustering};
use graphbench::community::{girvan_newman, label_propagation, louvain, modularity};
use graphbench::dataset::karate_club;
use graphbench::embeddings::{node2vec, random_walks, SkipGramConfig, WalkConfig};
use graphbench::features::{pagerank, PageRankConfig};
use graphbench::linalg::cosine_similarity;
use graphbench::metrics::clustering_metrics;
use graphbench::{Graph, Partition};
use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn nmi(truth: &[usize], p: &Partition) -> f64 {
    clustering_metrics(truth, p.assign()).unwrap().nmi
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) }
}

fn bridged_cliques(size: usize) -> Graph {
    let mut edges = Vec::new();
    for c in 0..2 {
        for i in 0..size {
            for j in i + 1..size {
                edges.push((c * size + i, c * size + j));
            }
        }
    }
    edges.push((size - 1, size));
    Graph::from_edges(2 * size, false, &edges).unwrap()
}

/// Every set partition of `0..n` as restricted growth strings.
fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut labels = vec![0usize; n];
    fn rec(i: usize, max: usize, labels: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i == labels.len() {
            out.push(labels.clone());
            return;
        }
        for l in 0..=max + 1 {
            labels[i] = l;
            rec(i + 1, max.max(l), labels, out);
        }
    }
    if n > 0 {
        rec(1, 0, &mut labels, &mut out);
    }
    out
}

#[test]
fn louvain_finds_the_exhaustive_optimum_on_bridged_cliques() {
    let g = bridged_cliques(4);
    let partitions = set_partitions(8);
    assert_eq!(partitions.len(), 4140);
    let (best, best_q) = partitions
        .iter()
        .map(|l| (l, modularity(&g, &Partition::from_labels(l)).unwrap()))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    let expected = Partition::from_labels(best);
    for seed in 0..10 {
        let p = louvain(&g, seed).unwrap();
        assert_eq!(co_membership(p.assign()), co_membership(expected.assign()), "seed {seed}");
        assert!((modularity(&g, &p).unwrap() - best_q).abs() < 1e-12);
    }
    assert_eq!(co_membership(best), co_membership(&[0, 0, 0, 0, 1, 1, 1, 1]));
}

#[test]
fn louvain_reaches_high_modularity_on_karate() {
    let ds = karate_club();
    for seed in 0..10 {
        let q = modularity(&ds.graph, &louvain(&ds.graph, seed).unwrap()).unwrap();
        assert!(q >= 0.40, "seed {seed}: Q = {q}");
    }
}

#[test]
fn girvan_newman_two_way_split_of_karate() {
    let ds = karate_club();
    let p = girvan_newman(&ds.graph, 2).unwrap();
    assert_eq!(p.n_communities(), 2);
    let score = nmi(&ds.labels, &p);
    assert!(score >= 0.55, "NMI {score}");
}

#[test]
fn label_propagation_over_fifty_seeds() {
    let ds = karate_club();
    let runs: Vec<Partition> = (0..50).map(|s| label_propagation(&ds.graph, s, 100).unwrap()).collect();
    let sizes = median(runs.iter().map(|p| p.n_communities() as f64).collect());
    let scores = median(runs.iter().map(|p| nmi(&ds.labels, p)).collect());
    assert!((2.0..=4.0).contains(&sizes), "median community count {sizes}");
    assert!(scores >= 0.5, "median NMI {scores}");
}

#[test]
fn spectral_clustering_recovers_karate_factions() {
    let ds = karate_club();
    let mean = (0..10)
        .map(|s| nmi(&ds.labels, &spectral_clustering(&ds.graph, 2, s).unwrap()))
        .sum::<f64>()
        / 10.0;
    assert!(mean >= 0.3, "mean NMI {mean}");
}

#[test]
fn pagerank_on_directed_chain_solves_the_linear_system() {
    let g = Graph::from_edges(3, true, &[(0, 1), (1, 2)]).unwrap();
    let d = 0.85;
    let n = 3.0;
    // Column-stochastic transitions with the dangling node spreading uniformly.
    let m = DMatrix::from_row_slice(3, 3, &[
        0.0, 0.0, 1.0 / n,
        1.0, 0.0, 1.0 / n,
        0.0, 1.0, 1.0 / n,
    ]);
    let lhs = DMatrix::identity(3, 3) - m * d;
    let rhs = DVector::from_element(3, (1.0 - d) / n);
    let x = lhs.lu().solve(&rhs).unwrap();
    let pr = pagerank(&g, &PageRankConfig::default()).unwrap();
    for i in 0..3 {
        assert!((pr[i] - x[i]).abs() < 1e-9, "{pr:?} vs {x}");
    }
    assert!((pr.iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn triangle_walk_transitions_are_uniform() {
    let g = Graph::from_edges(3, false, &[(0, 1), (1, 2), (0, 2)]).unwrap();
    let cfg = WalkConfig { walk_length: 10_001, walks_per_node: 4, ..WalkConfig::default() };
    let corpus = random_walks(&g, &cfg, 17).unwrap();
    let mut counts = [[0u64; 3]; 3];
    for walk in &corpus.walks {
        for w in walk.windows(2) {
            counts[w[0]][w[1]] += 1;
        }
    }
    let steps: u64 = counts.iter().flatten().sum();
    assert!(steps >= 100_000);
    let mut chi2 = 0.0;
    for (u, row) in counts.iter().enumerate() {
        assert_eq!(row[u], 0);
        let total = row.iter().sum::<u64>() as f64;
        for (v, &c) in row.iter().enumerate() {
            if v != u {
                let freq = c as f64 / total;
                assert!((freq - 0.5).abs() <= 0.02, "{u}->{v}: {freq}");
                let e = total / 2.0;
                chi2 += (c as f64 - e).powi(2) / e;
            }
        }
    }
    let p = 1.0 - ChiSquared::new(3.0).unwrap().cdf(chi2);
    assert!(p > 1e-3, "chi-square {chi2}, p = {p}");
}

#[test]
fn node2vec_separates_bridged_cliques() {
    let g = bridged_cliques(6);
    let sg = SkipGramConfig { dim: 16, ..SkipGramConfig::default() };
    let z = node2vec(&g, &WalkConfig::default(), &sg, 0).unwrap().vectors;
    let (mut intra, mut inter) = (Vec::new(), Vec::new());
    for i in 0..12 {
        for j in i + 1..12 {
            let c = cosine_similarity(z.row(i), z.row(j));
            if i / 6 == j / 6 { intra.push(c) } else { inter.push(c) }
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    assert!(mean(&intra) > mean(&inter), "{} vs {}", mean(&intra), mean(&inter));
}

#[test]
fn node2vec_karate_embeddings_cluster_factions() {
    let ds = karate_club();
    let sg = SkipGramConfig { dim: 16, ..SkipGramConfig::default() };
    let scores: Vec<f64> = (0..5)
        .map(|seed| {
            let z = node2vec(&ds.graph, &WalkConfig::default(), &sg, seed).unwrap().vectors;
            nmi(&ds.labels, &kmeans(&z, 2, seed).unwrap().partition)
        })
        .collect();
    let mean = scores.iter().sum::<f64>() / scores.len() as f64;
    assert!(mean >= 0.3, "NMI {scores:?}");
}
