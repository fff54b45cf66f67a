//! GCN and GraphSAGE layers against dense oracles, symmetry properties, and
//! end-to-end training behavior on small graphs.

mod common;

use common::*;
use graphbench::baselines::kmeans;
use graphbench::bench::GnnParams;
use graphbench::dataset::{karate_club, stratified_split, Dataset};
use graphbench::features::FeatureMatrix;
use graphbench::graph::normalized_adjacency;
use graphbench::linalg::{cosine_similarity, Matrix};
use graphbench::metrics::clustering_metrics;
use graphbench::nn::layers::sage_forward;
use graphbench::nn::{
    gcn_layer_forward, predict_full, read_params, sage_layer_forward, train_encoder,
    train_node_classifier, train_unsupervised_embeddings, Activation, Arch, ModelConfig,
    SageBlock,
};
use graphbench::Graph;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng as _;

fn dense_adjacency(g: &Graph) -> Matrix {
    Matrix::from_fn(g.n_nodes(), g.n_nodes(), |i, j| if g.has_edge(i, j) { 1.0 } else { 0.0 })
}

fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
    a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn random_case(seed: u64) -> (Graph, Matrix, Matrix, Matrix, Vec<f64>) {
    let mut r = seeded(seed);
    let n = r.gen_range(1..15);
    let p = r.gen_range(0.05..0.6);
    let edges = random_edges(&mut r, n, p, false, 1);
    let (d_in, d_out) = (r.gen_range(1..6), r.gen_range(1..6));
    let h = random_matrix(&mut r, n, d_in);
    let w1 = random_matrix(&mut r, d_in, d_out);
    let w2 = random_matrix(&mut r, d_in, d_out);
    let b = random_matrix(&mut r, 1, d_out).into_vec();
    (build(n, false, &edges), h, w1, w2, b)
}

fn relu(m: &Matrix) -> Matrix {
    Matrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)].max(0.0))
}

fn plus_bias(mut m: Matrix, b: &[f64]) -> Matrix {
    m.add_row_vector(b);
    m
}

fn permute_rows(m: &Matrix, perm: &[usize]) -> Matrix {
    let mut out = Matrix::zeros(m.rows(), m.cols());
    for i in 0..m.rows() {
        out.row_mut(perm[i]).copy_from_slice(m.row(i));
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(100) })]

    #[test]
    fn gcn_layer_matches_dense_oracle(seed in any::<u64>()) {
        let (g, h, w, _, b) = random_case(seed);
        let n = g.n_nodes();
        let a = dense_adjacency(&g);
        let deg: Vec<f64> = (0..n).map(|i| 1.0 + a.row(i).iter().sum::<f64>()).collect();
        let anorm = Matrix::from_fn(n, n, |i, j| {
            (a[(i, j)] + if i == j { 1.0 } else { 0.0 }) / (deg[i] * deg[j]).sqrt()
        });
        let oracle = relu(&plus_bias(anorm.matmul(&h).unwrap().matmul(&w).unwrap(), &b));
        let out = gcn_layer_forward(&h, &normalized_adjacency(&g).unwrap(), &w, &b, Activation::Relu).unwrap();
        prop_assert!(max_abs_diff(&out, &oracle) < 1e-12);
    }

    #[test]
    fn sage_full_neighborhood_matches_dense_oracle(seed in any::<u64>()) {
        let (g, h, ws, wn, b) = random_case(seed);
        let n = g.n_nodes();
        let a = dense_adjacency(&g);
        let mean_op = Matrix::from_fn(n, n, |i, j| {
            let d = g.degree(i);
            if d == 0 { 0.0 } else { a[(i, j)] / d as f64 }
        });
        let mut z = h.matmul(&ws).unwrap();
        z.add_scaled(&mean_op.matmul(&h).unwrap().matmul(&wn).unwrap(), 1.0);
        let oracle = plus_bias(z, &b);
        let (full, _) = sage_forward(&h, &SageBlock::full(&g), &ws, &wn, &b, Activation::None).unwrap();
        prop_assert!(max_abs_diff(&full, &oracle) < 1e-12);
        let max_deg = (0..n).map(|u| g.degree(u)).max().unwrap_or(0).max(1);
        let sampled = sage_layer_forward(&h, &g, &ws, &wn, &b, max_deg, Activation::None, seed).unwrap();
        prop_assert!(max_abs_diff(&sampled, &full) < 1e-12);
    }

    #[test]
    fn layers_are_permutation_equivariant(seed in any::<u64>()) {
        let (g, h, ws, wn, b) = random_case(seed);
        let n = g.n_nodes();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut seeded(seed ^ 1));
        let gp = g.permute(&perm);
        let hp = permute_rows(&h, &perm);

        let gcn = |g: &Graph, h: &Matrix| {
            gcn_layer_forward(h, &normalized_adjacency(g).unwrap(), &ws, &b, Activation::Relu).unwrap()
        };
        prop_assert!(max_abs_diff(&gcn(&gp, &hp), &permute_rows(&gcn(&g, &h), &perm)) < 1e-12);

        let sage = |g: &Graph, h: &Matrix| {
            sage_forward(h, &SageBlock::full(g), &ws, &wn, &b, Activation::Relu).unwrap().0
        };
        prop_assert!(max_abs_diff(&sage(&gp, &hp), &permute_rows(&sage(&g, &h), &perm)) < 1e-12);
    }

    #[test]
    fn neighbor_order_does_not_change_aggregation(seed in any::<u64>()) {
        let (g, h, ws, wn, b) = random_case(seed);
        let block = SageBlock::full(&g);
        let mut shuffled = block.clone();
        let mut r = seeded(seed ^ 2);
        for t in 0..block.n_targets() {
            shuffled.neigh_idx[block.neigh_ptr[t]..block.neigh_ptr[t + 1]].shuffle(&mut r);
        }
        let a = sage_forward(&h, &block, &ws, &wn, &b, Activation::Relu).unwrap().0;
        let s = sage_forward(&h, &shuffled, &ws, &wn, &b, Activation::Relu).unwrap().0;
        prop_assert!(max_abs_diff(&a, &s) < 1e-12);
    }
}

#[test]
fn karate_gcn_defaults_reach_seventy_percent() {
    let ds = karate_club();
    let accs: Vec<f64> = (0..10)
        .map(|seed| {
            let split = stratified_split(&ds.labels, [0.6, 0.2, 0.2], seed).unwrap();
            let cfg = ModelConfig::new(Arch::Gcn, seed);
            train_node_classifier(&ds, &split, &cfg).unwrap().test_metrics.accuracy
        })
        .collect();
    let mean = accs.iter().sum::<f64>() / accs.len() as f64;
    assert!(mean >= 0.70, "mean accuracy {mean} from {accs:?}");
}

#[test]
fn identical_seeds_give_bitwise_identical_training() {
    let ds = karate_club();
    let split = stratified_split(&ds.labels, [0.6, 0.2, 0.2], 3).unwrap();
    for arch in [Arch::Gcn, Arch::Sage] {
        let cfg = ModelConfig {
            epochs: 30,
            sage_batch: 8,
            ..ModelConfig::new(arch, 11)
        };
        let a = train_node_classifier(&ds, &split, &cfg).unwrap();
        let b = train_node_classifier(&ds, &split, &cfg).unwrap();
        assert!(a.params.values_equal(&b.params), "{arch:?}");
        let bits = |h: &[graphbench::nn::EpochRecord]| -> Vec<(u64, u64)> {
            h.iter().map(|e| (e.train_loss.to_bits(), e.val_accuracy.to_bits())).collect()
        };
        assert_eq!(bits(&a.history), bits(&b.history));
    }
}

#[test]
fn saved_parameters_reproduce_predictions() {
    let ds = karate_club();
    let split = stratified_split(&ds.labels, [0.6, 0.2, 0.2], 0).unwrap();
    let cfg = ModelConfig {
        epochs: 20,
        ..ModelConfig::new(Arch::Sage, 5)
    };
    let trained = train_node_classifier(&ds, &split, &cfg).unwrap();
    let mut buf = Vec::new();
    graphbench::nn::write_params(&trained.params, &mut buf).unwrap();
    let restored = read_params(buf.as_slice()).unwrap();
    let x = ds.features.data();
    assert_eq!(
        predict_full(&trained.params, &ds.graph, x).unwrap(),
        predict_full(&restored, &ds.graph, x).unwrap()
    );
}

#[test]
fn zero_epoch_embeddings_are_the_initial_forward_pass() {
    let ds = karate_club();
    for arch in [Arch::Gcn, Arch::Sage] {
        let cfg = ModelConfig {
            epochs: 0,
            hidden: 16,
            ..ModelConfig::new(arch, 2)
        };
        let emb = train_unsupervised_embeddings(&ds, &cfg).unwrap();
        assert_eq!((emb.n_nodes(), emb.dim()), (34, 16));
        assert!(emb.vectors.all_finite());
    }
}

fn two_cliques(size: usize) -> Dataset {
    let mut edges = Vec::new();
    for c in 0..2 {
        for i in 0..size {
            for j in i + 1..size {
                edges.push((c * size + i, c * size + j));
            }
        }
    }
    edges.push((0, size));
    let n = 2 * size;
    let graph = Graph::from_edges(n, false, &edges).unwrap();
    let labels: Vec<usize> = (0..n).map(|i| i / size).collect();
    let features = FeatureMatrix::with_prefix(Matrix::identity(n), "id").unwrap();
    let ids = (0..n).map(|i| i.to_string()).collect();
    Dataset::new("two-cliques", graph, features, labels, vec!["a".into(), "b".into()], ids).unwrap()
}

#[test]
fn unsupervised_embeddings_separate_two_cliques() {
    let ds = two_cliques(6);
    for arch in [Arch::Gcn, Arch::Sage] {
        let cfg = GnnParams::unsupervised().model_config(arch, 0);
        let z = train_encoder(&ds.graph, ds.features.data(), &cfg).unwrap().embeddings.vectors;
        let (mut intra, mut inter) = (Vec::new(), Vec::new());
        for i in 0..12 {
            for j in i + 1..12 {
                let c = cosine_similarity(z.row(i), z.row(j));
                if ds.labels[i] == ds.labels[j] { intra.push(c) } else { inter.push(c) }
            }
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        assert!(mean(&intra) > mean(&inter), "{arch:?}: {} vs {}", mean(&intra), mean(&inter));
    }
}

#[test]
fn karate_unsupervised_gcn_clusters_factions() {
    let ds = karate_club();
    let nmi: f64 = (0..10)
        .map(|seed| {
            let cfg = GnnParams::unsupervised().model_config(Arch::Gcn, seed);
            let z = train_encoder(&ds.graph, ds.features.data(), &cfg).unwrap().embeddings.vectors;
            let p = kmeans(&z, 2, seed).unwrap().partition;
            clustering_metrics(&ds.labels, p.assign()).unwrap().nmi
        })
        .sum::<f64>()
        / 10.0;
    assert!(nmi >= 0.6, "mean NMI {nmi}");
}
