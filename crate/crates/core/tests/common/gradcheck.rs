//! Finite-difference checks for every differentiable operation. Each check
//! returns the worst norm-wise relative error over the tensors it covers.

use graphbench::baselines::{logistic_loss_grad, LinearModel};
use graphbench::graph::normalized_adjacency;
use graphbench::linalg::Matrix;
use graphbench::nn::layers::{gcn_backward, gcn_forward, sage_backward, sage_forward, sample_blocks};
use graphbench::nn::model::{model_backward, model_forward, Propagation};
use graphbench::nn::{reconstruction_loss, softmax_cross_entropy, Activation, Arch, ModelParams, SageBlock};
use graphbench::Graph;
use rand::Rng as _;

use super::{build, numeric_gradient, random_edges, random_labels, random_matrix, readout, relative_error, seeded};

pub const GRADIENT_TOLERANCE: f64 = 1e-6;

/// A random connected-enough instance: graph, features, layer widths.
pub struct Shape {
    pub g: Graph,
    pub n: usize,
    pub d_in: usize,
    pub d_out: usize,
    pub act: Activation,
    pub seed: u64,
}

pub fn random_shape(seed: u64) -> Shape {
    let mut r = seeded(seed);
    let n = r.gen_range(2..=12);
    let p = r.gen_range(0.15..0.7);
    let edges = random_edges(&mut r, n, p, false, 1);
    Shape {
        g: build(n, false, &edges),
        n,
        d_in: r.gen_range(1..=6),
        d_out: r.gen_range(1..=5),
        act: if r.gen_bool(0.5) { Activation::Relu } else { Activation::None },
        seed,
    }
}

fn bias_matrix(b: &[f64]) -> Matrix {
    Matrix::from_vec(1, b.len(), b.to_vec()).unwrap()
}

pub fn gcn_layer_error(s: &Shape) -> f64 {
    let mut r = seeded(s.seed ^ 0x6763);
    let a = normalized_adjacency(&s.g).unwrap();
    let h = random_matrix(&mut r, s.n, s.d_in);
    let w = random_matrix(&mut r, s.d_in, s.d_out);
    let b = random_matrix(&mut r, 1, s.d_out);
    let probe = random_matrix(&mut r, s.n, s.d_out);
    let loss = |h: &Matrix, w: &Matrix, b: &Matrix| {
        readout(&gcn_forward(h, &a, w, b.as_slice(), s.act).unwrap().0, &probe)
    };
    let (_, cache) = gcn_forward(&h, &a, &w, b.as_slice(), s.act).unwrap();
    let grads = gcn_backward(&h, &cache, &a, &w, &probe, true).unwrap();
    [
        relative_error(grads.weight.as_slice(), &numeric_gradient(&w, |w| loss(&h, w, &b))),
        relative_error(&grads.bias, &numeric_gradient(&b, |b| loss(&h, &w, b))),
        relative_error(grads.input.unwrap().as_slice(), &numeric_gradient(&h, |h| loss(h, &w, &b))),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

pub fn sage_layer_error(s: &Shape) -> f64 {
    let mut r = seeded(s.seed ^ 0x5a6e);
    let n_targets = r.gen_range(1..=s.n);
    let targets: Vec<usize> = (0..n_targets).collect();
    let sample = r.gen_range(1..=4);
    let batch = sample_blocks(&s.g, &targets, 1, sample, &mut r);
    let block: SageBlock = batch.blocks[0].clone();
    let h = random_matrix(&mut r, block.n_src, s.d_in);
    let ws = random_matrix(&mut r, s.d_in, s.d_out);
    let wn = random_matrix(&mut r, s.d_in, s.d_out);
    let b = random_matrix(&mut r, 1, s.d_out);
    let probe = random_matrix(&mut r, n_targets, s.d_out);
    let loss = |h: &Matrix, ws: &Matrix, wn: &Matrix, b: &Matrix| {
        readout(&sage_forward(h, &block, ws, wn, b.as_slice(), s.act).unwrap().0, &probe)
    };
    let (_, cache) = sage_forward(&h, &block, &ws, &wn, b.as_slice(), s.act).unwrap();
    let grads = sage_backward(&h, &cache, &block, &ws, &wn, &probe, true).unwrap();
    [
        relative_error(grads.w_self.as_slice(), &numeric_gradient(&ws, |x| loss(&h, x, &wn, &b))),
        relative_error(grads.w_neigh.as_slice(), &numeric_gradient(&wn, |x| loss(&h, &ws, x, &b))),
        relative_error(&grads.bias, &numeric_gradient(&b, |x| loss(&h, &ws, &wn, x))),
        relative_error(grads.input.unwrap().as_slice(), &numeric_gradient(&h, |x| loss(x, &ws, &wn, &b))),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

pub fn cross_entropy_error(s: &Shape) -> f64 {
    let mut r = seeded(s.seed ^ 0x6365);
    let k = s.d_out.max(2);
    let logits = random_matrix(&mut r, s.n, k);
    let labels = random_labels(&mut r, s.n, k);
    let mask: Vec<usize> = (0..s.n).filter(|_| r.gen_bool(0.7)).collect();
    let mask = if mask.is_empty() { vec![0] } else { mask };
    let (_, grad) = softmax_cross_entropy(&logits, &labels, &mask).unwrap();
    let numeric = numeric_gradient(&logits, |z| softmax_cross_entropy(z, &labels, &mask).unwrap().0);
    relative_error(grad.as_slice(), &numeric)
}

/// `None` when the graph has no edges or no non-edges to contrast.
pub fn reconstruction_error(s: &Shape) -> Option<f64> {
    let n = s.n;
    let m = s.g.n_edges();
    if m == 0 || m == n * (n - 1) / 2 {
        return None;
    }
    let mut r = seeded(s.seed ^ 0x7265);
    let z = random_matrix(&mut r, n, s.d_in);
    let neg = r.gen_range(1..=3);
    let (_, grad) = reconstruction_loss(&z, &s.g, neg, s.seed).unwrap();
    let numeric = numeric_gradient(&z, |z| reconstruction_loss(z, &s.g, neg, s.seed).unwrap().0);
    Some(relative_error(grad.as_slice(), &numeric))
}

pub fn logistic_regression_error(s: &Shape) -> f64 {
    let mut r = seeded(s.seed ^ 0x6c72);
    let k = s.d_out.max(2);
    let x = random_matrix(&mut r, s.n, s.d_in);
    let y = random_labels(&mut r, s.n, k);
    let idx: Vec<usize> = (0..s.n).filter(|_| r.gen_bool(0.8)).collect();
    let idx = if idx.is_empty() { vec![0] } else { idx };
    let l2 = r.gen_range(0.0..0.1);
    let model = LinearModel {
        weights: random_matrix(&mut r, s.d_in, k),
        bias: random_matrix(&mut r, 1, k).into_vec(),
    };
    let (_, grad) = logistic_loss_grad(&model, &x, &y, &idx, l2).unwrap();
    let nw = numeric_gradient(&model.weights, |w| {
        let m = LinearModel { weights: w.clone(), bias: model.bias.clone() };
        logistic_loss_grad(&m, &x, &y, &idx, l2).unwrap().0
    });
    let nb = numeric_gradient(&bias_matrix(&model.bias), |b| {
        let m = LinearModel { weights: model.weights.clone(), bias: b.as_slice().to_vec() };
        logistic_loss_grad(&m, &x, &y, &idx, l2).unwrap().0
    });
    relative_error(grad.weights.as_slice(), &nw).max(relative_error(&grad.bias, &nb))
}

/// Two-layer model with cross-entropy on top, checked tensor by tensor.
pub fn model_error(s: &Shape, arch: Arch) -> f64 {
    let mut r = seeded(s.seed ^ 0x6d64);
    let k = s.d_out.max(2);
    let hidden = r.gen_range(1..=5);
    let x = random_matrix(&mut r, s.n, s.d_in);
    let labels = random_labels(&mut r, s.n, k);
    let rows: Vec<usize> = (0..s.n).collect();
    let a = normalized_adjacency(&s.g).unwrap();
    let blocks = vec![SageBlock::full(&s.g), SageBlock::full(&s.g)];
    let prop = match arch {
        Arch::Gcn => Propagation::Gcn(&a),
        Arch::Sage => Propagation::Sage(&blocks),
    };
    let loss_of = |p: &ModelParams| {
        let out = model_forward(p, &x, prop, None).unwrap().output;
        softmax_cross_entropy(&out, &labels, &rows).unwrap()
    };
    let mut params = ModelParams::init(arch, &[s.d_in, hidden, k], s.seed).unwrap();
    let pass = model_forward(&params, &x, prop, None).unwrap();
    let (_, d_out) = softmax_cross_entropy(&pass.output, &labels, &rows).unwrap();
    model_backward(&mut params, &pass, prop, d_out).unwrap();
    let n_tensors = params.tensors().count();
    let mut worst: f64 = 0.0;
    for t in 0..n_tensors {
        let data = params.tensors().nth(t).unwrap().data.clone();
        let analytic = params.tensors().nth(t).unwrap().grad.clone().unwrap();
        let numeric = numeric_gradient(&data, |d| {
            let mut p = params.clone();
            p.tensors_mut().nth(t).unwrap().data = d.clone();
            loss_of(&p).0
        });
        worst = worst.max(relative_error(analytic.as_slice(), &numeric));
    }
    worst
}
