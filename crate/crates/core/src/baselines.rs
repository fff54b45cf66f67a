//! Non-graph learners: multinomial logistic regression, Gaussian naive
//! Bayes, k-means, and normalized spectral clustering.

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::{axpy, dot, row_argmax, squared_distance, top_eigenpairs, EigenPairs, Matrix};
use crate::partition::Partition;
use crate::rng::{self, stream, Rng};

fn distinct_classes(y: &[usize], idx: &[usize]) -> usize {
    let mut seen: Vec<usize> = idx.iter().map(|&i| y[i]).collect();
    seen.sort_unstable();
    seen.dedup();
    seen.len()
}

fn check_supervised(x: &Matrix, y: &[usize], idx: &[usize]) -> Result<usize> {
    if y.len() != x.rows() {
        return Err(Error::Shape(format!("{} labels for {} rows", y.len(), x.rows())));
    }
    if idx.is_empty() {
        return Err(Error::Invalid("empty training set".into()));
    }
    if let Some(&bad) = idx.iter().find(|&&i| i >= x.rows()) {
        return Err(Error::Invalid(format!("training index {bad} out of range")));
    }
    if distinct_classes(y, idx) < 2 {
        return Err(Error::Invalid("training set contains a single class".into()));
    }
    Ok(idx.iter().map(|&i| y[i]).max().unwrap_or(0) + 1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    /// `dim x n_classes`
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

impl LinearModel {
    pub fn zeros(dim: usize, n_classes: usize) -> Self {
        LinearModel {
            weights: Matrix::zeros(dim, n_classes),
            bias: vec![0.0; n_classes],
        }
    }

    pub fn logits(&self, x: &Matrix) -> Result<Matrix> {
        let mut z = x.matmul(&self.weights)?;
        z.add_row_vector(&self.bias);
        Ok(z)
    }

    /// Argmax of the logits; ties go to the lowest class id.
    pub fn predict(&self, x: &Matrix) -> Result<Vec<usize>> {
        Ok(row_argmax(&self.logits(x)?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogRegConfig {
    pub l2: f64,
    pub lr: f64,
    pub epochs: usize,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        LogRegConfig {
            l2: 1e-4,
            lr: 0.1,
            epochs: 500,
        }
    }
}

/// Mean cross-entropy over `idx` plus `l2/2 * ||W||^2`, and its gradient.
pub fn logistic_loss_grad(
    model: &LinearModel,
    x: &Matrix,
    y: &[usize],
    idx: &[usize],
    l2: f64,
) -> Result<(f64, LinearModel)> {
    let xs = x.gather_rows(idx);
    let labels: Vec<usize> = idx.iter().map(|&i| y[i]).collect();
    let rows: Vec<usize> = (0..idx.len()).collect();
    let logits = model.logits(&xs)?;
    let (ce, d_logits) = crate::nn::softmax_cross_entropy(&logits, &labels, &rows)?;
    let mut gw = xs.matmul_tn(&d_logits)?;
    gw.add_scaled(&model.weights, l2);
    let w2: f64 = model.weights.as_slice().iter().map(|w| w * w).sum();
    Ok((
        ce + 0.5 * l2 * w2,
        LinearModel {
            weights: gw,
            bias: d_logits.column_sums(),
        },
    ))
}

/// Full-batch gradient descent from zero weights.
pub fn logistic_regression_fit(
    x: &Matrix,
    y: &[usize],
    train_idx: &[usize],
    cfg: &LogRegConfig,
) -> Result<LinearModel> {
    let k = check_supervised(x, y, train_idx)?;
    let mut model = LinearModel::zeros(x.cols(), k);
    for epoch in 0..cfg.epochs {
        let (loss, grad) = logistic_loss_grad(&model, x, y, train_idx, cfg.l2)?;
        if !loss.is_finite() {
            return Err(Error::Training {
                epoch,
                message: format!("logistic loss is {loss}"),
            });
        }
        model.weights.add_scaled(&grad.weights, -cfg.lr);
        axpy(&mut model.bias, -cfg.lr, &grad.bias);
    }
    Ok(model)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNb {
    pub priors: Vec<f64>,
    /// `n_classes x dim`
    pub means: Matrix,
    pub variances: Matrix,
}

pub const NB_VAR_FLOOR: f64 = 1e-9;

pub fn naive_bayes_fit(x: &Matrix, y: &[usize], train_idx: &[usize]) -> Result<GaussianNb> {
    let k = check_supervised(x, y, train_idx)?;
    let d = x.cols();
    let mut counts = vec![0usize; k];
    let mut means = Matrix::zeros(k, d);
    for &i in train_idx {
        counts[y[i]] += 1;
        axpy(means.row_mut(y[i]), 1.0, x.row(i));
    }
    for c in 0..k {
        if counts[c] > 0 {
            means.row_mut(c).iter_mut().for_each(|m| *m /= counts[c] as f64);
        }
    }
    let mut variances = Matrix::zeros(k, d);
    for &i in train_idx {
        let c = y[i];
        for j in 0..d {
            let diff = x[(i, j)] - means[(c, j)];
            variances[(c, j)] += diff * diff;
        }
    }
    for c in 0..k {
        for j in 0..d {
            let v = if counts[c] > 0 {
                variances[(c, j)] / counts[c] as f64
            } else {
                0.0
            };
            variances[(c, j)] = v.max(NB_VAR_FLOOR);
        }
    }
    let n = train_idx.len() as f64;
    Ok(GaussianNb {
        priors: counts.iter().map(|&c| c as f64 / n).collect(),
        means,
        variances,
    })
}

impl GaussianNb {
    /// Unnormalized log posterior per class; `-inf` for classes unseen in training.
    pub fn log_joint(&self, row: &[f64]) -> Vec<f64> {
        (0..self.priors.len())
            .map(|c| {
                if self.priors[c] == 0.0 {
                    return f64::NEG_INFINITY;
                }
                let ll: f64 = row
                    .iter()
                    .enumerate()
                    .map(|(j, &v)| {
                        let var = self.variances[(c, j)];
                        let diff = v - self.means[(c, j)];
                        -0.5 * ((2.0 * std::f64::consts::PI * var).ln() + diff * diff / var)
                    })
                    .sum();
                self.priors[c].ln() + ll
            })
            .collect()
    }

    /// Ties go to the larger prior, then the lower class id.
    pub fn predict(&self, x: &Matrix) -> Vec<usize> {
        x.row_iter()
            .map(|row| {
                let lj = self.log_joint(row);
                let mut best = 0;
                for c in 1..lj.len() {
                    let better = lj[c] > lj[best]
                        || (lj[c] == lj[best] && self.priors[c] > self.priors[best]);
                    if better {
                        best = c;
                    }
                }
                best
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KMeansConfig {
    pub max_iter: usize,
    pub n_init: usize,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        KMeansConfig {
            max_iter: 300,
            n_init: 10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct KMeansResult {
    pub partition: Partition,
    pub centroids: Matrix,
    pub inertia: f64,
    /// Inertia after each assignment step of the winning restart.
    pub inertia_trace: Vec<f64>,
}

pub fn kmeans(x: &Matrix, k: usize, seed: u64) -> Result<KMeansResult> {
    kmeans_with(x, k, seed, &KMeansConfig::default())
}

/// Best-inertia run over `cfg.n_init` k-means++ restarts; ties keep the
/// lowest restart index.
pub fn kmeans_with(x: &Matrix, k: usize, seed: u64, cfg: &KMeansConfig) -> Result<KMeansResult> {
    let n = x.rows();
    if k == 0 || k > n {
        return Err(Error::Invalid(format!("k = {k} for {n} points")));
    }
    if !x.all_finite() {
        return Err(Error::Invalid("non-finite input to k-means".into()));
    }
    let runs: Vec<(Vec<usize>, Matrix, f64, Vec<f64>)> = (0..cfg.n_init.max(1))
        .into_par_iter()
        .map(|restart| {
            let mut r = rng::rng_for(seed, &[stream::KMEANS, restart as u64]);
            lloyd(x, k, cfg.max_iter, &mut r)
        })
        .collect();
    let best = runs
        .into_iter()
        .reduce(|a, b| if b.2 < a.2 { b } else { a })
        .expect("at least one restart");
    Ok(KMeansResult {
        partition: Partition::from_labels(&best.0),
        centroids: best.1,
        inertia: best.2,
        inertia_trace: best.3,
    })
}

fn plus_plus(x: &Matrix, k: usize, r: &mut Rng) -> Matrix {
    let n = x.rows();
    let mut centers = Vec::with_capacity(k);
    centers.push(r.gen_range(0..n));
    let mut d2: Vec<f64> = (0..n).map(|i| squared_distance(x.row(i), x.row(centers[0]))).collect();
    while centers.len() < k {
        let next = match WeightedIndex::new(&d2) {
            Ok(w) => w.sample(r),
            Err(_) => r.gen_range(0..n),
        };
        centers.push(next);
        for i in 0..n {
            d2[i] = d2[i].min(squared_distance(x.row(i), x.row(next)));
        }
    }
    x.gather_rows(&centers)
}

fn nearest(row: &[f64], centroids: &Matrix) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, cen) in centroids.row_iter().enumerate() {
        let d = squared_distance(row, cen);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn lloyd(x: &Matrix, k: usize, max_iter: usize, r: &mut Rng) -> (Vec<usize>, Matrix, f64, Vec<f64>) {
    let n = x.rows();
    let mut centroids = plus_plus(x, k, r);
    let mut assign = vec![usize::MAX; n];
    let mut dist = vec![0.0; n];
    let mut trace = Vec::new();
    for _ in 0..max_iter.max(1) {
        let mut changed = false;
        for i in 0..n {
            let (c, d) = nearest(x.row(i), &centroids);
            changed |= c != assign[i];
            assign[i] = c;
            dist[i] = d;
        }
        // Empty clusters take the point farthest from its centroid.
        let mut counts = vec![0usize; k];
        assign.iter().for_each(|&c| counts[c] += 1);
        for c in 0..k {
            if counts[c] == 0 {
                let far = (0..n)
                    .filter(|&i| counts[assign[i]] > 1)
                    .fold(None, |acc: Option<usize>, i| match acc {
                        Some(j) if dist[j] >= dist[i] => Some(j),
                        _ => Some(i),
                    });
                if let Some(i) = far {
                    counts[assign[i]] -= 1;
                    assign[i] = c;
                    counts[c] = 1;
                    dist[i] = 0.0;
                    centroids.row_mut(c).copy_from_slice(x.row(i));
                    changed = true;
                }
            }
        }
        trace.push(dist.iter().sum());
        if !changed {
            break;
        }
        centroids.fill(0.0);
        for i in 0..n {
            axpy(centroids.row_mut(assign[i]), 1.0, x.row(i));
        }
        for c in 0..k {
            let inv = 1.0 / counts[c] as f64;
            centroids.row_mut(c).iter_mut().for_each(|v| *v *= inv);
        }
    }
    let inertia = (0..n).map(|i| squared_distance(x.row(i), centroids.row(assign[i]))).sum();
    (assign, centroids, inertia, trace)
}

pub const SPECTRAL_TOL: f64 = 1e-8;
pub const SPECTRAL_MAX_ITER: usize = 20_000;

/// The `k` smallest eigenpairs of `L_sym = I - D^-1/2 A D^-1/2`, found as
/// the largest of `2I - L_sym`. Returned values are Laplacian eigenvalues in
/// ascending order. Isolated nodes get an identity Laplacian row.
pub fn laplacian_eigenpairs(g: &Graph, k: usize, seed: u64) -> Result<EigenPairs> {
    g.require_undirected("spectral clustering")?;
    let n = g.n_nodes();
    let strength: Vec<f64> = (0..n).map(|u| g.neighbor_weights(u).iter().sum()).collect();
    let inv_sqrt: Vec<f64> = strength
        .iter()
        .map(|&s| if s > 0.0 { 1.0 / s.sqrt() } else { 0.0 })
        .collect();
    let apply = |q: &Matrix| -> Matrix {
        let mut out = Matrix::zeros(n, q.cols());
        for u in 0..n {
            let row = out.row_mut(u);
            if strength[u] == 0.0 {
                axpy(row, 1.0, q.row(u));
                continue;
            }
            axpy(row, 1.0, q.row(u));
            for (v, w) in g.weighted_neighbors(u) {
                axpy(row, w * inv_sqrt[u] * inv_sqrt[v], q.row(v));
            }
        }
        out
    };
    let mut r = rng::rng_for(seed, &[stream::SPECTRAL]);
    let mut pairs = top_eigenpairs(n, k, apply, SPECTRAL_TOL, SPECTRAL_MAX_ITER, &mut r)?;
    pairs.values.iter_mut().for_each(|v| *v = 2.0 - *v);
    Ok(pairs)
}

pub fn spectral_clustering(g: &Graph, k: usize, seed: u64) -> Result<Partition> {
    if k < 2 {
        return Err(Error::Invalid("spectral clustering needs k >= 2".into()));
    }
    let pairs = laplacian_eigenpairs(g, k, seed)?;
    let mut emb = pairs.vectors;
    for i in 0..emb.rows() {
        let row = emb.row_mut(i);
        let norm = dot(row, row).sqrt();
        if norm > 0.0 {
            row.iter_mut().for_each(|v| *v /= norm);
        }
    }
    Ok(kmeans(&emb, k, seed)?.partition)
}
