//! Training objectives. Each returns the scalar loss and its exact gradient
//! with respect to the model output.

use rand::Rng as _;

use crate::embeddings::{log_sigmoid, sigmoid};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::{axpy, dot, Matrix};
use crate::rng;

/// Mean negative log-likelihood of `labels[i]` over the rows in `mask`.
/// Rows outside the mask receive zero gradient.
pub fn softmax_cross_entropy(
    logits: &Matrix,
    labels: &[usize],
    mask: &[usize],
) -> Result<(f64, Matrix)> {
    if mask.is_empty() {
        return Err(Error::Invalid("cross-entropy over an empty mask".into()));
    }
    if labels.len() != logits.rows() {
        return Err(Error::Shape(format!(
            "{} labels for {} logit rows",
            labels.len(),
            logits.rows()
        )));
    }
    let k = logits.cols();
    let scale = 1.0 / mask.len() as f64;
    let mut grad = Matrix::zeros(logits.rows(), k);
    let mut loss = 0.0;
    for &i in mask {
        let y = labels[i];
        if y >= k {
            return Err(Error::Invalid(format!("label {y} for {k} classes")));
        }
        let row = logits.row(i);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = row.iter().map(|v| (v - max).exp()).sum();
        let log_z = max + sum.ln();
        loss += log_z - row[y];
        let g = grad.row_mut(i);
        for c in 0..k {
            g[c] += scale * (row[c] - log_z).exp();
        }
        g[y] -= scale;
    }
    Ok((loss * scale, grad))
}

/// Draws `count` node pairs uniformly among unordered non-adjacent pairs.
pub fn sample_non_edges(g: &Graph, count: usize, seed: u64) -> Result<Vec<(usize, usize)>> {
    g.require_undirected("negative sampling")?;
    let n = g.n_nodes();
    if n < 2 || g.n_edges() >= n * (n - 1) / 2 {
        return Err(Error::Invalid("graph has no non-edges to sample".into()));
    }
    let mut r = rng::rng_for(seed, &[rng::stream::NEGATIVE]);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let u = r.gen_range(0..n);
        let v = r.gen_range(0..n);
        if u != v && !g.has_edge(u, v) {
            out.push((u.min(v), u.max(v)));
        }
    }
    Ok(out)
}

/// Binary cross-entropy of `sigmoid(z_u . z_v)` with every edge as a
/// positive and `n_negative_per_edge` seeded non-edges per edge as negatives.
pub fn reconstruction_loss(
    z: &Matrix,
    g: &Graph,
    n_negative_per_edge: usize,
    seed: u64,
) -> Result<(f64, Matrix)> {
    if z.rows() != g.n_nodes() {
        return Err(Error::Shape(format!(
            "{} embedding rows for {} nodes",
            z.rows(),
            g.n_nodes()
        )));
    }
    let edges = g.edges();
    if g.n_nodes() < 2 || edges.is_empty() {
        return Err(Error::Invalid(
            "reconstruction loss needs at least two nodes and one edge".into(),
        ));
    }
    let negatives = sample_non_edges(g, n_negative_per_edge * edges.len(), seed)?;
    let pairs = edges
        .iter()
        .map(|&(u, v, _)| (u, v, true))
        .chain(negatives.into_iter().map(|(u, v)| (u, v, false)));
    let scale = 1.0 / (edges.len() * (1 + n_negative_per_edge)) as f64;
    let mut grad = Matrix::zeros(z.rows(), z.cols());
    let mut loss = 0.0;
    for (u, v, positive) in pairs {
        let s = dot(z.row(u), z.row(v));
        let (l, ds) = if positive {
            (-log_sigmoid(s), sigmoid(s) - 1.0)
        } else {
            (-log_sigmoid(-s), sigmoid(s))
        };
        loss += l;
        let c = scale * ds;
        let zu = z.row(u).to_vec();
        let zv = z.row(v).to_vec();
        axpy(grad.row_mut(u), c, &zv);
        axpy(grad.row_mut(v), c, &zu);
    }
    Ok((loss * scale, grad))
}
