//! Over-smoothing: repeated normalized propagation drives node
//! representations toward a common direction.

use crate::error::{Error, Result};
use crate::graph::{normalized_adjacency, Graph};
use crate::linalg::{cosine_similarity, Matrix};
use crate::rng::{self, stream};

pub const PROBE_DIM: usize = 64;

/// Mean pairwise cosine similarity of `Anorm^L X` for each `L` in `depths`,
/// with `X` standard Gaussian of width [`PROBE_DIM`].
pub fn oversmoothing_probe(g: &Graph, depths: &[usize]) -> Result<Vec<f64>> {
    oversmoothing_probe_with(g, depths, PROBE_DIM, 0)
}

pub fn oversmoothing_probe_with(
    g: &Graph,
    depths: &[usize],
    dim: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if g.n_nodes() < 2 || dim == 0 {
        return Err(Error::Invalid(
            "probe needs at least two nodes and one feature".into(),
        ));
    }
    let a = normalized_adjacency(g)?;
    let mut r = rng::rng_for(seed, &[stream::PROBE]);
    let x = Matrix::random_normal(g.n_nodes(), dim, 1.0, &mut r);

    let mut order: Vec<usize> = (0..depths.len()).collect();
    order.sort_by_key(|&i| depths[i]);
    let mut out = vec![0.0; depths.len()];
    let (mut h, mut at) = (x, 0usize);
    for i in order {
        while at < depths[i] {
            h = a.mul_dense(&h)?;
            at += 1;
        }
        out[i] = mean_pairwise_cosine(&h);
    }
    Ok(out)
}

pub fn mean_pairwise_cosine(h: &Matrix) -> f64 {
    let n = h.rows();
    let mut total = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            total += cosine_similarity(h.row(i), h.row(j));
        }
    }
    total / (n * (n - 1) / 2) as f64
}
