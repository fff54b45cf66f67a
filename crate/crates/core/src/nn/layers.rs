//! GCN and GraphSAGE-mean layers with hand-written backward passes.

use rand::seq::index::sample as sample_indices;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::{axpy, Matrix, SparseMatrix};
use crate::rng::{self, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    None,
}

impl Activation {
    fn apply(self, z: &Matrix) -> Matrix {
        match self {
            Activation::None => z.clone(),
            Activation::Relu => {
                let mut out = z.clone();
                out.as_mut_slice().iter_mut().for_each(|v| *v = v.max(0.0));
                out
            }
        }
    }

    /// Gradient w.r.t. the pre-activation given the gradient w.r.t. the output.
    fn backward(self, z: &Matrix, d_out: &Matrix) -> Matrix {
        match self {
            Activation::None => d_out.clone(),
            Activation::Relu => {
                let mut d = d_out.clone();
                for (g, &zv) in d.as_mut_slice().iter_mut().zip(z.as_slice()) {
                    if zv <= 0.0 {
                        *g = 0.0;
                    }
                }
                d
            }
        }
    }
}

fn check_bias(b: &[f64], cols: usize) -> Result<()> {
    if b.len() != cols {
        return Err(Error::Shape(format!(
            "bias of length {} for {cols} output columns",
            b.len()
        )));
    }
    Ok(())
}

/// Values saved by a forward pass for the backward pass. The layer input is
/// not copied; the caller passes it back to the backward function.
#[derive(Debug, Clone)]
pub struct GcnCache {
    pub pre_activation: Matrix,
    pub activation: Activation,
}

#[derive(Debug, Clone)]
pub struct GcnGrads {
    pub weight: Matrix,
    pub bias: Vec<f64>,
    pub input: Option<Matrix>,
}

/// `act(Anorm H W + b)`
pub fn gcn_layer_forward(
    h: &Matrix,
    anorm: &SparseMatrix,
    w: &Matrix,
    b: &[f64],
    act: Activation,
) -> Result<Matrix> {
    Ok(gcn_forward(h, anorm, w, b, act)?.0)
}

pub fn gcn_forward(
    h: &Matrix,
    anorm: &SparseMatrix,
    w: &Matrix,
    b: &[f64],
    act: Activation,
) -> Result<(Matrix, GcnCache)> {
    if anorm.n_cols() != h.rows() || h.cols() != w.rows() {
        return Err(Error::Shape(format!(
            "gcn layer: Anorm {}x{}, H {}x{}, W {}x{}",
            anorm.n_rows(),
            anorm.n_cols(),
            h.rows(),
            h.cols(),
            w.rows(),
            w.cols()
        )));
    }
    check_bias(b, w.cols())?;
    // H W first: H is often a sparse bag-of-words matrix much wider than W.
    let hw = h.matmul(w)?;
    let mut z = anorm.mul_dense(&hw)?;
    z.add_row_vector(b);
    let out = act.apply(&z);
    Ok((
        out,
        GcnCache {
            pre_activation: z,
            activation: act,
        },
    ))
}

pub fn gcn_backward(
    h: &Matrix,
    cache: &GcnCache,
    anorm: &SparseMatrix,
    w: &Matrix,
    d_out: &Matrix,
    need_input_grad: bool,
) -> Result<GcnGrads> {
    let dz = cache.activation.backward(&cache.pre_activation, d_out);
    let bias = dz.column_sums();
    let d_hw = anorm.transpose_mul_dense(&dz)?;
    let weight = h.matmul_tn(&d_hw)?;
    let input = if need_input_grad {
        Some(d_hw.matmul_nt(w)?)
    } else {
        None
    };
    Ok(GcnGrads {
        weight,
        bias,
        input,
    })
}

/// Bipartite message-passing block: each target row aggregates a list of
/// source rows. `self_index[t]` is the target's own row among the sources.
#[derive(Debug, Clone, PartialEq)]
pub struct SageBlock {
    pub n_src: usize,
    pub self_index: Vec<usize>,
    pub neigh_ptr: Vec<usize>,
    pub neigh_idx: Vec<usize>,
}

impl SageBlock {
    pub fn n_targets(&self) -> usize {
        self.self_index.len()
    }

    pub fn neighbors(&self, t: usize) -> &[usize] {
        &self.neigh_idx[self.neigh_ptr[t]..self.neigh_ptr[t + 1]]
    }

    /// Every node aggregates its full neighborhood.
    pub fn full(g: &Graph) -> SageBlock {
        let n = g.n_nodes();
        let mut neigh_ptr = Vec::with_capacity(n + 1);
        let mut neigh_idx = Vec::with_capacity(g.n_stored());
        neigh_ptr.push(0);
        for u in 0..n {
            neigh_idx.extend_from_slice(g.neighbors(u));
            neigh_ptr.push(neigh_idx.len());
        }
        SageBlock {
            n_src: n,
            self_index: (0..n).collect(),
            neigh_ptr,
            neigh_idx,
        }
    }

    /// Every node aggregates a uniform sample of `min(deg, sample_size)`
    /// neighbors drawn without replacement.
    pub fn sampled(g: &Graph, sample_size: usize, r: &mut Rng) -> SageBlock {
        let n = g.n_nodes();
        let mut neigh_ptr = Vec::with_capacity(n + 1);
        let mut neigh_idx = Vec::new();
        neigh_ptr.push(0);
        for u in 0..n {
            push_sample(g.neighbors(u), sample_size, r, &mut neigh_idx, |v| v);
            neigh_ptr.push(neigh_idx.len());
        }
        SageBlock {
            n_src: n,
            self_index: (0..n).collect(),
            neigh_ptr,
            neigh_idx,
        }
    }
}

fn push_sample(
    nbrs: &[usize],
    k: usize,
    r: &mut Rng,
    out: &mut Vec<usize>,
    mut map: impl FnMut(usize) -> usize,
) {
    if nbrs.len() <= k {
        out.extend(nbrs.iter().map(|&v| map(v)));
    } else {
        let mut picked: Vec<usize> = sample_indices(r, nbrs.len(), k).into_vec();
        picked.sort_unstable();
        out.extend(picked.into_iter().map(|i| map(nbrs[i])));
    }
}

/// Sampled computation graph for a mini-batch: blocks ordered from the
/// input layer upwards, and the original node ids feeding the first block.
#[derive(Debug, Clone)]
pub struct SampledBatch {
    pub blocks: Vec<SageBlock>,
    pub input_nodes: Vec<usize>,
}

impl SampledBatch {
    /// Re-indexes the first block's sources by graph node id, so the batch
    /// reads rows straight from the full `n_nodes`-row feature matrix.
    pub fn into_global_input(mut self, n_nodes: usize) -> Vec<SageBlock> {
        if let Some(first) = self.blocks.first_mut() {
            let ids = &self.input_nodes;
            first.self_index.iter_mut().for_each(|i| *i = ids[*i]);
            first.neigh_idx.iter_mut().for_each(|i| *i = ids[*i]);
            first.n_src = n_nodes;
        }
        self.blocks
    }
}

/// Builds per-layer sampled blocks for `targets` through `n_layers` layers.
/// A block's targets occupy the first rows of its sources.
pub fn sample_blocks(
    g: &Graph,
    targets: &[usize],
    n_layers: usize,
    sample_size: usize,
    r: &mut Rng,
) -> SampledBatch {
    let n = g.n_nodes();
    let mut position = vec![usize::MAX; n];
    let mut blocks = Vec::with_capacity(n_layers);
    let mut current: Vec<usize> = targets.to_vec();
    for _ in 0..n_layers {
        let mut src: Vec<usize> = current.clone();
        for (i, &v) in src.iter().enumerate() {
            position[v] = i;
        }
        let mut neigh_ptr = Vec::with_capacity(current.len() + 1);
        let mut neigh_idx = Vec::new();
        neigh_ptr.push(0);
        for &t in &current {
            push_sample(g.neighbors(t), sample_size, r, &mut neigh_idx, |v| {
                if position[v] == usize::MAX {
                    position[v] = src.len();
                    src.push(v);
                }
                position[v]
            });
            neigh_ptr.push(neigh_idx.len());
        }
        for &v in &src {
            position[v] = usize::MAX;
        }
        blocks.push(SageBlock {
            n_src: src.len(),
            self_index: (0..current.len()).collect(),
            neigh_ptr,
            neigh_idx,
        });
        current = src;
    }
    blocks.reverse();
    SampledBatch {
        blocks,
        input_nodes: current,
    }
}

#[derive(Debug, Clone)]
pub struct SageCache {
    pub pre_activation: Matrix,
    pub activation: Activation,
}

#[derive(Debug, Clone)]
pub struct SageGrads {
    pub w_self: Matrix,
    pub w_neigh: Matrix,
    pub bias: Vec<f64>,
    pub input: Option<Matrix>,
}

/// Row `t` of the result is the mean of the rows of `p` listed as `t`'s
/// neighbors, or zero when there are none.
fn neighbor_mean(p: &Matrix, block: &SageBlock) -> Matrix {
    let mut m = Matrix::zeros(block.n_targets(), p.cols());
    for t in 0..block.n_targets() {
        let nb = block.neighbors(t);
        if nb.is_empty() {
            continue;
        }
        let inv = 1.0 / nb.len() as f64;
        let row = m.row_mut(t);
        for &j in nb {
            axpy(row, inv, p.row(j));
        }
    }
    m
}

/// Adjoint of [`neighbor_mean`] and the self gather: spreads target-row
/// gradients back onto source rows.
fn scatter_to_sources(d: &Matrix, block: &SageBlock, self_part: bool) -> Matrix {
    let mut out = Matrix::zeros(block.n_src, d.cols());
    for t in 0..block.n_targets() {
        if self_part {
            axpy(out.row_mut(block.self_index[t]), 1.0, d.row(t));
            continue;
        }
        let nb = block.neighbors(t);
        if nb.is_empty() {
            continue;
        }
        let inv = 1.0 / nb.len() as f64;
        for &j in nb {
            axpy(out.row_mut(j), inv, d.row(t));
        }
    }
    out
}

/// `act(H_self W_self + mean(H_neigh) W_neigh + b)` over a block.
///
/// Computed as `(H W_self)_self + mean(H W_neigh)`, which is the same linear
/// map but touches only the non-zero entries of a sparse `H` once.
pub fn sage_forward(
    h: &Matrix,
    block: &SageBlock,
    w_self: &Matrix,
    w_neigh: &Matrix,
    b: &[f64],
    act: Activation,
) -> Result<(Matrix, SageCache)> {
    if h.rows() != block.n_src
        || h.cols() != w_self.rows()
        || w_self.shape() != w_neigh.shape()
    {
        return Err(Error::Shape(format!(
            "sage layer: H {}x{} for {} sources, W_self {}x{}, W_neigh {}x{}",
            h.rows(),
            h.cols(),
            block.n_src,
            w_self.rows(),
            w_self.cols(),
            w_neigh.rows(),
            w_neigh.cols()
        )));
    }
    check_bias(b, w_self.cols())?;
    let mut z = h.matmul(w_self)?.gather_rows(&block.self_index);
    z.add_scaled(&neighbor_mean(&h.matmul(w_neigh)?, block), 1.0);
    z.add_row_vector(b);
    let out = act.apply(&z);
    Ok((
        out,
        SageCache {
            pre_activation: z,
            activation: act,
        },
    ))
}

pub fn sage_backward(
    h: &Matrix,
    cache: &SageCache,
    block: &SageBlock,
    w_self: &Matrix,
    w_neigh: &Matrix,
    d_out: &Matrix,
    need_input_grad: bool,
) -> Result<SageGrads> {
    let dz = cache.activation.backward(&cache.pre_activation, d_out);
    let bias = dz.column_sums();
    let d_self = scatter_to_sources(&dz, block, true);
    let d_neigh = scatter_to_sources(&dz, block, false);
    let gw_self = h.matmul_tn(&d_self)?;
    let gw_neigh = h.matmul_tn(&d_neigh)?;
    let input = if need_input_grad {
        let mut dh = d_self.matmul_nt(w_self)?;
        dh.add_scaled(&d_neigh.matmul_nt(w_neigh)?, 1.0);
        Some(dh)
    } else {
        None
    };
    Ok(SageGrads {
        w_self: gw_self,
        w_neigh: gw_neigh,
        bias,
        input,
    })
}

/// Full-graph GraphSAGE-mean layer with seeded neighbor sampling.
#[allow(clippy::too_many_arguments)]
pub fn sage_layer_forward(
    h: &Matrix,
    g: &Graph,
    w_self: &Matrix,
    w_neigh: &Matrix,
    b: &[f64],
    sample_size: usize,
    act: Activation,
    seed: u64,
) -> Result<Matrix> {
    if sample_size == 0 {
        return Err(Error::Invalid("sample_size must be at least 1".into()));
    }
    let mut r = rng::rng_for(seed, &[rng::stream::SAMPLE]);
    let block = SageBlock::sampled(g, sample_size, &mut r);
    Ok(sage_forward(h, &block, w_self, w_neigh, b, act)?.0)
}

/// Inverted dropout. Returns the masked input and the scaled mask.
///
/// Random draws are made only for non-zero entries; a zero entry stays zero
/// whatever its mask value, and its mask entry is set to zero.
pub fn dropout(h: &Matrix, p: f64, r: &mut Rng) -> (Matrix, Matrix) {
    use rand::Rng as _;
    let keep = 1.0 - p;
    let mut mask = Matrix::zeros(h.rows(), h.cols());
    let mut out = h.clone();
    for (o, m) in out.as_mut_slice().iter_mut().zip(mask.as_mut_slice()) {
        if *o != 0.0 && r.gen::<f64>() < keep {
            *m = 1.0 / keep;
            *o *= *m;
        } else {
            *o = 0.0;
        }
    }
    (out, mask)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::normalized_adjacency;

    #[test]
    fn isolated_node_passes_through() {
        let g = Graph::from_edges(1, false, &[]).unwrap();
        let a = normalized_adjacency(&g).unwrap();
        let h = Matrix::from_rows(&[vec![0.3, -2.0]]).unwrap();
        let out = gcn_layer_forward(&h, &a, &Matrix::identity(2), &[0.0, 0.0], Activation::None)
            .unwrap();
        assert_eq!(out, h);
    }

    #[test]
    fn single_edge_averages() {
        let g = Graph::from_edges(2, false, &[(0, 1)]).unwrap();
        let a = normalized_adjacency(&g).unwrap();
        let out = gcn_layer_forward(
            &Matrix::identity(2),
            &a,
            &Matrix::identity(2),
            &[0.0, 0.0],
            Activation::None,
        )
        .unwrap();
        assert!(out.as_slice().iter().all(|v| (v - 0.5).abs() < 1e-15));
    }

    #[test]
    fn gcn_shape_errors() {
        let g = Graph::from_edges(2, false, &[(0, 1)]).unwrap();
        let a = normalized_adjacency(&g).unwrap();
        let h = Matrix::zeros(2, 3);
        assert!(gcn_layer_forward(&h, &a, &Matrix::zeros(2, 2), &[0.0; 2], Activation::Relu).is_err());
        assert!(gcn_layer_forward(&h, &a, &Matrix::zeros(3, 2), &[0.0; 3], Activation::Relu).is_err());
    }

    #[test]
    fn sage_isolated_node_uses_self_only() {
        let g = Graph::from_edges(2, false, &[]).unwrap();
        let h = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let ws = Matrix::identity(2);
        let wn = Matrix::from_rows(&[vec![9.0, 9.0], vec![9.0, 9.0]]).unwrap();
        let out = sage_layer_forward(&h, &g, &ws, &wn, &[0.5, 0.5], 3, Activation::None, 0).unwrap();
        assert_eq!(out.row(0), &[1.5, 2.5]);
        assert!(sage_layer_forward(&h, &g, &ws, &wn, &[0.5, 0.5], 0, Activation::None, 0).is_err());
    }

    #[test]
    fn sampled_blocks_cover_targets_first() {
        let g = crate::dataset::karate_club().graph;
        let mut r = rng::rng(1);
        let batch = sample_blocks(&g, &[0, 33, 5], 2, 3, &mut r);
        assert_eq!(batch.blocks.len(), 2);
        let top = &batch.blocks[1];
        assert_eq!(top.n_targets(), 3);
        assert!((0..3).all(|t| top.neighbors(t).len() <= 3));
        assert_eq!(batch.blocks[0].n_targets(), top.n_src);
        assert_eq!(batch.input_nodes.len(), batch.blocks[0].n_src);
        assert_eq!(&batch.input_nodes[..3], &[0, 33, 5]);
    }

    #[test]
    fn dropout_scales_kept_entries() {
        let h = Matrix::from_fn(20, 20, |_, _| 1.0);
        let (out, mask) = dropout(&h, 0.5, &mut rng::rng(2));
        assert!(out.as_slice().iter().all(|&v| v == 0.0 || v == 2.0));
        assert_eq!(out, mask);
        let kept = out.as_slice().iter().filter(|&&v| v > 0.0).count();
        assert!((150..250).contains(&kept));
    }
}
