//! Trainable tensors, model parameter sets and the Adam optimizer.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::{self, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arch {
    Gcn,
    #[serde(rename = "graphsage")]
    Sage,
}

impl Arch {
    /// Tensors per layer: `[W, b]` for GCN, `[W_self, W_neigh, b]` for SAGE.
    pub fn tensors_per_layer(self) -> usize {
        match self {
            Arch::Gcn => 2,
            Arch::Sage => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Arch::Gcn => "gcn",
            Arch::Sage => "graphsage",
        }
    }
}

/// A parameter tensor with its gradient buffer and Adam moments.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor2D {
    pub data: Matrix,
    pub grad: Option<Matrix>,
    m: Matrix,
    v: Matrix,
}

impl Tensor2D {
    pub fn new(data: Matrix) -> Self {
        let (r, c) = data.shape();
        Tensor2D {
            data,
            grad: None,
            m: Matrix::zeros(r, c),
            v: Matrix::zeros(r, c),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.data.shape()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub arch: Arch,
    pub seed: u64,
    pub layers: Vec<Vec<Tensor2D>>,
    t: u64,
}

fn glorot(fan_in: usize, fan_out: usize, r: &mut Rng) -> Matrix {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    Matrix::random_uniform(fan_in, fan_out, limit, r)
}

impl ModelParams {
    /// Glorot-uniform weights and zero biases for layer widths `dims`.
    pub fn init(arch: Arch, dims: &[usize], seed: u64) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::Config(format!("invalid layer widths {dims:?}")));
        }
        let mut r = rng::rng_for(seed, &[rng::stream::INIT]);
        let layers = dims
            .windows(2)
            .map(|w| {
                let (i, o) = (w[0], w[1]);
                let mut t = vec![Tensor2D::new(glorot(i, o, &mut r))];
                if arch == Arch::Sage {
                    t.push(Tensor2D::new(glorot(i, o, &mut r)));
                }
                t.push(Tensor2D::new(Matrix::zeros(1, o)));
                t
            })
            .collect();
        Ok(ModelParams {
            arch,
            seed,
            layers,
            t: 0,
        })
    }

    /// Wraps existing tensors; shapes are checked against `arch`.
    pub fn from_tensors(arch: Arch, seed: u64, layers: Vec<Vec<Matrix>>) -> Result<Self> {
        for (l, layer) in layers.iter().enumerate() {
            if layer.len() != arch.tensors_per_layer() {
                return Err(Error::Shape(format!(
                    "layer {l} has {} tensors, {} expects {}",
                    layer.len(),
                    arch.name(),
                    arch.tensors_per_layer()
                )));
            }
            let (i, o) = layer[0].shape();
            let bias = layer.last().map(|b| b.shape());
            if bias != Some((1, o)) || (arch == Arch::Sage && layer[1].shape() != (i, o)) {
                return Err(Error::Shape(format!("layer {l} tensor shapes disagree")));
            }
        }
        Ok(ModelParams {
            arch,
            seed,
            layers: layers
                .into_iter()
                .map(|l| l.into_iter().map(Tensor2D::new).collect())
                .collect(),
            t: 0,
        })
    }

    /// Adam steps taken so far.
    pub fn step_count(&self) -> u64 {
        self.t
    }

    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0][0].data.rows()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1][0].data.cols()
    }

    pub fn tensors(&self) -> impl Iterator<Item = &Tensor2D> {
        self.layers.iter().flatten()
    }

    pub fn tensors_mut(&mut self) -> impl Iterator<Item = &mut Tensor2D> {
        self.layers.iter_mut().flatten()
    }

    pub fn zero_grad(&mut self) {
        for t in self.tensors_mut() {
            t.grad = None;
        }
    }

    pub(crate) fn weight(&self, layer: usize) -> &Matrix {
        &self.layers[layer][0].data
    }

    pub(crate) fn neigh_weight(&self, layer: usize) -> &Matrix {
        &self.layers[layer][1].data
    }

    pub(crate) fn bias(&self, layer: usize) -> &[f64] {
        self.layers[layer].last().expect("bias tensor").data.as_slice()
    }

    /// Parameter values only, dropping optimizer state.
    pub fn values_equal(&self, other: &ModelParams) -> bool {
        self.arch == other.arch
            && self.layers.len() == other.layers.len()
            && self.tensors().zip(other.tensors()).all(|(a, b)| a.data == b.data)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        AdamConfig {
            lr,
            ..AdamConfig::default()
        }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// One bias-corrected Adam update. Tensors without a gradient are treated as
/// having a zero gradient.
pub fn adam_step(params: &mut ModelParams, cfg: &AdamConfig) {
    params.t += 1;
    let t = params.t as i32;
    let c1 = 1.0 - cfg.beta1.powi(t);
    let c2 = 1.0 - cfg.beta2.powi(t);
    for p in params.tensors_mut() {
        let Tensor2D { data, grad, m, v } = p;
        let n = data.as_slice().len();
        for i in 0..n {
            let g = grad.as_ref().map_or(0.0, |g| g.as_slice()[i]);
            let mi = &mut m.as_mut_slice()[i];
            *mi = cfg.beta1 * *mi + (1.0 - cfg.beta1) * g;
            let vi = &mut v.as_mut_slice()[i];
            *vi = cfg.beta2 * *vi + (1.0 - cfg.beta2) * g * g;
            let m_hat = m.as_slice()[i] / c1;
            let v_hat = v.as_slice()[i] / c2;
            data.as_mut_slice()[i] -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(x: f64) -> ModelParams {
        ModelParams::from_tensors(
            Arch::Gcn,
            0,
            vec![vec![Matrix::from_vec(1, 1, vec![x]).unwrap(), Matrix::zeros(1, 1)]],
        )
        .unwrap()
    }

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut p = ModelParams::init(Arch::Sage, &[4, 3, 2], 7).unwrap();
        let before = p.clone();
        for t in p.tensors_mut() {
            let (r, c) = t.shape();
            t.grad = Some(Matrix::zeros(r, c));
        }
        adam_step(&mut p, &AdamConfig::default());
        assert!(p.values_equal(&before));
        assert_eq!(p.step_count(), 1);
    }

    #[test]
    fn first_step_matches_hand_expansion() {
        let mut p = scalar(1.0);
        let g = 0.3;
        p.layers[0][0].grad = Some(Matrix::from_vec(1, 1, vec![g]).unwrap());
        let cfg = AdamConfig::default();
        adam_step(&mut p, &cfg);
        // m_hat = g, v_hat = g^2 at t = 1.
        let expected = 1.0 - cfg.lr * g / (g.abs() + cfg.eps);
        assert!((p.layers[0][0].data[(0, 0)] - expected).abs() < 1e-15);
    }

    #[test]
    fn quadratic_converges() {
        let mut p = scalar(3.0);
        let cfg = AdamConfig::with_lr(0.05);
        for _ in 0..500 {
            let x = p.layers[0][0].data[(0, 0)];
            p.layers[0][0].grad = Some(Matrix::from_vec(1, 1, vec![2.0 * x]).unwrap());
            adam_step(&mut p, &cfg);
        }
        assert!(p.layers[0][0].data[(0, 0)].abs() < 1e-3);
    }

    #[test]
    fn glorot_bounds() {
        let p = ModelParams::init(Arch::Gcn, &[10, 6], 1).unwrap();
        let lim = (6.0f64 / 16.0).sqrt();
        assert!(p.weight(0).as_slice().iter().all(|v| v.abs() <= lim));
        assert!(p.bias(0).iter().all(|&b| b == 0.0));
        assert!(ModelParams::init(Arch::Gcn, &[10], 1).is_err());
    }
}
