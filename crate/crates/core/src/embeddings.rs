//! node2vec / DeepWalk: second-order biased random walks and skip-gram with
//! negative sampling.

use std::path::Path;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::graph::Graph;
use crate::linalg::{dot, Matrix};
use crate::rng::{self, stream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WalkConfig {
    pub walk_length: usize,
    pub walks_per_node: usize,
    /// Return parameter.
    pub p: f64,
    /// In-out parameter.
    pub q: f64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        Self {
            walk_length: 80,
            walks_per_node: 10,
            p: 1.0,
            q: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkCorpus {
    /// Round-major: all nodes' first walks, then all second walks, ...
    pub walks: Vec<Vec<usize>>,
    pub walk_length: usize,
    pub walks_per_node: usize,
    pub p: f64,
    pub q: f64,
    pub n_nodes: usize,
    /// Node degrees, used for the negative-sampling noise distribution.
    pub degrees: Vec<usize>,
}

/// Generates `walks_per_node` walks from every node.
///
/// From current node `v` reached from `t`, neighbor `x` is chosen with
/// unnormalized weight `w(v,x) * a(t,x)` where `a` is `1/p` if `x == t`,
/// `1` if `x` neighbors `t`, and `1/q` otherwise. With `p = q = 1` this is
/// a uniform (DeepWalk) walk. Each walk has its own derived generator.
pub fn random_walks(g: &Graph, cfg: &WalkConfig, seed: u64) -> Result<WalkCorpus> {
    g.require_undirected("random_walks")?;
    if !(cfg.p > 0.0 && cfg.q > 0.0) {
        return Err(Error::Config(format!(
            "p and q must be positive (p={}, q={})",
            cfg.p, cfg.q
        )));
    }
    if cfg.walk_length == 0 {
        return Err(Error::Config("walk_length must be at least 1".into()));
    }
    let n = g.n_nodes();
    let jobs: Vec<(usize, usize)> = (0..cfg.walks_per_node)
        .flat_map(|round| (0..n).map(move |start| (round, start)))
        .collect();
    let walks = jobs
        .par_iter()
        .map(|&(round, start)| {
            let mut r = rng::rng_for(seed, &[stream::WALK, round as u64, start as u64]);
            walk_from(g, start, cfg, &mut r)
        })
        .collect();
    Ok(WalkCorpus {
        walks,
        walk_length: cfg.walk_length,
        walks_per_node: cfg.walks_per_node,
        p: cfg.p,
        q: cfg.q,
        n_nodes: n,
        degrees: g.degrees(),
    })
}

fn walk_from(g: &Graph, start: usize, cfg: &WalkConfig, r: &mut rng::Rng) -> Vec<usize> {
    let mut walk = Vec::with_capacity(cfg.walk_length);
    walk.push(start);
    let uniform_bias = cfg.p == 1.0 && cfg.q == 1.0;
    let mut weights: Vec<f64> = Vec::new();
    while walk.len() < cfg.walk_length {
        let cur = *walk.last().expect("walk is non-empty");
        let nbrs = g.neighbors(cur);
        if nbrs.is_empty() {
            break;
        }
        let ws = g.neighbor_weights(cur);
        weights.clear();
        match (walk.len() >= 2, uniform_bias) {
            (true, false) => {
                let prev = walk[walk.len() - 2];
                weights.extend(nbrs.iter().zip(ws).map(|(&x, &w)| {
                    if x == prev {
                        w / cfg.p
                    } else if g.has_edge(x, prev) {
                        w
                    } else {
                        w / cfg.q
                    }
                }));
            }
            _ => weights.extend_from_slice(ws),
        }
        walk.push(nbrs[choose_weighted(&weights, r)]);
    }
    walk
}

fn choose_weighted(weights: &[f64], r: &mut rng::Rng) -> usize {
    let total: f64 = weights.iter().sum();
    let mut target = r.gen::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if target < w {
            return i;
        }
        target -= w;
    }
    weights.len() - 1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SkipGramConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub lr: f64,
}

impl Default for SkipGramConfig {
    fn default() -> Self {
        Self {
            dim: 128,
            window: 10,
            negatives: 5,
            epochs: 5,
            lr: 0.025,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    pub vectors: Matrix,
}

impl EmbeddingTable {
    pub fn dim(&self) -> usize {
        self.vectors.cols()
    }

    pub fn n_nodes(&self) -> usize {
        self.vectors.rows()
    }

    /// CSV with header `d0,d1,...`, one row per node.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        FeatureMatrix::with_prefix(self.vectors.clone(), "d")?.write_csv(path)
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        Ok(EmbeddingTable {
            vectors: FeatureMatrix::read_csv(path)?.into_data(),
        })
    }
}

/// Skip-gram with negative sampling, trained sequentially in corpus order.
///
/// Input vectors start uniform in `±0.5/d`, output vectors at zero. Negatives
/// are drawn proportional to `degree^0.75`. The learning rate decays linearly
/// from `lr` to `lr/100` over all epochs.
pub fn train_skipgram(corpus: &WalkCorpus, cfg: &SkipGramConfig, seed: u64) -> Result<EmbeddingTable> {
    Ok(SkipGram::new(corpus, cfg, seed)?.train(corpus, cfg.epochs).0)
}

/// Trainer state exposed for loss tracking in tests and diagnostics.
pub struct SkipGram {
    cfg: SkipGramConfig,
    input: Matrix,
    output: Matrix,
    noise: Option<WeightedIndex<f64>>,
    r: rng::Rng,
}

impl SkipGram {
    pub fn new(corpus: &WalkCorpus, cfg: &SkipGramConfig, seed: u64) -> Result<Self> {
        if cfg.dim == 0 || cfg.window == 0 {
            return Err(Error::Config(format!(
                "dim ({}) and window ({}) must be positive",
                cfg.dim, cfg.window
            )));
        }
        if corpus.walks.is_empty() {
            return Err(Error::Config("empty walk corpus".into()));
        }
        let n = corpus.n_nodes;
        let mut init = rng::rng_for(seed, &[stream::EMBED_INIT]);
        let input = Matrix::random_uniform(n, cfg.dim, 0.5 / cfg.dim as f64, &mut init);
        let output = Matrix::zeros(n, cfg.dim);
        let noise_w: Vec<f64> = corpus
            .degrees
            .iter()
            .map(|&d| (d as f64).powf(0.75))
            .collect();
        let noise = WeightedIndex::new(&noise_w).ok();
        Ok(Self {
            cfg: *cfg,
            input,
            output,
            noise,
            r: rng::rng_for(seed, &[stream::SKIPGRAM]),
        })
    }

    pub fn embeddings(&self) -> EmbeddingTable {
        EmbeddingTable {
            vectors: self.input.clone(),
        }
    }

    /// Runs `epochs` passes; returns the embeddings and the mean sampled
    /// negative log-likelihood of each epoch.
    pub fn train(mut self, corpus: &WalkCorpus, epochs: usize) -> (EmbeddingTable, Vec<f64>) {
        let total_tokens: usize = corpus.walks.iter().map(Vec::len).sum::<usize>() * epochs;
        let mut seen = 0usize;
        let mut losses = Vec::with_capacity(epochs);
        let d = self.cfg.dim;
        let mut grad_in = vec![0.0; d];
        for _ in 0..epochs {
            let mut loss_sum = 0.0;
            let mut pairs = 0usize;
            for walk in &corpus.walks {
                for (i, &center) in walk.iter().enumerate() {
                    let progress = seen as f64 / total_tokens.max(1) as f64;
                    let lr = self.cfg.lr * (1.0 - 0.99 * progress);
                    seen += 1;
                    let lo = i.saturating_sub(self.cfg.window);
                    let hi = (i + self.cfg.window + 1).min(walk.len());
                    for (j, &ctx) in walk.iter().enumerate().take(hi).skip(lo) {
                        if j == i {
                            continue;
                        }
                        loss_sum += self.update_pair(center, ctx, lr, &mut grad_in);
                        pairs += 1;
                    }
                }
            }
            losses.push(loss_sum / pairs.max(1) as f64);
        }
        (self.embeddings(), losses)
    }

    fn update_pair(&mut self, center: usize, ctx: usize, lr: f64, grad_in: &mut [f64]) -> f64 {
        grad_in.iter_mut().for_each(|g| *g = 0.0);
        let mut loss = 0.0;
        let mut step = |target: usize, label: f64, input: &Matrix, output: &mut Matrix| {
            let v = input.row(center);
            let u = output.row_mut(target);
            let s = dot(v, u);
            let sig = sigmoid(s);
            loss += if label > 0.5 {
                -log_sigmoid(s)
            } else {
                -log_sigmoid(-s)
            };
            let g = lr * (label - sig);
            for ((gi, uk), &vk) in grad_in.iter_mut().zip(u.iter_mut()).zip(v) {
                *gi += g * *uk;
                *uk += g * vk;
            }
        };
        step(ctx, 1.0, &self.input, &mut self.output);
        if let Some(noise) = &self.noise {
            for _ in 0..self.cfg.negatives {
                let neg = noise.sample(&mut self.r);
                if neg == ctx {
                    continue;
                }
                step(neg, 0.0, &self.input, &mut self.output);
            }
        }
        for (a, g) in self.input.row_mut(center).iter_mut().zip(grad_in.iter()) {
            *a += g;
        }
        loss
    }

    /// Mean sampled negative log-likelihood over the given (center, context)
    /// pairs without updating parameters.
    pub fn evaluate(&self, pairs: &[(usize, usize)], negatives: &[Vec<usize>]) -> f64 {
        let mut total = 0.0;
        for ((c, o), negs) in pairs.iter().zip(negatives) {
            let v = self.input.row(*c);
            total -= log_sigmoid(dot(v, self.output.row(*o)));
            for &n in negs {
                total -= log_sigmoid(-dot(v, self.output.row(n)));
            }
        }
        total / pairs.len().max(1) as f64
    }
}

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(sigmoid(x))` without overflow.
#[inline]
pub(crate) fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

/// Walks then skip-gram.
pub fn node2vec(
    g: &Graph,
    walk: &WalkConfig,
    sg: &SkipGramConfig,
    seed: u64,
) -> Result<EmbeddingTable> {
    let corpus = random_walks(g, walk, rng::derive_seed(seed, &[stream::NODE2VEC, 0]))?;
    train_skipgram(&corpus, sg, rng::derive_seed(seed, &[stream::NODE2VEC, 1]))
}
