//! Model configuration, forward/backward passes over whole models, and the
//! supervised and unsupervised training loops.

use std::borrow::Cow;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Split};
use crate::embeddings::EmbeddingTable;
use crate::error::{Error, Result};
use crate::graph::{normalized_adjacency, Graph};
use crate::linalg::{row_argmax, Matrix, SparseMatrix};
use crate::metrics::{classification_metrics, ClassificationMetrics};
use crate::rng::{self, derive_seed, stream};

use super::layers::{
    dropout, gcn_backward, gcn_forward, sage_backward, sage_forward, sample_blocks, Activation,
    GcnCache, SageBlock, SageCache,
};
use super::loss::{reconstruction_loss, softmax_cross_entropy};
use super::params::{adam_step, AdamConfig, Arch, ModelParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub arch: Arch,
    pub layers: usize,
    pub hidden: usize,
    pub dropout: f64,
    pub lr: f64,
    pub epochs: usize,
    pub sage_sample_size: usize,
    pub sage_batch: usize,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            arch: Arch::Gcn,
            layers: 2,
            hidden: 128,
            dropout: 0.5,
            lr: 0.01,
            epochs: 200,
            sage_sample_size: 25,
            sage_batch: 512,
            seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn new(arch: Arch, seed: u64) -> Self {
        ModelConfig {
            arch,
            seed,
            ..ModelConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers < 1 {
            return Err(Error::Config("a model needs at least one layer".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!(
                "dropout {} outside [0, 1)",
                self.dropout
            )));
        }
        if self.hidden == 0 || self.sage_sample_size == 0 || self.sage_batch == 0 {
            return Err(Error::Config(
                "hidden, sage_sample_size and sage_batch must be positive".into(),
            ));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("learning rate {} must be positive", self.lr)));
        }
        Ok(())
    }

    fn dims(&self, input: usize, output: usize) -> Vec<usize> {
        let mut d = vec![input];
        d.extend(std::iter::repeat(self.hidden).take(self.layers - 1));
        d.push(output);
        d
    }
}

/// Message-passing structure for one forward pass.
#[derive(Clone, Copy)]
pub enum Propagation<'a> {
    Gcn(&'a SparseMatrix),
    /// One block per layer, input layer first.
    Sage(&'a [SageBlock]),
}

enum LayerCache {
    Gcn(GcnCache),
    Sage(SageCache),
}

pub struct ForwardPass<'a> {
    pub output: Matrix,
    /// Input of each layer after dropout; the first borrows the features
    /// when no dropout is applied.
    inputs: Vec<Cow<'a, Matrix>>,
    caches: Vec<LayerCache>,
    masks: Vec<Option<Matrix>>,
}

fn activation_for(layer: usize, n_layers: usize) -> Activation {
    if layer + 1 == n_layers {
        Activation::None
    } else {
        Activation::Relu
    }
}

/// Runs every layer. Hidden layers use ReLU and the last layer is linear.
/// With `drop = Some((p, rng))`, inverted dropout is applied to each layer's input.
pub fn model_forward<'a>(
    params: &ModelParams,
    x: &'a Matrix,
    prop: Propagation<'_>,
    mut drop: Option<(f64, &mut rng::Rng)>,
) -> Result<ForwardPass<'a>> {
    let n_layers = params.n_layers();
    if let Propagation::Sage(blocks) = prop {
        if blocks.len() != n_layers {
            return Err(Error::Shape(format!(
                "{} blocks for {n_layers} layers",
                blocks.len()
            )));
        }
    }
    let mut inputs: Vec<Cow<'a, Matrix>> = Vec::with_capacity(n_layers);
    let mut caches = Vec::with_capacity(n_layers);
    let mut masks = Vec::with_capacity(n_layers);
    let mut h: Cow<'a, Matrix> = Cow::Borrowed(x);
    for l in 0..n_layers {
        let act = activation_for(l, n_layers);
        let input = match drop.as_mut() {
            Some((p, r)) if *p > 0.0 => {
                let (dropped, mask) = dropout(&h, *p, r);
                masks.push(Some(mask));
                Cow::Owned(dropped)
            }
            _ => {
                masks.push(None);
                h
            }
        };
        let (out, cache) = match prop {
            Propagation::Gcn(a) => {
                let (o, c) = gcn_forward(&input, a, params.weight(l), params.bias(l), act)?;
                (o, LayerCache::Gcn(c))
            }
            Propagation::Sage(blocks) => {
                let (o, c) = sage_forward(
                    &input,
                    &blocks[l],
                    params.weight(l),
                    params.neigh_weight(l),
                    params.bias(l),
                    act,
                )?;
                (o, LayerCache::Sage(c))
            }
        };
        inputs.push(input);
        caches.push(cache);
        h = Cow::Owned(out);
    }
    Ok(ForwardPass {
        output: h.into_owned(),
        inputs,
        caches,
        masks,
    })
}

/// Backpropagates `d_output` and stores gradients on every tensor.
pub fn model_backward(
    params: &mut ModelParams,
    pass: &ForwardPass<'_>,
    prop: Propagation<'_>,
    d_output: Matrix,
) -> Result<()> {
    let mut d = d_output;
    for l in (0..params.n_layers()).rev() {
        let need_input = l > 0;
        let h = &pass.inputs[l];
        let (grads, d_in) = match (&pass.caches[l], prop) {
            (LayerCache::Gcn(c), Propagation::Gcn(a)) => {
                let g = gcn_backward(h, c, a, params.weight(l), &d, need_input)?;
                (vec![g.weight, Matrix::from_vec(1, g.bias.len(), g.bias)?], g.input)
            }
            (LayerCache::Sage(c), Propagation::Sage(blocks)) => {
                let g = sage_backward(
                    h,
                    c,
                    &blocks[l],
                    params.weight(l),
                    params.neigh_weight(l),
                    &d,
                    need_input,
                )?;
                (
                    vec![g.w_self, g.w_neigh, Matrix::from_vec(1, g.bias.len(), g.bias)?],
                    g.input,
                )
            }
            _ => return Err(Error::Contract("propagation does not match forward pass".into())),
        };
        for (t, g) in params.layers[l].iter_mut().zip(grads) {
            t.grad = Some(g);
        }
        if let Some(mut di) = d_in {
            if let Some(mask) = &pass.masks[l] {
                for (g, m) in di.as_mut_slice().iter_mut().zip(mask.as_slice()) {
                    *g *= m;
                }
            }
            d = di;
        }
    }
    Ok(())
}

fn check_finite(params: &ModelParams, loss: f64, epoch: usize) -> Result<()> {
    if !loss.is_finite() {
        return Err(Error::Training {
            epoch,
            message: format!("loss is {loss}"),
        });
    }
    if !params.tensors().all(|t| {
        t.data.all_finite() && t.grad.as_ref().map_or(true, |g| g.all_finite())
    }) {
        return Err(Error::Training {
            epoch,
            message: "non-finite parameter or gradient".into(),
        });
    }
    Ok(())
}

/// Full-neighborhood inference.
pub fn predict_full(params: &ModelParams, g: &Graph, x: &Matrix) -> Result<Matrix> {
    match params.arch {
        Arch::Gcn => {
            let a = normalized_adjacency(g)?;
            Ok(model_forward(params, x, Propagation::Gcn(&a), None)?.output)
        }
        Arch::Sage => {
            let blocks = vec![SageBlock::full(g); params.n_layers()];
            Ok(model_forward(params, x, Propagation::Sage(&blocks), None)?.output)
        }
    }
}

/// Inference with a precomputed propagation structure.
fn predict_with(params: &ModelParams, x: &Matrix, eval: &EvalPlan) -> Result<Matrix> {
    let prop = match eval {
        EvalPlan::Gcn(a) => Propagation::Gcn(a),
        EvalPlan::Sage(b) => Propagation::Sage(b),
    };
    Ok(model_forward(params, x, prop, None)?.output)
}

enum EvalPlan {
    Gcn(SparseMatrix),
    Sage(Vec<SageBlock>),
}

impl EvalPlan {
    fn new(arch: Arch, g: &Graph, layers: usize) -> Result<Self> {
        Ok(match arch {
            Arch::Gcn => EvalPlan::Gcn(normalized_adjacency(g)?),
            Arch::Sage => EvalPlan::Sage(vec![SageBlock::full(g); layers]),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_accuracy: f64,
}

#[derive(Debug, Clone)]
pub struct TrainedClassifier {
    /// Best-validation parameters.
    pub params: ModelParams,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub test_metrics: ClassificationMetrics,
    pub test_predictions: Vec<usize>,
}

fn accuracy_on(pred: &[usize], labels: &[usize], idx: &[usize]) -> f64 {
    if idx.is_empty() {
        return f64::NAN;
    }
    idx.iter().filter(|&&i| pred[i] == labels[i]).count() as f64 / idx.len() as f64
}

pub fn train_node_classifier(
    ds: &Dataset,
    split: &Split,
    cfg: &ModelConfig,
) -> Result<TrainedClassifier> {
    train_node_classifier_on(
        &ds.graph,
        ds.features.data(),
        &ds.labels,
        ds.n_classes,
        split,
        cfg,
    )
}

/// Trains on explicit features, e.g. raw attributes fused with structural ones.
///
/// Epoch 0 in the history is the initialization. The checkpoint kept is the
/// latest epoch attaining the best validation accuracy.
pub fn train_node_classifier_on(
    g: &Graph,
    x: &Matrix,
    labels: &[usize],
    n_classes: usize,
    split: &Split,
    cfg: &ModelConfig,
) -> Result<TrainedClassifier> {
    cfg.validate()?;
    if x.rows() != g.n_nodes() || labels.len() != g.n_nodes() {
        return Err(Error::Shape(format!(
            "{} feature rows and {} labels for {} nodes",
            x.rows(),
            labels.len(),
            g.n_nodes()
        )));
    }
    if split.train.is_empty() {
        return Err(Error::Split("empty training set".into()));
    }
    if let Some(&bad) = split
        .train
        .iter()
        .chain(&split.val)
        .chain(&split.test)
        .find(|&&i| i >= g.n_nodes())
    {
        return Err(Error::Split(format!("node {bad} outside the graph")));
    }
    let mut params = ModelParams::init(cfg.arch, &cfg.dims(x.cols(), n_classes), cfg.seed)?;
    let adam = AdamConfig::with_lr(cfg.lr);
    let eval = EvalPlan::new(cfg.arch, g, cfg.layers)?;
    let anorm = match &eval {
        EvalPlan::Gcn(a) => Some(a),
        EvalPlan::Sage(_) => None,
    };

    let validate = |p: &ModelParams| -> Result<f64> {
        let pred = row_argmax(&predict_with(p, x, &eval)?);
        Ok(accuracy_on(&pred, labels, &split.val))
    };
    let mut history = vec![EpochRecord {
        epoch: 0,
        train_loss: f64::NAN,
        val_accuracy: validate(&params)?,
    }];
    let mut best = (history[0].val_accuracy, 0usize, params.clone());

    for epoch in 1..=cfg.epochs {
        let mut drop_rng = rng::rng_for(cfg.seed, &[stream::DROPOUT, epoch as u64]);
        let loss = match anorm {
            Some(a) => {
                let prop = Propagation::Gcn(a);
                let pass = model_forward(&params, x, prop, Some((cfg.dropout, &mut drop_rng)))?;
                let (loss, grad) = softmax_cross_entropy(&pass.output, labels, &split.train)?;
                model_backward(&mut params, &pass, prop, grad)?;
                check_finite(&params, loss, epoch)?;
                adam_step(&mut params, &adam);
                loss
            }
            None => {
                let mut order = split.train.clone();
                order.shuffle(&mut rng::rng_for(cfg.seed, &[stream::BATCH, epoch as u64]));
                let mut sample_rng = rng::rng_for(cfg.seed, &[stream::SAMPLE, epoch as u64]);
                let mut total = 0.0;
                for batch in order.chunks(cfg.sage_batch) {
                    let blocks = sample_blocks(g, batch, cfg.layers, cfg.sage_sample_size, &mut sample_rng)
                        .into_global_input(g.n_nodes());
                    let batch_labels: Vec<usize> = batch.iter().map(|&i| labels[i]).collect();
                    let rows: Vec<usize> = (0..batch.len()).collect();
                    let prop = Propagation::Sage(&blocks);
                    let pass = model_forward(&params, x, prop, Some((cfg.dropout, &mut drop_rng)))?;
                    let (loss, grad) = softmax_cross_entropy(&pass.output, &batch_labels, &rows)?;
                    model_backward(&mut params, &pass, prop, grad)?;
                    check_finite(&params, loss, epoch)?;
                    adam_step(&mut params, &adam);
                    total += loss * batch.len() as f64;
                }
                total / order.len() as f64
            }
        };
        let val_accuracy = validate(&params)?;
        if val_accuracy >= best.0 || best.0.is_nan() {
            best = (val_accuracy, epoch, params.clone());
        }
        history.push(EpochRecord {
            epoch,
            train_loss: loss,
            val_accuracy,
        });
    }

    let (_, best_epoch, params) = best;
    let pred = row_argmax(&predict_with(&params, x, &eval)?);
    let test_predictions: Vec<usize> = split.test.iter().map(|&i| pred[i]).collect();
    let test_truth: Vec<usize> = split.test.iter().map(|&i| labels[i]).collect();
    let test_metrics = if split.test.is_empty() {
        ClassificationMetrics {
            accuracy: f64::NAN,
            f1_macro: f64::NAN,
            f1_micro: f64::NAN,
            confusion: vec![vec![0; n_classes]; n_classes],
        }
    } else {
        classification_metrics(&test_truth, &test_predictions, n_classes)?
    };
    Ok(TrainedClassifier {
        params,
        history,
        best_epoch,
        test_metrics,
        test_predictions,
    })
}

#[derive(Debug, Clone)]
pub struct TrainedEncoder {
    pub params: ModelParams,
    pub embeddings: EmbeddingTable,
    /// Reconstruction loss per epoch.
    pub losses: Vec<f64>,
}

/// Embeddings from a model trained on the edge reconstruction objective.
pub fn train_unsupervised_embeddings(ds: &Dataset, cfg: &ModelConfig) -> Result<EmbeddingTable> {
    Ok(train_encoder(&ds.graph, ds.features.data(), cfg)?.embeddings)
}

/// Every layer is `cfg.hidden` wide; the embedding is the last layer's
/// linear output under full-neighborhood propagation.
pub fn train_encoder(g: &Graph, x: &Matrix, cfg: &ModelConfig) -> Result<TrainedEncoder> {
    cfg.validate()?;
    if x.rows() != g.n_nodes() {
        return Err(Error::Shape(format!(
            "{} feature rows for {} nodes",
            x.rows(),
            g.n_nodes()
        )));
    }
    let mut params = ModelParams::init(cfg.arch, &cfg.dims(x.cols(), cfg.hidden), cfg.seed)?;
    let adam = AdamConfig::with_lr(cfg.lr);
    let anorm = match cfg.arch {
        Arch::Gcn => Some(normalized_adjacency(g)?),
        Arch::Sage => None,
    };
    let mut losses = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        let e = epoch as u64;
        let mut drop_rng = rng::rng_for(cfg.seed, &[stream::DROPOUT, e]);
        let blocks;
        let prop = match &anorm {
            Some(a) => Propagation::Gcn(a),
            None => {
                let mut r = rng::rng_for(cfg.seed, &[stream::SAMPLE, e]);
                blocks = (0..cfg.layers)
                    .map(|_| SageBlock::sampled(g, cfg.sage_sample_size, &mut r))
                    .collect::<Vec<_>>();
                Propagation::Sage(&blocks)
            }
        };
        let pass = model_forward(&params, x, prop, Some((cfg.dropout, &mut drop_rng)))?;
        let neg_seed = derive_seed(cfg.seed, &[stream::NEGATIVE, e]);
        let (loss, grad) = reconstruction_loss(&pass.output, g, 1, neg_seed)?;
        model_backward(&mut params, &pass, prop, grad)?;
        check_finite(&params, loss, epoch)?;
        adam_step(&mut params, &adam);
        losses.push(loss);
    }
    let vectors = predict_full(&params, g, x)?;
    if !vectors.all_finite() {
        return Err(Error::Training {
            epoch: cfg.epochs,
            message: "non-finite embeddings".into(),
        });
    }
    Ok(TrainedEncoder {
        params,
        embeddings: EmbeddingTable { vectors },
        losses,
    })
}
