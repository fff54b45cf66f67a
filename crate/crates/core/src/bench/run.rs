//! Executes (method, dataset, seed) runs and assembles the report.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use crate::baselines::{
    kmeans, kmeans_with, logistic_regression_fit, naive_bayes_fit, spectral_clustering,
    KMeansConfig, LogRegConfig,
};
use crate::community::louvain;
use crate::dataset::{
    karate_club, load_citation_dataset, locate_citation_files, planted_partition, stratified_split,
    Dataset, PlantedPartition,
};
use crate::embeddings::node2vec;
use crate::error::{Error, Result};
use crate::features::{fuse_with, structural_features, FeatureMatrix, Standardizer, StructuralFeature};
use crate::linalg::{dot, Matrix};
use crate::metrics::{classification_metrics, clustering_metrics, ClassificationMetrics};
use crate::nn::{train_encoder, train_node_classifier_on, Arch};

use super::config::{BenchConfig, BenchPlan, GnnParams, Method, Node2VecParams, Task};
use super::report::{BenchReport, DatasetInfo, Provenance, RunRecord, TaskReport};

/// A dataset together with its structural feature matrix.
#[derive(Debug, Clone)]
pub struct PreparedDataset {
    pub dataset: Dataset,
    pub classical: FeatureMatrix,
}

impl PreparedDataset {
    pub fn new(dataset: Dataset) -> Result<Self> {
        let classical = structural_features(&dataset.graph, &StructuralFeature::ALL)?;
        Ok(PreparedDataset { dataset, classical })
    }
}

pub fn load_dataset(name: &str, data_root: Option<&Path>) -> Result<Dataset> {
    match name {
        "karate" => Ok(karate_club()),
        "planted" => Ok(planted_partition(&PlantedPartition::default(), 0)),
        _ => {
            let root = data_root.ok_or_else(|| {
                Error::Config(format!(
                    "dataset `{name}` needs `data_dir` or {}",
                    super::config::DATA_DIR_ENV
                ))
            })?;
            let (content, cites) = locate_citation_files(root, name).ok_or_else(|| {
                Error::Config(format!(
                    "no {name}.content / {name}.cites under {}",
                    root.display()
                ))
            })?;
            Ok(load_citation_dataset(name, &content, &cites)?.0)
        }
    }
}

fn row_normalized(m: &Matrix) -> Matrix {
    let mut out = m.clone();
    for i in 0..out.rows() {
        let row = out.row_mut(i);
        let norm = dot(row, row).sqrt();
        if norm > 0.0 {
            row.iter_mut().for_each(|v| *v /= norm);
        }
    }
    out
}

fn classify(
    plan: &BenchPlan,
    method: Method,
    data: &PreparedDataset,
    seed: u64,
) -> Result<ClassificationMetrics> {
    let ds = &data.dataset;
    let split = stratified_split(&ds.labels, plan.split, seed)?;
    if split.test.is_empty() {
        return Err(Error::Split(format!("empty test set on `{}`", ds.name)));
    }
    let truth: Vec<usize> = split.test.iter().map(|&i| ds.labels[i]).collect();
    let scored = |pred: Vec<usize>| -> Result<ClassificationMetrics> {
        let test_pred: Vec<usize> = split.test.iter().map(|&i| pred[i]).collect();
        classification_metrics(&truth, &test_pred, ds.n_classes)
    };
    let zscored = |x: &Matrix| -> Result<Matrix> {
        Ok(Standardizer::fit(x, &split.train)?.transform(x))
    };
    match method {
        Method::LrClassical => {
            let cfg: LogRegConfig = plan.params_for(method)?;
            let x = zscored(data.classical.data())?;
            let model = logistic_regression_fit(&x, &ds.labels, &split.train, &cfg)?;
            scored(model.predict(&x)?)
        }
        Method::NbClassical => {
            let x = zscored(data.classical.data())?;
            scored(naive_bayes_fit(&x, &ds.labels, &split.train)?.predict(&x))
        }
        Method::Node2VecLr => {
            let p: Node2VecParams = plan.params_for(method)?;
            let emb = node2vec(&ds.graph, &p.walk, &p.skipgram, seed)?;
            let x = zscored(&emb.vectors)?;
            let model = logistic_regression_fit(&x, &ds.labels, &split.train, &p.logreg)?;
            scored(model.predict(&x)?)
        }
        Method::Gcn | Method::GraphSage | Method::GcnFused => {
            let p: GnnParams = plan.params_for(method)?;
            let arch = if method == Method::GraphSage {
                Arch::Sage
            } else {
                Arch::Gcn
            };
            let fused;
            let x = if method == Method::GcnFused {
                fused = fuse_with(&ds.features, &data.classical, Some(&split.train))?;
                fused.data()
            } else {
                ds.features.data()
            };
            let cfg = p.model_config(arch, seed);
            let trained = train_node_classifier_on(&ds.graph, x, &ds.labels, ds.n_classes, &split, &cfg)?;
            Ok(trained.test_metrics)
        }
        other => Err(Error::Contract(format!("`{other}` is not a classification method"))),
    }
}

fn cluster(
    plan: &BenchPlan,
    method: Method,
    data: &PreparedDataset,
    seed: u64,
) -> Result<(crate::metrics::ClusteringMetrics, usize)> {
    let ds = &data.dataset;
    let k = ds.n_classes;
    let partition = match method {
        Method::KMeansClassical => {
            let cfg: KMeansConfig = plan.params_for(method)?;
            let x = Standardizer::fit_all(data.classical.data())?.transform(data.classical.data());
            kmeans_with(&x, k, seed, &cfg)?.partition
        }
        Method::Spectral => spectral_clustering(&ds.graph, k, seed)?,
        Method::Louvain => louvain(&ds.graph, seed)?,
        Method::GcnUnsupKMeans | Method::GraphSageUnsupKMeans => {
            let p: GnnParams = plan.params_for(method)?;
            let arch = if method == Method::GcnUnsupKMeans {
                Arch::Gcn
            } else {
                Arch::Sage
            };
            let enc = train_encoder(&ds.graph, ds.features.data(), &p.model_config(arch, seed))?;
            kmeans(&row_normalized(&enc.embeddings.vectors), k, seed)?.partition
        }
        other => return Err(Error::Contract(format!("`{other}` is not a clustering method"))),
    };
    Ok((
        clustering_metrics(&ds.labels, partition.assign())?,
        partition.n_communities(),
    ))
}

fn execute(plan: &BenchPlan, method: Method, data: &PreparedDataset, seed: u64) -> Result<RunRecord> {
    let start = Instant::now();
    let mut record = RunRecord {
        task: method.task(),
        method: method.name().to_string(),
        dataset: data.dataset.name.clone(),
        seed,
        classification: None,
        clustering: None,
        n_clusters: None,
        wall_time_ms: 0.0,
    };
    match method.task() {
        Task::Classification => record.classification = Some(classify(plan, method, data, seed)?),
        Task::Clustering => {
            let (m, c) = cluster(plan, method, data, seed)?;
            record.clustering = Some(m);
            record.n_clusters = Some(c);
        }
    }
    record.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(record)
}

/// Runs every planned (method, dataset, seed) combination on prepared data.
pub fn run_plan(cfg: &BenchConfig, plan: &BenchPlan, data: &[PreparedDataset]) -> Result<BenchReport> {
    let mut units = Vec::new();
    for &m in &plan.methods {
        for (d, _) in data.iter().enumerate() {
            for &s in &plan.seeds {
                units.push((m, d, s));
            }
        }
    }
    let records: Vec<RunRecord> = units
        .par_iter()
        .map(|&(m, d, s)| {
            execute(plan, m, &data[d], s).map_err(|e| {
                Error::Invalid(format!("{m} on {} (seed {s}): {e}", data[d].dataset.name))
            })
        })
        .collect::<Result<_>>()?;

    let mut report = BenchReport {
        provenance: Provenance::new(cfg, plan, data.iter().map(|d| DatasetInfo::of(&d.dataset)).collect()),
        classification: None,
        clustering: None,
    };
    for &task in &plan.tasks {
        let methods = plan.methods_for(task);
        if methods.is_empty() {
            continue;
        }
        let runs: Vec<RunRecord> = records.iter().filter(|r| r.task == task).cloned().collect();
        let tr = TaskReport::assemble(task, &methods, &plan.datasets, &plan.seeds, runs)?;
        match task {
            Task::Classification => report.classification = Some(tr),
            Task::Clustering => report.clustering = Some(tr),
        }
    }
    Ok(report)
}

/// Validates `cfg`, loads and prepares every dataset, then runs the plan.
pub fn run_bench(cfg: &BenchConfig, tasks: &[Task], large: bool) -> Result<BenchReport> {
    let plan = BenchPlan::new(cfg, tasks, large)?;
    let root = cfg.data_root();
    let data = plan
        .datasets
        .iter()
        .map(|name| load_dataset(name, root.as_deref()).and_then(PreparedDataset::new))
        .collect::<Result<Vec<_>>>()?;
    run_plan(cfg, &plan, &data)
}

pub fn run_classification_bench(cfg: &BenchConfig) -> Result<BenchReport> {
    run_bench(cfg, &[Task::Classification], false)
}

pub fn run_clustering_bench(cfg: &BenchConfig) -> Result<BenchReport> {
    run_bench(cfg, &[Task::Clustering], false)
}
