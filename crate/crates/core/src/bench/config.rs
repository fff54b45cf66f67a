//! Benchmark configuration, method catalogue and per-method hyperparameters.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::baselines::{KMeansConfig, LogRegConfig};
use crate::embeddings::{SkipGramConfig, WalkConfig};
use crate::error::{Error, Result};
use crate::nn::{Arch, ModelConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Classification,
    Clustering,
}

impl Task {
    pub fn primary_metric(self) -> &'static str {
        match self {
            Task::Classification => "accuracy",
            Task::Clustering => "nmi",
        }
    }

    pub fn metrics(self) -> &'static [&'static str] {
        match self {
            Task::Classification => &["accuracy", "f1_macro", "f1_micro"],
            Task::Clustering => &["nmi", "ari", "homogeneity", "completeness"],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Task::Classification => "classification",
            Task::Clustering => "clustering",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    LrClassical,
    NbClassical,
    Node2VecLr,
    Gcn,
    GraphSage,
    GcnFused,
    KMeansClassical,
    Spectral,
    Louvain,
    GcnUnsupKMeans,
    GraphSageUnsupKMeans,
}

impl Method {
    pub const ALL: [Method; 11] = [
        Method::LrClassical,
        Method::NbClassical,
        Method::Node2VecLr,
        Method::Gcn,
        Method::GraphSage,
        Method::GcnFused,
        Method::KMeansClassical,
        Method::Spectral,
        Method::Louvain,
        Method::GcnUnsupKMeans,
        Method::GraphSageUnsupKMeans,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::LrClassical => "lr-classical",
            Method::NbClassical => "nb-classical",
            Method::Node2VecLr => "node2vec-lr",
            Method::Gcn => "gcn",
            Method::GraphSage => "graphsage",
            Method::GcnFused => "gcn-fused",
            Method::KMeansClassical => "kmeans-classical",
            Method::Spectral => "spectral",
            Method::Louvain => "louvain",
            Method::GcnUnsupKMeans => "gcn-unsup-kmeans",
            Method::GraphSageUnsupKMeans => "graphsage-unsup-kmeans",
        }
    }

    pub fn task(self) -> Task {
        match self {
            Method::LrClassical
            | Method::NbClassical
            | Method::Node2VecLr
            | Method::Gcn
            | Method::GraphSage
            | Method::GcnFused => Task::Classification,
            _ => Task::Clustering,
        }
    }

    /// Graph neural network methods, as opposed to traditional baselines.
    pub fn is_gnn(self) -> bool {
        matches!(
            self,
            Method::Gcn
                | Method::GraphSage
                | Method::GcnFused
                | Method::GcnUnsupKMeans
                | Method::GraphSageUnsupKMeans
        )
    }

    pub fn for_task(task: Task) -> Vec<Method> {
        Method::ALL.into_iter().filter(|m| m.task() == task).collect()
    }

    fn default_params(self) -> Value {
        let v = match self {
            Method::LrClassical => serde_json::to_value(LogRegConfig::default()),
            Method::Node2VecLr => serde_json::to_value(Node2VecParams::default()),
            Method::Gcn | Method::GraphSage | Method::GcnFused => {
                serde_json::to_value(GnnParams::default())
            }
            Method::GcnUnsupKMeans | Method::GraphSageUnsupKMeans => {
                serde_json::to_value(GnnParams::unsupervised())
            }
            Method::KMeansClassical => serde_json::to_value(KMeansConfig::default()),
            Method::NbClassical | Method::Spectral | Method::Louvain => {
                serde_json::to_value(NoParams {})
            }
        };
        v.expect("parameter structs serialize")
    }

    fn check_params(self, v: &Value) -> Result<()> {
        let v = v.clone();
        let r = match self {
            Method::LrClassical => serde_json::from_value::<LogRegConfig>(v).map(drop),
            Method::Node2VecLr => serde_json::from_value::<Node2VecParams>(v).map(drop),
            Method::Gcn
            | Method::GraphSage
            | Method::GcnFused
            | Method::GcnUnsupKMeans
            | Method::GraphSageUnsupKMeans => serde_json::from_value::<GnnParams>(v).map(drop),
            Method::KMeansClassical => serde_json::from_value::<KMeansConfig>(v).map(drop),
            Method::NbClassical | Method::Spectral | Method::Louvain => {
                serde_json::from_value::<NoParams>(v).map(drop)
            }
        };
        r.map_err(|e| Error::Config(format!("overrides for `{}`: {e}", self.name())))
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown method `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoParams {}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Node2VecParams {
    pub walk: WalkConfig,
    pub skipgram: SkipGramConfig,
    pub logreg: LogRegConfig,
}

impl Default for Node2VecParams {
    fn default() -> Self {
        Node2VecParams {
            walk: WalkConfig::default(),
            skipgram: SkipGramConfig {
                epochs: 1,
                ..SkipGramConfig::default()
            },
            logreg: LogRegConfig::default(),
        }
    }
}

/// [`ModelConfig`] without the architecture and seed, which the benchmark sets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GnnParams {
    pub layers: usize,
    pub hidden: usize,
    pub dropout: f64,
    pub lr: f64,
    pub epochs: usize,
    pub sage_sample_size: usize,
    pub sage_batch: usize,
}

impl Default for GnnParams {
    fn default() -> Self {
        let m = ModelConfig::default();
        GnnParams {
            layers: m.layers,
            hidden: m.hidden,
            dropout: m.dropout,
            lr: m.lr,
            epochs: m.epochs,
            sage_sample_size: m.sage_sample_size,
            sage_batch: m.sage_batch,
        }
    }
}

impl GnnParams {
    pub fn unsupervised() -> Self {
        GnnParams {
            lr: 0.001,
            ..GnnParams::default()
        }
    }

    pub fn model_config(&self, arch: Arch, seed: u64) -> ModelConfig {
        ModelConfig {
            arch,
            layers: self.layers,
            hidden: self.hidden,
            dropout: self.dropout,
            lr: self.lr,
            epochs: self.epochs,
            sage_sample_size: self.sage_sample_size,
            sage_batch: self.sage_batch,
            seed,
        }
    }
}

pub const DEFAULT_DATASETS: [&str; 3] = ["karate", "cora", "citeseer"];
pub const KNOWN_DATASETS: [&str; 5] = ["karate", "planted", "cora", "citeseer", "pubmed"];
pub const LARGE_DATASETS: [&str; 1] = ["pubmed"];
pub const DATA_DIR_ENV: &str = "GRAPHBENCH_DATA_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub datasets: Vec<String>,
    /// Empty selects every method of the requested task.
    pub methods: Vec<String>,
    pub seeds: Vec<u64>,
    /// Train, validation and test fractions.
    pub split: [f64; 3],
    /// Method name to a JSON object of hyperparameters replacing defaults.
    pub overrides: BTreeMap<String, Value>,
    /// Root holding citation datasets; falls back to `GRAPHBENCH_DATA_DIR`.
    pub data_dir: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            datasets: DEFAULT_DATASETS.iter().map(|s| s.to_string()).collect(),
            methods: Vec::new(),
            seeds: (0..10).collect(),
            split: [0.6, 0.2, 0.2],
            overrides: BTreeMap::new(),
            data_dir: None,
            out_dir: None,
        }
    }
}

impl BenchConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("bench config: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn data_root(&self) -> Option<PathBuf> {
        self.data_dir
            .clone()
            .or_else(|| std::env::var_os(DATA_DIR_ENV).map(PathBuf::from))
    }
}

/// A validated configuration with every method's hyperparameters resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchPlan {
    pub tasks: Vec<Task>,
    pub datasets: Vec<String>,
    pub methods: Vec<Method>,
    pub seeds: Vec<u64>,
    pub split: [f64; 3],
    pub params: BTreeMap<Method, Value>,
}

fn merge(base: &mut Value, patch: &Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (b, p) => *b = p.clone(),
    }
}

impl BenchPlan {
    pub fn new(cfg: &BenchConfig, tasks: &[Task], large: bool) -> Result<Self> {
        if tasks.is_empty() {
            return Err(Error::Config("no task selected".into()));
        }
        if cfg.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        if cfg.split.iter().any(|r| !(0.0..=1.0).contains(r))
            || (cfg.split.iter().sum::<f64>() - 1.0).abs() > 1e-9
            || cfg.split[0] == 0.0
        {
            return Err(Error::Config(format!(
                "split {:?} must be fractions summing to 1 with a non-empty training part",
                cfg.split
            )));
        }
        if cfg.datasets.is_empty() {
            return Err(Error::Config("no datasets selected".into()));
        }
        for (i, d) in cfg.datasets.iter().enumerate() {
            if !KNOWN_DATASETS.contains(&d.as_str()) {
                return Err(Error::Config(format!("unknown dataset `{d}`")));
            }
            if LARGE_DATASETS.contains(&d.as_str()) && !large {
                return Err(Error::Config(format!("dataset `{d}` requires --large")));
            }
            if cfg.datasets[..i].contains(d) {
                return Err(Error::Config(format!("dataset `{d}` listed twice")));
            }
        }
        let mut seen_seeds = cfg.seeds.clone();
        seen_seeds.sort_unstable();
        seen_seeds.dedup();
        if seen_seeds.len() != cfg.seeds.len() {
            return Err(Error::Config("seeds must be distinct".into()));
        }

        let methods: Vec<Method> = if cfg.methods.is_empty() {
            tasks.iter().flat_map(|&t| Method::for_task(t)).collect()
        } else {
            let mut out: Vec<Method> = Vec::new();
            for name in &cfg.methods {
                let m: Method = name.parse()?;
                if !tasks.contains(&m.task()) {
                    return Err(Error::Config(format!(
                        "method `{m}` is a {} method",
                        m.task().name()
                    )));
                }
                if out.contains(&m) {
                    return Err(Error::Config(format!("method `{m}` listed twice")));
                }
                out.push(m);
            }
            out
        };

        for name in cfg.overrides.keys() {
            name.parse::<Method>()?;
        }
        let mut params = BTreeMap::new();
        for &m in &methods {
            let mut v = m.default_params();
            if let Some(patch) = cfg.overrides.get(m.name()) {
                if !patch.is_object() {
                    return Err(Error::Config(format!(
                        "overrides for `{m}` must be a JSON object"
                    )));
                }
                merge(&mut v, patch);
            }
            m.check_params(&v)?;
            params.insert(m, v);
        }
        let plan = BenchPlan {
            tasks: tasks.to_vec(),
            datasets: cfg.datasets.clone(),
            methods,
            seeds: cfg.seeds.clone(),
            split: cfg.split,
            params,
        };
        for &m in &plan.methods {
            if m.is_gnn() {
                let p: GnnParams = plan.params_for(m)?;
                p.model_config(Arch::Gcn, 0).validate()?;
            }
        }
        Ok(plan)
    }

    pub fn params_for<T: DeserializeOwned>(&self, m: Method) -> Result<T> {
        let v = self
            .params
            .get(&m)
            .ok_or_else(|| Error::Config(format!("method `{m}` not planned")))?;
        serde_json::from_value(v.clone()).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn methods_for(&self, task: Task) -> Vec<Method> {
        self.methods.iter().copied().filter(|m| m.task() == task).collect()
    }
}
