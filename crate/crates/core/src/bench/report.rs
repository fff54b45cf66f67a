//! Benchmark report, statistical comparisons and table emission.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::metrics::{compare_methods, ClassificationMetrics, ClusteringMetrics, Comparison, RunSummary};

use super::config::{BenchConfig, BenchPlan, Method, Task};

/// Report keys that vary between otherwise identical runs.
pub const TIMING_KEYS: [&str; 2] = ["wall_time_ms", "generated_at"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub task: Task,
    pub method: String,
    pub dataset: String,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub classification: Option<ClassificationMetrics>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub clustering: Option<ClusteringMetrics>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub n_clusters: Option<usize>,
    pub wall_time_ms: f64,
}

impl RunRecord {
    pub fn metric(&self, name: &str) -> Option<f64> {
        if let Some(c) = &self.classification {
            return match name {
                "accuracy" => Some(c.accuracy),
                "f1_macro" => Some(c.f1_macro),
                "f1_micro" => Some(c.f1_micro),
                _ => None,
            };
        }
        let c = self.clustering.as_ref()?;
        match name {
            "nmi" => Some(c.nmi),
            "ari" => Some(c.ari),
            "homogeneity" => Some(c.homogeneity),
            "completeness" => Some(c.completeness),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub dataset: String,
    pub metric: String,
    pub gnn: String,
    pub baseline: String,
    #[serde(flatten)]
    pub stats: Comparison,
}

/// Best GNN against best traditional method on one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub dataset: String,
    pub metric: String,
    pub best_gnn: String,
    pub gnn_mean: f64,
    pub best_baseline: String,
    pub baseline_mean: f64,
    /// Present when at least two seeds were run.
    pub p_two_sided: Option<f64>,
    pub gnn_ahead: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskReport {
    pub task: Task,
    pub primary_metric: String,
    pub methods: Vec<String>,
    pub datasets: Vec<String>,
    /// Metric name to one summary per (method, dataset), method-major.
    pub summaries: BTreeMap<String, Vec<RunSummary>>,
    pub comparisons: Vec<ComparisonRow>,
    pub findings: Vec<Finding>,
    pub runs: Vec<RunRecord>,
}

impl TaskReport {
    pub fn assemble(
        task: Task,
        methods: &[Method],
        datasets: &[String],
        seeds: &[u64],
        runs: Vec<RunRecord>,
    ) -> Result<Self> {
        let values = |m: &str, d: &str, metric: &str| -> Result<Vec<f64>> {
            seeds
                .iter()
                .map(|&s| {
                    runs.iter()
                        .find(|r| r.method == m && r.dataset == d && r.seed == s)
                        .and_then(|r| r.metric(metric))
                        .ok_or_else(|| {
                            Error::Invalid(format!("missing {metric} for {m} on {d}, seed {s}"))
                        })
                })
                .collect()
        };
        let mut summaries = BTreeMap::new();
        for &metric in task.metrics() {
            let mut cells = Vec::new();
            for m in methods {
                for d in datasets {
                    cells.push(RunSummary::new(m.name(), d.clone(), values(m.name(), d, metric)?));
                }
            }
            summaries.insert(metric.to_string(), cells);
        }
        let primary = task.primary_metric();
        let cell = |m: Method, d: &str| -> &RunSummary {
            summaries[primary]
                .iter()
                .find(|c| c.method == m.name() && c.dataset == d)
                .expect("summary for every planned cell")
        };
        let gnns: Vec<Method> = methods.iter().copied().filter(|m| m.is_gnn()).collect();
        let baselines: Vec<Method> = methods.iter().copied().filter(|m| !m.is_gnn()).collect();
        let mut comparisons = Vec::new();
        let mut findings = Vec::new();
        for d in datasets {
            if seeds.len() >= 2 {
                for &g in &gnns {
                    for &b in &baselines {
                        comparisons.push(ComparisonRow {
                            dataset: d.clone(),
                            metric: primary.to_string(),
                            gnn: g.name().to_string(),
                            baseline: b.name().to_string(),
                            stats: compare_methods(&cell(g, d).values, &cell(b, d).values)?,
                        });
                    }
                }
            }
            let best = |set: &[Method]| -> Option<Method> {
                set.iter().copied().fold(None, |acc, m| match acc {
                    Some(a) if cell(a, d).mean >= cell(m, d).mean => Some(a),
                    _ => Some(m),
                })
            };
            if let (Some(g), Some(b)) = (best(&gnns), best(&baselines)) {
                let (gs, bs) = (cell(g, d), cell(b, d));
                let p = if seeds.len() >= 2 {
                    Some(compare_methods(&gs.values, &bs.values)?.p_two_sided)
                } else {
                    None
                };
                findings.push(Finding {
                    dataset: d.clone(),
                    metric: primary.to_string(),
                    best_gnn: g.name().to_string(),
                    gnn_mean: gs.mean,
                    best_baseline: b.name().to_string(),
                    baseline_mean: bs.mean,
                    p_two_sided: p,
                    gnn_ahead: gs.mean > bs.mean,
                });
            }
        }
        Ok(TaskReport {
            task,
            primary_metric: primary.to_string(),
            methods: methods.iter().map(|m| m.name().to_string()).collect(),
            datasets: datasets.to_vec(),
            summaries,
            comparisons,
            findings,
            runs,
        })
    }

    pub fn summary(&self, metric: &str, method: &str, dataset: &str) -> Option<&RunSummary> {
        self.summaries
            .get(metric)?
            .iter()
            .find(|c| c.method == method && c.dataset == dataset)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub name: String,
    pub n_nodes: usize,
    pub n_edges: usize,
    pub n_classes: usize,
    pub n_features: usize,
}

impl DatasetInfo {
    pub fn of(ds: &Dataset) -> Self {
        DatasetInfo {
            name: ds.name.clone(),
            n_nodes: ds.n_nodes(),
            n_edges: ds.graph.n_edges(),
            n_classes: ds.n_classes,
            n_features: ds.features.n_cols(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub build_id: String,
    /// Seconds since the Unix epoch.
    pub generated_at: u64,
    pub config: BenchConfig,
    /// Hyperparameters actually used, per method.
    pub hyperparameters: BTreeMap<String, Value>,
    pub datasets: Vec<DatasetInfo>,
}

impl Provenance {
    pub fn new(cfg: &BenchConfig, plan: &BenchPlan, datasets: Vec<DatasetInfo>) -> Self {
        Provenance {
            build_id: build_id(),
            generated_at: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            config: cfg.clone(),
            hyperparameters: plan
                .params
                .iter()
                .map(|(m, v)| (m.name().to_string(), v.clone()))
                .collect(),
            datasets,
        }
    }
}

pub fn build_id() -> String {
    match option_env!("GRAPHBENCH_BUILD_ID") {
        Some(id) => format!("graphbench {} ({id})", env!("CARGO_PKG_VERSION")),
        None => format!("graphbench {}", env!("CARGO_PKG_VERSION")),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub provenance: Provenance,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub classification: Option<TaskReport>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub clustering: Option<TaskReport>,
}

impl BenchReport {
    pub fn task(&self, task: Task) -> Option<&TaskReport> {
        match task {
            Task::Classification => self.classification.as_ref(),
            Task::Clustering => self.clustering.as_ref(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Removes [`TIMING_KEYS`] at every depth.
pub fn strip_timing(v: &mut Value) {
    match v {
        Value::Object(map) => {
            for k in TIMING_KEYS {
                map.remove(k);
            }
            map.values_mut().for_each(strip_timing);
        }
        Value::Array(items) => items.iter_mut().for_each(strip_timing),
        _ => {}
    }
}

pub const CELL_DECIMALS: usize = 4;

pub fn format_cell(s: &RunSummary) -> String {
    format!("{:.*} ± {:.*}", CELL_DECIMALS, s.mean, CELL_DECIMALS, s.std)
}

/// Methods as rows, datasets as columns, `mean ± std` cells.
pub fn markdown_table(tr: &TaskReport, metric: &str) -> String {
    let mut out = String::new();
    let _ = write!(out, "| Method |");
    for d in &tr.datasets {
        let _ = write!(out, " {d} |");
    }
    out.push('\n');
    out.push_str("|---|");
    out.push_str(&"---|".repeat(tr.datasets.len()));
    out.push('\n');
    for m in &tr.methods {
        let _ = write!(out, "| {m} |");
        for d in &tr.datasets {
            let cell = tr.summary(metric, m, d).map(format_cell).unwrap_or_default();
            let _ = write!(out, " {cell} |");
        }
        out.push('\n');
    }
    out
}

fn markdown_document(tr: &TaskReport) -> String {
    let mut out = format!(
        "# {} ({})\n\n",
        capitalize(tr.task.name()),
        tr.primary_metric
    );
    out.push_str(&markdown_table(tr, &tr.primary_metric));
    for &metric in tr.task.metrics() {
        if metric != tr.primary_metric {
            let _ = write!(out, "\n## {metric}\n\n{}", markdown_table(tr, metric));
        }
    }
    out
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    c.next()
        .map(|f| f.to_uppercase().chain(c).collect())
        .unwrap_or_default()
}

/// One row per (method, dataset, metric) at [`CELL_DECIMALS`] places.
pub fn summary_csv(tr: &TaskReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["method", "dataset", "metric", "mean", "std", "n_seeds"])?;
    for &metric in tr.task.metrics() {
        for s in &tr.summaries[metric] {
            w.write_record([
                s.method.clone(),
                s.dataset.clone(),
                metric.to_string(),
                format!("{:.*}", CELL_DECIMALS, s.mean),
                format!("{:.*}", CELL_DECIMALS, s.std),
                s.values.len().to_string(),
            ])?;
        }
    }
    String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.into_error()))?)
        .map_err(|e| Error::Invalid(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct SummaryRow {
    pub method: String,
    pub dataset: String,
    pub metric: String,
    pub mean: f64,
    pub std: f64,
    pub n_seeds: usize,
}

pub fn parse_summary_csv(text: &str) -> Result<Vec<SummaryRow>> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

fn comparisons_csv(report: &BenchReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "task", "dataset", "metric", "gnn", "baseline", "t", "p_two_sided", "cohens_d",
        "degenerate", "ci95_gnn_low", "ci95_gnn_high", "ci95_baseline_low", "ci95_baseline_high",
    ])?;
    for tr in [&report.classification, &report.clustering].into_iter().flatten() {
        for c in &tr.comparisons {
            let s = &c.stats;
            w.write_record([
                tr.task.name().to_string(),
                c.dataset.clone(),
                c.metric.clone(),
                c.gnn.clone(),
                c.baseline.clone(),
                s.t.to_string(),
                s.p_two_sided.to_string(),
                s.cohens_d.to_string(),
                s.degenerate.to_string(),
                s.ci95_a.0.to_string(),
                s.ci95_a.1.to_string(),
                s.ci95_b.0.to_string(),
                s.ci95_b.1.to_string(),
            ])?;
        }
    }
    String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.into_error()))?)
        .map_err(|e| Error::Invalid(e.to_string()))
}

/// Writes the per-task tables, `comparisons.csv` and `report.json` into
/// `dir`, returning the paths written.
pub fn emit_tables(report: &BenchReport, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut put = |name: &str, body: String| -> Result<()> {
        let path = dir.join(name);
        fs::write(&path, body)?;
        written.push(path);
        Ok(())
    };
    for tr in [&report.classification, &report.clustering].into_iter().flatten() {
        let stem = tr.task.name();
        put(&format!("{stem}.csv"), summary_csv(tr)?)?;
        put(&format!("{stem}.md"), markdown_document(tr))?;
    }
    put("comparisons.csv", comparisons_csv(report)?)?;
    put("report.json", report.to_json()? + "\n")?;
    Ok(written)
}

/// `x,y` coordinates, one row per node.
pub fn write_coords(path: &Path, coords: &Matrix) -> Result<()> {
    if coords.cols() != 2 {
        return Err(Error::Shape(format!("{} projection columns", coords.cols())));
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["x", "y"])?;
    for row in coords.row_iter() {
        w.write_record([format!("{:e}", row[0]), format!("{:e}", row[1])])?;
    }
    w.flush()?;
    Ok(())
}
