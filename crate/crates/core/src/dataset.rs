//! Datasets: the bundled Zachary karate club, citation networks in the
//! `.content` / `.cites` TSV layout, a planted-partition generator, and
//! stratified train/validation/test splitting.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::graph::Graph;
use crate::linalg::Matrix;
use crate::rng::{self, stream};

#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub graph: Graph,
    pub features: FeatureMatrix,
    pub labels: Vec<usize>,
    pub n_classes: usize,
    /// External id of each node, indexed by node position.
    pub node_ids: Vec<String>,
    pub class_names: Vec<String>,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        graph: Graph,
        features: FeatureMatrix,
        labels: Vec<usize>,
        class_names: Vec<String>,
        node_ids: Vec<String>,
    ) -> Result<Dataset> {
        let n = graph.n_nodes();
        let n_classes = class_names.len();
        if features.n_rows() != n || labels.len() != n || node_ids.len() != n {
            return Err(Error::Invalid(format!(
                "dataset sizes disagree: {n} nodes, {} feature rows, {} labels, {} ids",
                features.n_rows(),
                labels.len(),
                node_ids.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= n_classes) {
            return Err(Error::Invalid(format!(
                "label {bad} outside 0..{n_classes}"
            )));
        }
        Ok(Dataset {
            name: name.into(),
            graph,
            features,
            labels,
            n_classes,
            node_ids,
            class_names,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.graph.n_nodes()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.node_ids.iter().position(|x| x == id)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct LoadStats {
    pub dropped_citations: usize,
    pub self_citations: usize,
    pub duplicate_citations: usize,
}

/// Loads a citation network.
///
/// `content`: one row per paper, `paper_id f_1 ... f_k label`, tab or
/// whitespace separated. `cites`: rows `cited_id citing_id`. Nodes follow
/// content row order; string labels become class ids in sorted label order;
/// citations naming unknown papers are dropped and counted.
pub fn load_citation_dataset(
    name: &str,
    content_path: impl AsRef<Path>,
    cites_path: impl AsRef<Path>,
) -> Result<(Dataset, LoadStats)> {
    let content = fs::read_to_string(content_path)?;
    let cites = fs::read_to_string(cites_path)?;
    parse_citation_dataset(name, &content, &cites)
}

pub fn parse_citation_dataset(
    name: &str,
    content: &str,
    cites: &str,
) -> Result<(Dataset, LoadStats)> {
    let mut ids: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut rows: Vec<f64> = Vec::new();
    let mut raw_labels: Vec<String> = Vec::new();
    let mut width: Option<usize> = None;

    for (lineno, line) in content.lines().enumerate() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() < 2 {
            return Err(Error::format(
                Some(lineno + 1),
                "content row needs at least an id and a label",
            ));
        }
        let k = fields.len() - 2;
        match width {
            None => width = Some(k),
            Some(w) if w != k => {
                return Err(Error::format(
                    Some(lineno + 1),
                    format!("ragged feature row: {k} features, expected {w}"),
                ))
            }
            _ => {}
        }
        let id = fields[0].to_string();
        if index.contains_key(&id) {
            return Err(Error::format(
                Some(lineno + 1),
                format!("duplicate paper id `{id}`"),
            ));
        }
        for f in &fields[1..=k] {
            let v: f64 = f.parse().map_err(|_| {
                Error::format(Some(lineno + 1), format!("non-numeric feature `{f}`"))
            })?;
            rows.push(v);
        }
        index.insert(id.clone(), ids.len());
        ids.push(id);
        raw_labels.push(fields[k + 1].to_string());
    }
    let Some(width) = width else {
        return Err(Error::format(None, "empty content file"));
    };

    let class_names: Vec<String> = raw_labels
        .iter()
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let labels = raw_labels
        .iter()
        .map(|l| class_names.binary_search(l).expect("label was collected"))
        .collect();

    let mut stats = LoadStats::default();
    let mut edges = Vec::new();
    for (lineno, line) in cites.lines().enumerate() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() != 2 {
            return Err(Error::format(
                Some(lineno + 1),
                format!("citation row needs 2 ids, got {}", fields.len()),
            ));
        }
        match (index.get(fields[0]), index.get(fields[1])) {
            (Some(&a), Some(&b)) => edges.push((a, b, 1.0)),
            _ => stats.dropped_citations += 1,
        }
    }
    let (graph, build) = Graph::build(ids.len(), false, edges)?;
    stats.self_citations = build.self_loops_dropped;
    stats.duplicate_citations = build.duplicates_collapsed;

    let n = ids.len();
    let features = FeatureMatrix::new(
        Matrix::from_vec(n, width, rows)?,
        (0..width).map(|j| format!("w{j}")).collect(),
    )?;
    let ds = Dataset::new(name, graph, features, labels, class_names, ids)?;
    Ok((ds, stats))
}

/// Zachary's karate club, 0-indexed.
pub const KARATE_EDGES: [(usize, usize); 78] = [
    (0, 1), (0, 2), (0, 3), (0, 4), (0, 5), (0, 6), (0, 7), (0, 8), (0, 10), (0, 11),
    (0, 12), (0, 13), (0, 17), (0, 19), (0, 21), (0, 31), (1, 2), (1, 3), (1, 7), (1, 13),
    (1, 17), (1, 19), (1, 21), (1, 30), (2, 3), (2, 7), (2, 8), (2, 9), (2, 13), (2, 27),
    (2, 28), (2, 32), (3, 7), (3, 12), (3, 13), (4, 6), (4, 10), (5, 6), (5, 10), (5, 16),
    (6, 16), (8, 30), (8, 32), (8, 33), (9, 33), (13, 33), (14, 32), (14, 33), (15, 32), (15, 33),
    (18, 32), (18, 33), (19, 33), (20, 32), (20, 33), (22, 32), (22, 33), (23, 25), (23, 27), (23, 29),
    (23, 32), (23, 33), (24, 25), (24, 27), (24, 31), (25, 31), (26, 29), (26, 33), (27, 33), (28, 31),
    (28, 33), (29, 32), (29, 33), (30, 32), (30, 33), (31, 32), (31, 33), (32, 33),
];

/// Faction after the split: 0 = instructor (Mr. Hi), 1 = administrator.
pub const KARATE_FACTIONS: [usize; 34] = [
    0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 1, 0, 0, 1, 0, 1, 0, 1, 1, 1, 1, 1, 1, 1, 1, 1,
    1, 1, 1,
];

/// The karate club with one-hot node-id features.
pub fn karate_club() -> Dataset {
    let graph = Graph::from_edges(34, false, &KARATE_EDGES).expect("bundled edges are valid");
    let features = FeatureMatrix::new(
        Matrix::identity(34),
        (0..34).map(|i| format!("node_{i}")).collect(),
    )
    .expect("square identity");
    Dataset::new(
        "karate",
        graph,
        features,
        KARATE_FACTIONS.to_vec(),
        vec!["Mr. Hi".into(), "Officer".into()],
        (0..34).map(|i| i.to_string()).collect(),
    )
    .expect("bundled dataset is consistent")
}

/// Parameters for [`planted_partition`].
#[derive(Debug, Clone)]
pub struct PlantedPartition {
    pub n_nodes: usize,
    pub n_classes: usize,
    /// Expected within-class degree.
    pub intra_degree: f64,
    /// Expected between-class degree.
    pub inter_degree: f64,
    pub n_features: usize,
    /// Expected number of active features per node.
    pub active_features: usize,
    /// Probability that an active feature comes from the node's class block.
    pub feature_signal: f64,
}

impl Default for PlantedPartition {
    fn default() -> Self {
        Self {
            n_nodes: 600,
            n_classes: 4,
            intra_degree: 3.0,
            inter_degree: 1.0,
            n_features: 200,
            active_features: 12,
            feature_signal: 0.45,
        }
    }
}

/// Synthetic citation-like dataset: a stochastic block model with sparse
/// binary features drawn partly from a class-specific vocabulary block.
pub fn planted_partition(p: &PlantedPartition, seed: u64) -> Dataset {
    let mut r = rng::rng_for(seed, &[0x5b]);
    let n = p.n_nodes;
    let labels: Vec<usize> = (0..n).map(|i| i % p.n_classes).collect();
    let per_class = n as f64 / p.n_classes as f64;
    let p_in = (p.intra_degree / (per_class - 1.0).max(1.0)).min(1.0);
    let p_out = (p.inter_degree / (n as f64 - per_class).max(1.0)).min(1.0);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            let pr = if labels[u] == labels[v] { p_in } else { p_out };
            if r.gen::<f64>() < pr {
                edges.push((u, v));
            }
        }
    }
    let graph = Graph::from_edges(n, false, &edges).expect("generated edges are valid");

    let block = p.n_features / p.n_classes;
    let mut x = Matrix::zeros(n, p.n_features);
    for u in 0..n {
        for _ in 0..p.active_features {
            let j = if block > 0 && r.gen::<f64>() < p.feature_signal {
                labels[u] * block + r.gen_range(0..block)
            } else {
                r.gen_range(0..p.n_features)
            };
            x[(u, j)] = 1.0;
        }
    }
    let features = FeatureMatrix::new(x, (0..p.n_features).map(|j| format!("w{j}")).collect())
        .expect("consistent shape");
    Dataset::new(
        "planted",
        graph,
        features,
        labels,
        (0..p.n_classes).map(|c| format!("class_{c}")).collect(),
        (0..n).map(|i| i.to_string()).collect(),
    )
    .expect("consistent dataset")
}

/// Resolves `<root>/<name>/<name>.content` (or `<root>/<name>.content`).
pub fn locate_citation_files(root: &Path, name: &str) -> Option<(PathBuf, PathBuf)> {
    [root.join(name), root.to_path_buf()]
        .into_iter()
        .map(|dir| {
            (
                dir.join(format!("{name}.content")),
                dir.join(format!("{name}.cites")),
            )
        })
        .find(|(c, e)| c.is_file() && e.is_file())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
}

impl Split {
    pub fn n_nodes(&self) -> usize {
        self.train.len() + self.val.len() + self.test.len()
    }
}

/// Per-class shuffled split.
///
/// Each class of size `c` gets `floor(r_i * c)` nodes per part; leftover
/// nodes go to the parts with the largest fractional remainders, ties resolved
/// train, then validation, then test. Index lists are returned sorted.
pub fn stratified_split(labels: &[usize], ratios: [f64; 3], seed: u64) -> Result<Split> {
    if ratios.iter().any(|r| !(0.0..=1.0).contains(r))
        || (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9
    {
        return Err(Error::Split(format!(
            "ratios {ratios:?} must be in [0, 1] and sum to 1"
        )));
    }
    let mut by_class: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for (i, &l) in labels.iter().enumerate() {
        by_class.entry(l).or_default().push(i);
    }
    if let Some((c, m)) = by_class.iter().find(|(_, m)| m.len() < 3) {
        return Err(Error::Split(format!(
            "class {c} has {} members; at least 3 are required",
            m.len()
        )));
    }
    let mut r = rng::rng_for(seed, &[stream::SPLIT]);
    let mut parts: [Vec<usize>; 3] = Default::default();
    for (_, mut members) in by_class {
        members.shuffle(&mut r);
        let c = members.len();
        let exact: Vec<f64> = ratios.iter().map(|q| q * c as f64).collect();
        let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
        let mut leftover = c - counts.iter().sum::<usize>();
        let mut order = [0usize, 1, 2];
        // Stable sort: equal remainders keep train/val/test priority.
        order.sort_by(|&a, &b| {
            let fa = exact[a] - exact[a].floor();
            let fb = exact[b] - exact[b].floor();
            fb.total_cmp(&fa)
        });
        for &p in order.iter().cycle() {
            if leftover == 0 {
                break;
            }
            counts[p] += 1;
            leftover -= 1;
        }
        let mut it = members.into_iter();
        for (part, &k) in parts.iter_mut().zip(&counts) {
            part.extend(it.by_ref().take(k));
        }
    }
    for p in &mut parts {
        p.sort_unstable();
    }
    let [train, val, test] = parts;
    Ok(Split {
        train,
        val,
        test,
        seed,
    })
}
