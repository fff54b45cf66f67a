//! Structural node features: degree, closeness, eigenvector and betweenness
//! centrality, local clustering coefficient and PageRank, plus z-scoring and
//! fusion with raw attributes.

use std::collections::VecDeque;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::Matrix;

/// Dense node-by-dimension matrix with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    data: Matrix,
    column_names: Vec<String>,
}

impl FeatureMatrix {
    pub fn new(data: Matrix, column_names: Vec<String>) -> Result<Self> {
        if column_names.len() != data.cols() {
            return Err(Error::Shape(format!(
                "{} column names for {} columns",
                column_names.len(),
                data.cols()
            )));
        }
        if !data.all_finite() {
            return Err(Error::Invalid("feature matrix has non-finite entries".into()));
        }
        Ok(Self { data, column_names })
    }

    /// Columns named `{prefix}0`, `{prefix}1`, ...
    pub fn with_prefix(data: Matrix, prefix: &str) -> Result<Self> {
        let names = (0..data.cols()).map(|j| format!("{prefix}{j}")).collect();
        Self::new(data, names)
    }

    pub fn data(&self) -> &Matrix {
        &self.data
    }

    pub fn into_data(self) -> Matrix {
        self.data
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn n_rows(&self) -> usize {
        self.data.rows()
    }

    pub fn n_cols(&self) -> usize {
        self.data.cols()
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.column_names)?;
        for row in self.data.row_iter() {
            w.write_record(row.iter().map(|v| format!("{v:e}")))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let names: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        let mut data = Vec::new();
        let mut rows = 0;
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            for field in rec.iter() {
                data.push(field.trim().parse::<f64>().map_err(|_| {
                    Error::format(Some(i + 2), format!("non-numeric value `{field}`"))
                })?);
            }
            rows += 1;
        }
        Self::new(Matrix::from_vec(rows, names.len(), data)?, names)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StructuralFeature {
    Degree,
    Closeness,
    Eigenvector,
    ClusteringCoef,
    Betweenness,
    PageRank,
}

impl StructuralFeature {
    /// Canonical column order.
    pub const ALL: [StructuralFeature; 6] = [
        StructuralFeature::Degree,
        StructuralFeature::Closeness,
        StructuralFeature::Eigenvector,
        StructuralFeature::ClusteringCoef,
        StructuralFeature::Betweenness,
        StructuralFeature::PageRank,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StructuralFeature::Degree => "degree",
            StructuralFeature::Closeness => "closeness",
            StructuralFeature::Eigenvector => "eigenvector",
            StructuralFeature::ClusteringCoef => "clustering_coef",
            StructuralFeature::Betweenness => "betweenness",
            StructuralFeature::PageRank => "pagerank",
        }
    }
}

impl fmt::Display for StructuralFeature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StructuralFeature {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.name() == s.trim())
            .ok_or_else(|| Error::Invalid(format!("unknown feature `{s}`")))
    }
}

pub fn parse_feature_list(s: &str) -> Result<Vec<StructuralFeature>> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(str::parse)
        .collect()
}

/// Computes the selected features, emitted in canonical column order
/// regardless of selection order.
pub fn structural_features(g: &Graph, select: &[StructuralFeature]) -> Result<FeatureMatrix> {
    g.require_undirected("structural_features")?;
    let mut chosen: Vec<StructuralFeature> = select.to_vec();
    chosen.sort();
    chosen.dedup();
    let n = g.n_nodes();
    let columns: Vec<Vec<f64>> = chosen
        .iter()
        .map(|f| -> Result<Vec<f64>> {
            Ok(match f {
                StructuralFeature::Degree => degree_centrality(g),
                StructuralFeature::Closeness => closeness_centrality(g),
                StructuralFeature::Eigenvector => eigenvector_centrality(g),
                StructuralFeature::ClusteringCoef => clustering_coefficient(g),
                StructuralFeature::Betweenness => betweenness_centrality(g, true),
                StructuralFeature::PageRank => pagerank(g, &PageRankConfig::default())?,
            })
        })
        .collect::<Result<_>>()?;
    let data = Matrix::from_fn(n, columns.len(), |i, j| columns[j][i]);
    FeatureMatrix::new(data, chosen.iter().map(|f| f.name().to_string()).collect())
}

/// `k_i / (n - 1)`
pub fn degree_centrality(g: &Graph) -> Vec<f64> {
    let n = g.n_nodes();
    let denom = n.saturating_sub(1).max(1) as f64;
    (0..n).map(|u| g.degree(u) as f64 / denom).collect()
}

/// Hop-count closeness with component scaling: `(r-1)/sum_d * (r-1)/(n-1)`
/// where `r` counts reachable nodes including the node itself.
pub fn closeness_centrality(g: &Graph) -> Vec<f64> {
    let n = g.n_nodes();
    let mut dist = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    (0..n)
        .map(|s| {
            dist.iter_mut().for_each(|d| *d = usize::MAX);
            dist[s] = 0;
            queue.push_back(s);
            let (mut reach, mut total) = (0usize, 0usize);
            while let Some(u) = queue.pop_front() {
                reach += 1;
                total += dist[u];
                for &v in g.neighbors(u) {
                    if dist[v] == usize::MAX {
                        dist[v] = dist[u] + 1;
                        queue.push_back(v);
                    }
                }
            }
            if reach <= 1 || total == 0 {
                0.0
            } else {
                let r = (reach - 1) as f64;
                (r / total as f64) * (r / (n - 1) as f64)
            }
        })
        .collect()
}

/// Power iteration on `A` for the dominant eigenvector, L2-normalized and
/// oriented non-negative.
///
/// Iterates with `A + I` (same eigenvectors) so bipartite graphs, whose
/// spectrum is symmetric, still converge. Stops when the L1 change drops
/// below `n * 1e-10` or after 1000 iterations.
pub fn eigenvector_centrality(g: &Graph) -> Vec<f64> {
    let n = g.n_nodes();
    if n == 0 {
        return Vec::new();
    }
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    let mut next = vec![0.0; n];
    for _ in 0..1000 {
        for u in 0..n {
            next[u] = x[u]
                + g.weighted_neighbors(u)
                    .map(|(v, w)| w * x[v])
                    .sum::<f64>();
        }
        let norm = next.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            break;
        }
        next.iter_mut().for_each(|v| *v /= norm);
        let change: f64 = x.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut x, &mut next);
        if change < n as f64 * 1e-10 {
            break;
        }
    }
    if x.iter().sum::<f64>() < 0.0 {
        x.iter_mut().for_each(|v| *v = -*v);
    }
    x
}

/// `2 T_i / (k_i (k_i - 1))`, zero for degree below two.
pub fn clustering_coefficient(g: &Graph) -> Vec<f64> {
    (0..g.n_nodes())
        .map(|u| {
            let nu = g.neighbors(u);
            let k = nu.len();
            if k < 2 {
                return 0.0;
            }
            let mut links = 0usize;
            for &v in nu {
                links += sorted_intersection_count(nu, g.neighbors(v));
            }
            // Each triangle edge seen from both endpoints.
            links as f64 / (k * (k - 1)) as f64
        })
        .collect()
}

fn sorted_intersection_count(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut c) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                c += 1;
                i += 1;
                j += 1;
            }
        }
    }
    c
}

/// Node and edge betweenness from one Brandes pass.
#[derive(Debug, Clone)]
pub struct Betweenness {
    pub node: Vec<f64>,
    /// Aligned with [`Graph::edges`].
    pub edge: Vec<f64>,
}

const BRANDES_CHUNK: usize = 32;

/// Brandes accumulation with unit edge lengths.
///
/// Sources are processed in fixed-size chunks whose partial sums are reduced
/// in chunk order, so the result does not depend on the thread count.
/// Undirected scores count each unordered pair once.
pub fn brandes(g: &Graph) -> Betweenness {
    let n = g.n_nodes();
    let edge_list = g.edges();
    let edge_index: std::collections::HashMap<(usize, usize), usize> = edge_list
        .iter()
        .enumerate()
        .map(|(i, &(u, v, _))| ((u, v), i))
        .collect();
    // incoming[w] = (v, edge id) for every edge v -> w.
    let mut incoming: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for u in 0..n {
        for &v in g.neighbors(u) {
            let key = if g.is_directed() || u < v { (u, v) } else { (v, u) };
            incoming[v].push((u, edge_index[&key]));
        }
    }

    let sources: Vec<usize> = (0..n).collect();
    let partials: Vec<(Vec<f64>, Vec<f64>)> = sources
        .par_chunks(BRANDES_CHUNK)
        .map(|chunk| {
            let mut node = vec![0.0; n];
            let mut edge = vec![0.0; edge_list.len()];
            let mut sigma = vec![0.0f64; n];
            let mut dist = vec![usize::MAX; n];
            let mut delta = vec![0.0f64; n];
            let mut order = Vec::with_capacity(n);
            let mut queue = VecDeque::new();
            for &s in chunk {
                sigma.iter_mut().for_each(|x| *x = 0.0);
                dist.iter_mut().for_each(|x| *x = usize::MAX);
                delta.iter_mut().for_each(|x| *x = 0.0);
                order.clear();
                sigma[s] = 1.0;
                dist[s] = 0;
                queue.push_back(s);
                while let Some(u) = queue.pop_front() {
                    order.push(u);
                    for &v in g.neighbors(u) {
                        if dist[v] == usize::MAX {
                            dist[v] = dist[u] + 1;
                            queue.push_back(v);
                        }
                        if dist[v] == dist[u] + 1 {
                            sigma[v] += sigma[u];
                        }
                    }
                }
                for &w in order.iter().rev() {
                    for &(v, e) in &incoming[w] {
                        if dist[v] != usize::MAX && dist[v] + 1 == dist[w] {
                            let c = sigma[v] / sigma[w] * (1.0 + delta[w]);
                            delta[v] += c;
                            edge[e] += c;
                        }
                    }
                    if w != s {
                        node[w] += delta[w];
                    }
                }
            }
            (node, edge)
        })
        .collect();

    let mut node = vec![0.0; n];
    let mut edge = vec![0.0; edge_list.len()];
    for (pn, pe) in partials {
        node.iter_mut().zip(&pn).for_each(|(a, b)| *a += b);
        edge.iter_mut().zip(&pe).for_each(|(a, b)| *a += b);
    }
    if !g.is_directed() {
        node.iter_mut().for_each(|x| *x /= 2.0);
        edge.iter_mut().for_each(|x| *x /= 2.0);
    }
    Betweenness { node, edge }
}

/// Node betweenness. `normalized` divides by the number of node pairs not
/// involving the node: `(n-1)(n-2)/2` undirected, twice that directed.
pub fn betweenness_centrality(g: &Graph, normalized: bool) -> Vec<f64> {
    let mut b = brandes(g).node;
    let n = g.n_nodes();
    if normalized && n > 2 {
        let mut pairs = ((n - 1) * (n - 2)) as f64;
        if !g.is_directed() {
            pairs /= 2.0;
        }
        b.iter_mut().for_each(|x| *x /= pairs);
    }
    b
}

/// Edge betweenness aligned with [`Graph::edges`].
pub fn edge_betweenness(g: &Graph) -> Vec<f64> {
    brandes(g).edge
}

#[derive(Debug, Clone, Copy)]
pub struct PageRankConfig {
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PageRankConfig {
    fn default() -> Self {
        Self {
            damping: 0.85,
            tol: 1e-10,
            max_iter: 1000,
        }
    }
}

/// Power-iteration PageRank with uniform teleport; dangling mass is spread
/// uniformly. Undirected edges count in both directions. Converged once the
/// L1 change between iterates is below `tol`.
pub fn pagerank(g: &Graph, cfg: &PageRankConfig) -> Result<Vec<f64>> {
    let n = g.n_nodes();
    if n == 0 {
        return Ok(Vec::new());
    }
    let nf = n as f64;
    let mut x = vec![1.0 / nf; n];
    let mut next = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for _ in 0..cfg.max_iter {
        let dangling: f64 = (0..n).filter(|&u| g.degree(u) == 0).map(|u| x[u]).sum();
        let base = (1.0 - cfg.damping) / nf + cfg.damping * dangling / nf;
        next.iter_mut().for_each(|v| *v = base);
        for u in 0..n {
            let k = g.degree(u);
            if k == 0 {
                continue;
            }
            let share = cfg.damping * x[u] / k as f64;
            for &v in g.neighbors(u) {
                next[v] += share;
            }
        }
        residual = x.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut x, &mut next);
        if residual < cfg.tol {
            return Ok(x);
        }
    }
    Err(Error::Convergence {
        what: "pagerank",
        residual,
    })
}

/// Column-wise z-scoring with statistics fitted on a subset of rows.
/// Columns with zero spread map to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &Matrix, rows: &[usize]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Invalid("cannot standardize on zero rows".into()));
        }
        let d = x.cols();
        let cnt = rows.len() as f64;
        let mut mean = vec![0.0; d];
        for &i in rows {
            mean.iter_mut().zip(x.row(i)).for_each(|(m, v)| *m += v);
        }
        mean.iter_mut().for_each(|m| *m /= cnt);
        let mut var = vec![0.0; d];
        for &i in rows {
            var.iter_mut()
                .zip(x.row(i))
                .zip(&mean)
                .for_each(|((s, v), m)| *s += (v - m) * (v - m));
        }
        let std = var.into_iter().map(|s| (s / cnt).sqrt()).collect();
        Ok(Self { mean, std })
    }

    pub fn fit_all(x: &Matrix) -> Result<Self> {
        Self::fit(x, &(0..x.rows()).collect::<Vec<_>>())
    }

    pub fn transform(&self, x: &Matrix) -> Matrix {
        Matrix::from_fn(x.rows(), x.cols(), |i, j| {
            let s = self.std[j];
            if s > 1e-12 {
                (x[(i, j)] - self.mean[j]) / s
            } else {
                0.0
            }
        })
    }
}

/// `[raw | classical]`, optionally z-scoring the classical block over all rows.
pub fn fuse_features(
    raw: &FeatureMatrix,
    classical: &FeatureMatrix,
    standardize: bool,
) -> Result<FeatureMatrix> {
    fuse_with(raw, classical, standardize.then_some(&*(0..classical.n_rows()).collect::<Vec<_>>()))
}

/// Like [`fuse_features`] with z-score statistics fitted on `fit_rows` only.
pub fn fuse_with(
    raw: &FeatureMatrix,
    classical: &FeatureMatrix,
    fit_rows: Option<&[usize]>,
) -> Result<FeatureMatrix> {
    if raw.n_rows() != classical.n_rows() {
        return Err(Error::Shape(format!(
            "raw features have {} rows, classical {}",
            raw.n_rows(),
            classical.n_rows()
        )));
    }
    let block = match fit_rows {
        Some(rows) => Standardizer::fit(classical.data(), rows)?.transform(classical.data()),
        None => classical.data().clone(),
    };
    let data = raw.data().hstack(&block)?;
    let names = raw
        .column_names()
        .iter()
        .chain(classical.column_names())
        .cloned()
        .collect();
    FeatureMatrix::new(data, names)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k(n: usize) -> Graph {
        let e: Vec<_> = (0..n)
            .flat_map(|u| ((u + 1)..n).map(move |v| (u, v)))
            .collect();
        Graph::from_edges(n, false, &e).unwrap()
    }

    #[test]
    fn triangle_features() {
        let f = structural_features(
            &k(3),
            &[StructuralFeature::ClusteringCoef, StructuralFeature::Degree],
        )
        .unwrap();
        assert_eq!(f.column_names(), &["degree", "clustering_coef"]);
        for i in 0..3 {
            assert_eq!(f.data()[(i, 0)], 1.0);
            assert_eq!(f.data()[(i, 1)], 1.0);
        }
    }

    #[test]
    fn star_features() {
        let g = Graph::from_edges(5, false, &[(0, 1), (0, 2), (0, 3), (0, 4)]).unwrap();
        let cc = clustering_coefficient(&g);
        assert_eq!(cc[0], 0.0);
        let ev = eigenvector_centrality(&g);
        assert!((1..5).all(|i| ev[0] > ev[i]));
        assert!((ev.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unknown_feature_name() {
        assert!(parse_feature_list("degree,katz").is_err());
        assert_eq!(
            parse_feature_list("pagerank, degree").unwrap(),
            vec![StructuralFeature::PageRank, StructuralFeature::Degree]
        );
    }

    #[test]
    fn betweenness_examples() {
        let p = Graph::from_edges(3, false, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(betweenness_centrality(&p, false), vec![0.0, 1.0, 0.0]);
        assert_eq!(betweenness_centrality(&p, true), vec![0.0, 1.0, 0.0]);
        assert!(betweenness_centrality(&k(5), false).iter().all(|&b| b == 0.0));
        // Edge (0,1) carries pairs {0,1} and {0,2}.
        assert_eq!(edge_betweenness(&p), vec![2.0, 2.0]);
    }

    #[test]
    fn directed_betweenness_on_chain() {
        let g = Graph::from_edges(3, true, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(betweenness_centrality(&g, false), vec![0.0, 1.0, 0.0]);
        assert_eq!(edge_betweenness(&g), vec![2.0, 2.0]);
    }

    #[test]
    fn closeness_handles_disconnection() {
        let g = Graph::from_edges(4, false, &[(0, 1)]).unwrap();
        let c = closeness_centrality(&g);
        // r = 2, sum = 1 -> 1/1 * 1/3
        assert!((c[0] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(c[2], 0.0);
    }

    #[test]
    fn pagerank_examples() {
        let pr = pagerank(&k(4), &PageRankConfig::default()).unwrap();
        assert!(pr.iter().all(|&p| (p - 0.25).abs() < 1e-12));
        let e = Graph::from_edges(2, false, &[]).unwrap();
        assert_eq!(pagerank(&e, &PageRankConfig::default()).unwrap(), vec![0.5, 0.5]);
        let strict = PageRankConfig {
            max_iter: 2,
            ..Default::default()
        };
        let chain = Graph::from_edges(3, true, &[(0, 1), (1, 2)]).unwrap();
        assert!(matches!(
            pagerank(&chain, &strict),
            Err(Error::Convergence { .. })
        ));
    }

    #[test]
    fn fusion_shapes_and_constant_columns() {
        let raw = FeatureMatrix::with_prefix(Matrix::zeros(3, 2), "r").unwrap();
        let cls = FeatureMatrix::with_prefix(
            Matrix::from_rows(&[
                vec![1.0, 5.0, 0.0, 2.0],
                vec![2.0, 5.0, 1.0, 2.0],
                vec![3.0, 5.0, 0.0, 2.0],
            ])
            .unwrap(),
            "c",
        )
        .unwrap();
        let f = fuse_features(&raw, &cls, true).unwrap();
        assert_eq!(f.data().shape(), (3, 6));
        assert!(f.data().column(3).iter().all(|&v| v == 0.0));
        let short = FeatureMatrix::with_prefix(Matrix::zeros(2, 1), "x").unwrap();
        assert!(fuse_features(&raw, &short, true).is_err());
    }
}
