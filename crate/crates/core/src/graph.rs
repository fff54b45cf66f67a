//! Immutable CSR graph, edge-list I/O and the GCN propagation operator.
//!
//! Undirected edges are stored in both endpoint rows, so `m_stored = 2m`.
//! Column indices within a row are strictly increasing and self-loops are
//! never stored; the normalized adjacency adds them virtually.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::SparseMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n_nodes: usize,
    directed: bool,
    offsets: Vec<usize>,
    targets: Vec<usize>,
    weights: Vec<f64>,
}

/// Side information from [`Graph::build`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct BuildStats {
    pub self_loops_dropped: usize,
    pub duplicates_collapsed: usize,
}

impl Graph {
    /// Builds a graph from `(u, v, w)` triples.
    ///
    /// Parallel edges collapse to one keeping the last weight seen; in an
    /// undirected graph `(u, v)` and `(v, u)` are the same edge.
    pub fn build(
        n_nodes: usize,
        directed: bool,
        edges: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<(Graph, BuildStats)> {
        let mut stats = BuildStats::default();
        let mut list: Vec<(usize, usize, f64)> = Vec::new();
        for (pos, (u, v, w)) in edges.into_iter().enumerate() {
            if u >= n_nodes || v >= n_nodes {
                return Err(Error::Construction(format!(
                    "edge #{pos} ({u}, {v}) references a node outside 0..{n_nodes}"
                )));
            }
            if !w.is_finite() {
                return Err(Error::Construction(format!(
                    "edge #{pos} ({u}, {v}) has non-finite weight {w}"
                )));
            }
            if u == v {
                stats.self_loops_dropped += 1;
                continue;
            }
            let (a, b) = if directed || u < v { (u, v) } else { (v, u) };
            list.push((a, b, w));
        }
        // Stable sort keeps input order among duplicates; the last one wins.
        list.sort_by_key(|&(a, b, _)| (a, b));
        let mut dedup: Vec<(usize, usize, f64)> = Vec::with_capacity(list.len());
        for e in list {
            match dedup.last_mut() {
                Some(last) if (last.0, last.1) == (e.0, e.1) => {
                    last.2 = e.2;
                    stats.duplicates_collapsed += 1;
                }
                _ => dedup.push(e),
            }
        }

        let mut stored: Vec<(usize, usize, f64)> = if directed {
            dedup
        } else {
            let mut both = Vec::with_capacity(dedup.len() * 2);
            for &(a, b, w) in &dedup {
                both.push((a, b, w));
                both.push((b, a, w));
            }
            both.sort_by_key(|&(a, b, _)| (a, b));
            both
        };
        stored.shrink_to_fit();

        let mut offsets = vec![0usize; n_nodes + 1];
        for &(a, _, _) in &stored {
            offsets[a + 1] += 1;
        }
        for i in 0..n_nodes {
            offsets[i + 1] += offsets[i];
        }
        let targets = stored.iter().map(|e| e.1).collect();
        let weights = stored.iter().map(|e| e.2).collect();
        Ok((
            Graph {
                n_nodes,
                directed,
                offsets,
                targets,
                weights,
            },
            stats,
        ))
    }

    /// Unit-weight convenience constructor.
    pub fn from_edges(n_nodes: usize, directed: bool, edges: &[(usize, usize)]) -> Result<Graph> {
        Self::build(n_nodes, directed, edges.iter().map(|&(u, v)| (u, v, 1.0))).map(|(g, _)| g)
    }

    pub fn from_weighted_edges(
        n_nodes: usize,
        directed: bool,
        edges: &[(usize, usize, f64)],
    ) -> Result<Graph> {
        Self::build(n_nodes, directed, edges.iter().copied()).map(|(g, _)| g)
    }

    #[inline]
    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    #[inline]
    pub fn is_directed(&self) -> bool {
        self.directed
    }

    /// Number of edges: undirected edges counted once.
    pub fn n_edges(&self) -> usize {
        if self.directed {
            self.targets.len()
        } else {
            self.targets.len() / 2
        }
    }

    pub fn n_stored(&self) -> usize {
        self.targets.len()
    }

    /// Out-neighbors in ascending id order.
    #[inline]
    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.targets[self.offsets[u]..self.offsets[u + 1]]
    }

    #[inline]
    pub fn neighbor_weights(&self, u: usize) -> &[f64] {
        &self.weights[self.offsets[u]..self.offsets[u + 1]]
    }

    pub fn weighted_neighbors(&self, u: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.neighbors(u)
            .iter()
            .copied()
            .zip(self.neighbor_weights(u).iter().copied())
    }

    /// Out-degree (degree for undirected graphs).
    #[inline]
    pub fn degree(&self, u: usize) -> usize {
        self.offsets[u + 1] - self.offsets[u]
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n_nodes).map(|u| self.degree(u)).collect()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    pub fn weight(&self, u: usize, v: usize) -> Option<f64> {
        self.neighbors(u)
            .binary_search(&v)
            .ok()
            .map(|p| self.neighbor_weights(u)[p])
    }

    /// Every edge once: `u < v` for undirected graphs, sorted by `(u, v)`.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(self.n_edges());
        for u in 0..self.n_nodes {
            for (v, w) in self.weighted_neighbors(u) {
                if self.directed || u < v {
                    out.push((u, v, w));
                }
            }
        }
        out
    }

    /// Graph with the same node set and the edges that pass `keep`.
    pub fn filter_edges(&self, mut keep: impl FnMut(usize, usize) -> bool) -> Graph {
        let kept: Vec<_> = self
            .edges()
            .into_iter()
            .filter(|&(u, v, _)| keep(u, v))
            .collect();
        Graph::from_weighted_edges(self.n_nodes, self.directed, &kept)
            .expect("subgraph of a valid graph is valid")
    }

    /// Undirected view (edge direction dropped, duplicates collapsed).
    pub fn to_undirected(&self) -> Graph {
        if !self.directed {
            return self.clone();
        }
        Graph::from_weighted_edges(self.n_nodes, false, &self.edges())
            .expect("valid edges remain valid")
    }

    /// Graph with nodes relabeled: old node `i` becomes `perm[i]`.
    pub fn permute(&self, perm: &[usize]) -> Graph {
        let edges: Vec<_> = self
            .edges()
            .into_iter()
            .map(|(u, v, w)| (perm[u], perm[v], w))
            .collect();
        Graph::from_weighted_edges(self.n_nodes, self.directed, &edges)
            .expect("permutation preserves validity")
    }

    pub(crate) fn require_undirected(&self, op: &str) -> Result<()> {
        if self.directed {
            Err(Error::Contract(format!("{op} requires an undirected graph")))
        } else {
            Ok(())
        }
    }
}

/// Parses whitespace-separated `u v [w]` lines; `#` starts a comment.
pub fn parse_edge_list(text: &str) -> Result<Vec<(usize, usize, f64)>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if !(2..=3).contains(&fields.len()) {
            return Err(Error::format(
                Some(lineno + 1),
                format!("expected `u v [w]`, got {} fields", fields.len()),
            ));
        }
        let node = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::format(Some(lineno + 1), format!("bad node id `{s}`")))
        };
        let w = match fields.get(2) {
            Some(s) => s
                .parse::<f64>()
                .map_err(|_| Error::format(Some(lineno + 1), format!("bad weight `{s}`")))?,
            None => 1.0,
        };
        out.push((node(fields[0])?, node(fields[1])?, w));
    }
    Ok(out)
}

/// Reads an edge-list file. The node count is `max id + 1` unless a larger
/// `n_nodes` is given.
pub fn read_edge_list(
    path: impl AsRef<Path>,
    directed: bool,
    n_nodes: Option<usize>,
) -> Result<(Graph, BuildStats)> {
    let text = fs::read_to_string(path)?;
    let edges = parse_edge_list(&text)?;
    let inferred = edges.iter().map(|&(u, v, _)| u.max(v) + 1).max().unwrap_or(0);
    let n = n_nodes.unwrap_or(inferred).max(inferred);
    Graph::build(n, directed, edges)
}

pub fn write_edge_list(graph: &Graph, mut out: impl std::io::Write) -> Result<()> {
    for (u, v, w) in graph.edges() {
        if w == 1.0 {
            writeln!(out, "{u} {v}")?;
        } else {
            writeln!(out, "{u} {v} {w}")?;
        }
    }
    Ok(())
}

/// `D^-1/2 (A + I) D^-1/2` with binary `A`, where `D` is the degree matrix of
/// `A + I`. Stored weights are ignored.
pub fn normalized_adjacency(g: &Graph) -> Result<SparseMatrix> {
    g.require_undirected("normalized_adjacency")?;
    let n = g.n_nodes();
    let inv_sqrt: Vec<f64> = (0..n)
        .map(|u| 1.0 / ((g.degree(u) + 1) as f64).sqrt())
        .collect();
    let mut indptr = Vec::with_capacity(n + 1);
    let mut indices = Vec::with_capacity(g.n_stored() + n);
    let mut values = Vec::with_capacity(g.n_stored() + n);
    indptr.push(0);
    for u in 0..n {
        let mut self_done = false;
        for &v in g.neighbors(u) {
            if !self_done && v > u {
                indices.push(u);
                values.push(inv_sqrt[u] * inv_sqrt[u]);
                self_done = true;
            }
            indices.push(v);
            values.push(inv_sqrt[u] * inv_sqrt[v]);
        }
        if !self_done {
            indices.push(u);
            values.push(inv_sqrt[u] * inv_sqrt[u]);
        }
        indptr.push(indices.len());
    }
    SparseMatrix::new(n, n, indptr, indices, values)
}
