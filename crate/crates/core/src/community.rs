//! Modularity and community detection: Girvan-Newman, Louvain and
//! asynchronous label propagation.
//!
//! All methods treat the adjacency as binary; stored weights are ignored.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::features::edge_betweenness;
use crate::graph::Graph;
use crate::partition::Partition;
use crate::rng::{self, stream};
use crate::traversal::connected_components;

/// Newman modularity in per-community form `sum_c e_c/m - (d_c/2m)^2`.
pub fn modularity(g: &Graph, p: &Partition) -> Result<f64> {
    g.require_undirected("modularity")?;
    if p.len() != g.n_nodes() {
        return Err(Error::Invalid(format!(
            "partition covers {} nodes, graph has {}",
            p.len(),
            g.n_nodes()
        )));
    }
    let m = g.n_edges();
    if m == 0 {
        return Err(Error::Invalid("modularity is undefined without edges".into()));
    }
    let k = p.n_communities();
    let mut internal = vec![0usize; k];
    let mut degree = vec![0usize; k];
    for u in 0..g.n_nodes() {
        let cu = p.community_of(u);
        degree[cu] += g.degree(u);
        for &v in g.neighbors(u) {
            if u < v && p.community_of(v) == cu {
                internal[cu] += 1;
            }
        }
    }
    let m = m as f64;
    Ok(internal
        .iter()
        .zip(&degree)
        .map(|(&e, &d)| e as f64 / m - (d as f64 / (2.0 * m)).powi(2))
        .sum())
}

/// Edge removal by highest betweenness until at least `target` components
/// remain. Ties go to the lexicographically smallest edge.
pub fn girvan_newman(g: &Graph, target: usize) -> Result<Partition> {
    g.require_undirected("girvan_newman")?;
    let n = g.n_nodes();
    if target < 2 || target > n {
        return Err(Error::Invalid(format!(
            "target community count {target} outside 2..={n}"
        )));
    }
    let mut cur = g.clone();
    loop {
        let comps = connected_components(&cur);
        if comps.n_communities() >= target {
            return Ok(comps);
        }
        if cur.n_edges() == 0 {
            return Err(Error::Invalid(format!(
                "graph emptied before reaching {target} components"
            )));
        }
        let (u, v) = max_betweenness_edge(&cur);
        cur = cur.filter_edges(|a, b| (a, b) != (u, v));
    }
}

/// Girvan-Newman run to exhaustion, returning the component partition with
/// the highest modularity on the original graph, and that modularity.
pub fn girvan_newman_max_modularity(g: &Graph) -> Result<(Partition, f64)> {
    g.require_undirected("girvan_newman")?;
    let mut cur = g.clone();
    let mut best = connected_components(&cur);
    let mut best_q = modularity(g, &best)?;
    let mut last_count = best.n_communities();
    while cur.n_edges() > 0 {
        let (u, v) = max_betweenness_edge(&cur);
        cur = cur.filter_edges(|a, b| (a, b) != (u, v));
        let comps = connected_components(&cur);
        if comps.n_communities() != last_count {
            last_count = comps.n_communities();
            let q = modularity(g, &comps)?;
            if q > best_q {
                best_q = q;
                best = comps;
            }
        }
    }
    Ok((best, best_q))
}

fn max_betweenness_edge(g: &Graph) -> (usize, usize) {
    let edges = g.edges();
    let eb = edge_betweenness(g);
    let max = eb.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-9 * max.abs().max(1.0);
    let pos = eb
        .iter()
        .position(|&b| b >= max - tol)
        .expect("non-empty edge set");
    (edges[pos].0, edges[pos].1)
}

/// Minimum modularity gain for a Louvain move.
pub const LOUVAIN_MIN_GAIN: f64 = 1e-12;

/// Two-phase Louvain. Deterministic per seed.
pub fn louvain(g: &Graph, seed: u64) -> Result<Partition> {
    louvain_traced(g, seed, None)
}

/// Louvain that reports the flattened assignment of the original nodes
/// after every accepted local move.
pub fn louvain_traced(
    g: &Graph,
    seed: u64,
    mut on_move: Option<&mut dyn FnMut(&[usize])>,
) -> Result<Partition> {
    g.require_undirected("louvain")?;
    if g.n_edges() == 0 {
        return Err(Error::Invalid("louvain requires at least one edge".into()));
    }
    let mut r = rng::rng_for(seed, &[stream::LOUVAIN]);
    let n0 = g.n_nodes();
    let mut level = LevelGraph::from_graph(g);
    // original node -> node of the current level graph
    let mut node_of: Vec<usize> = (0..n0).collect();
    let m2: f64 = level.strength.iter().sum();
    let m = m2 / 2.0;

    loop {
        let n = level.adj.len();
        let mut comm: Vec<usize> = (0..n).collect();
        let mut tot: Vec<f64> = level.strength.clone();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut r);
        let mut weight_to: Vec<f64> = vec![0.0; n];
        let mut seen: Vec<bool> = vec![false; n];
        let mut touched: Vec<usize> = Vec::new();
        let mut improved = false;

        loop {
            let mut moved = false;
            for &i in &order {
                let ci = comm[i];
                let ki = level.strength[i];
                for &c in &touched {
                    weight_to[c] = 0.0;
                    seen[c] = false;
                }
                touched.clear();
                seen[ci] = true;
                touched.push(ci);
                for &(j, w) in &level.adj[i] {
                    let cj = comm[j];
                    if !seen[cj] {
                        seen[cj] = true;
                        touched.push(cj);
                    }
                    weight_to[cj] += w;
                }
                tot[ci] -= ki;
                let own_gain = weight_to[ci] - tot[ci] * ki / m2;
                let mut best = ci;
                let mut best_gain = own_gain;
                for &c in &touched {
                    let gain = weight_to[c] - tot[c] * ki / m2;
                    if gain > best_gain {
                        best_gain = gain;
                        best = c;
                    }
                }
                let delta_q = (best_gain - own_gain) / m;
                if best != ci && delta_q > LOUVAIN_MIN_GAIN {
                    comm[i] = best;
                    tot[best] += ki;
                    moved = true;
                    improved = true;
                    if let Some(cb) = on_move.as_deref_mut() {
                        let flat: Vec<usize> = node_of.iter().map(|&x| comm[x]).collect();
                        cb(&flat);
                    }
                } else {
                    tot[ci] += ki;
                }
            }
            if !moved {
                break;
            }
        }

        if !improved {
            break;
        }
        let relabel = Partition::from_labels(&comm);
        for x in node_of.iter_mut() {
            *x = relabel.community_of(*x);
        }
        level = level.aggregate(&relabel);
    }
    Ok(Partition::from_labels(&node_of))
}

/// Weighted graph used between Louvain levels.
struct LevelGraph {
    adj: Vec<Vec<(usize, f64)>>,
    /// Weighted degree including twice the self-loop weight.
    strength: Vec<f64>,
    self_loop: Vec<f64>,
}

impl LevelGraph {
    fn from_graph(g: &Graph) -> Self {
        let n = g.n_nodes();
        let adj: Vec<Vec<(usize, f64)>> = (0..n)
            .map(|u| g.neighbors(u).iter().map(|&v| (v, 1.0)).collect())
            .collect();
        let strength = adj.iter().map(|a| a.len() as f64).collect();
        Self {
            adj,
            strength,
            self_loop: vec![0.0; n],
        }
    }

    fn aggregate(&self, p: &Partition) -> Self {
        let k = p.n_communities();
        let mut self_loop = vec![0.0; k];
        let mut maps: Vec<std::collections::BTreeMap<usize, f64>> = vec![Default::default(); k];
        for (u, nbrs) in self.adj.iter().enumerate() {
            let cu = p.community_of(u);
            self_loop[cu] += self.self_loop[u];
            for &(v, w) in nbrs {
                let cv = p.community_of(v);
                if cu == cv {
                    // Each internal edge is seen from both ends.
                    self_loop[cu] += w / 2.0;
                } else {
                    *maps[cu].entry(cv).or_insert(0.0) += w;
                }
            }
        }
        let adj: Vec<Vec<(usize, f64)>> = maps
            .into_iter()
            .map(|m| m.into_iter().collect())
            .collect();
        let strength = adj
            .iter()
            .zip(&self_loop)
            .map(|(a, &s)| a.iter().map(|e| e.1).sum::<f64>() + 2.0 * s)
            .collect();
        Self {
            adj,
            strength,
            self_loop,
        }
    }
}

/// Asynchronous label propagation.
///
/// Nodes are visited in a fresh seeded order each sweep. A node keeps its
/// label while that label is among the most frequent in its neighborhood;
/// otherwise it adopts one of the most frequent labels uniformly at random.
/// Stops after a sweep without changes or after `max_sweeps`.
pub fn label_propagation(g: &Graph, seed: u64, max_sweeps: usize) -> Result<Partition> {
    g.require_undirected("label_propagation")?;
    let n = g.n_nodes();
    let mut r = rng::rng_for(seed, &[stream::LPA]);
    let mut labels: Vec<usize> = (0..n).collect();
    let mut order: Vec<usize> = (0..n).collect();
    let mut counts: HashMap<usize, usize> = HashMap::new();
    for _ in 0..max_sweeps {
        order.shuffle(&mut r);
        let mut changed = false;
        for &u in &order {
            if g.degree(u) == 0 {
                continue;
            }
            counts.clear();
            for &v in g.neighbors(u) {
                *counts.entry(labels[v]).or_insert(0) += 1;
            }
            let max = *counts.values().max().expect("non-empty neighborhood");
            if counts.get(&labels[u]) == Some(&max) {
                continue;
            }
            let mut best: Vec<usize> = counts
                .iter()
                .filter(|(_, &c)| c == max)
                .map(|(&l, _)| l)
                .collect();
            best.sort_unstable();
            labels[u] = best[r.gen_range(0..best.len())];
            changed = true;
        }
        if !changed {
            break;
        }
    }
    Ok(Partition::from_labels(&labels))
}
