//! Random instance generators and brute-force reference implementations
//! shared by the integration suites.

#![allow(dead_code)]

pub mod gradcheck;

use std::collections::HashMap;

use graphbench::linalg::Matrix;
use graphbench::rng::{self, Rng};
use graphbench::Graph;
use rand::Rng as _;

pub type Edge = (usize, usize, f64);

pub fn seeded(seed: u64) -> Rng {
    rng::rng(seed)
}

/// Erdos-Renyi style graph with integer weights in `1..=max_w` (unit weights
/// when `max_w` is 1). Undirected edges are listed once with `u < v`.
pub fn random_edges(r: &mut Rng, n: usize, p: f64, directed: bool, max_w: u32) -> Vec<Edge> {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if u == v || (!directed && v < u) {
                continue;
            }
            if r.gen_bool(p) {
                edges.push((u, v, r.gen_range(1..=max_w) as f64));
            }
        }
    }
    edges
}

pub fn build(n: usize, directed: bool, edges: &[Edge]) -> Graph {
    Graph::from_weighted_edges(n, directed, edges).expect("valid generated graph")
}

fn adjacency(n: usize, directed: bool, edges: &[Edge]) -> Vec<Vec<(usize, f64)>> {
    let mut adj = vec![Vec::new(); n];
    for &(u, v, w) in edges {
        adj[u].push((v, w));
        if !directed {
            adj[v].push((u, w));
        }
    }
    adj
}

/// Minimum weight over every simple path, by exhaustive enumeration.
pub fn all_simple_path_distances(n: usize, directed: bool, edges: &[Edge]) -> Vec<Vec<f64>> {
    fn walk(
        adj: &[Vec<(usize, f64)>],
        u: usize,
        len: f64,
        on_path: &mut [bool],
        best: &mut [f64],
    ) {
        if len < best[u] {
            best[u] = len;
        }
        for &(v, w) in &adj[u] {
            if !on_path[v] {
                on_path[v] = true;
                walk(adj, v, len + w, on_path, best);
                on_path[v] = false;
            }
        }
    }
    let adj = adjacency(n, directed, edges);
    (0..n)
        .map(|s| {
            let mut best = vec![f64::INFINITY; n];
            let mut on_path = vec![false; n];
            on_path[s] = true;
            walk(&adj, s, 0.0, &mut on_path, &mut best);
            best
        })
        .collect()
}

fn find(parent: &mut [usize], x: usize) -> usize {
    let mut r = x;
    while parent[r] != r {
        r = parent[r];
    }
    r
}

fn component_count(n: usize, edges: &[Edge]) -> usize {
    let mut parent: Vec<usize> = (0..n).collect();
    let mut count = n;
    for &(u, v, _) in edges {
        let (a, b) = (find(&mut parent, u), find(&mut parent, v));
        if a != b {
            parent[a] = b;
            count -= 1;
        }
    }
    count
}

/// Minimum spanning forest weight by enumerating every acyclic edge subset
/// with `n - components` edges.
pub fn exhaustive_spanning_forest_weight(n: usize, edges: &[Edge]) -> f64 {
    fn search(
        edges: &[Edge],
        i: usize,
        need: usize,
        parent: &mut Vec<usize>,
        weight: f64,
        best: &mut f64,
    ) {
        if need == 0 {
            *best = best.min(weight);
            return;
        }
        if edges.len() - i < need {
            return;
        }
        let (u, v, w) = edges[i];
        let (a, b) = (find(parent, u), find(parent, v));
        if a != b {
            let saved = parent.clone();
            parent[a] = b;
            search(edges, i + 1, need - 1, parent, weight + w, best);
            *parent = saved;
        }
        search(edges, i + 1, need, parent, weight, best);
    }
    let need = n - component_count(n, edges);
    let mut best = f64::INFINITY;
    let mut parent: Vec<usize> = (0..n).collect();
    search(edges, 0, need, &mut parent, 0.0, &mut best);
    best
}

/// Transitive closure by repeated relaxation (reflexive).
pub fn reachability(n: usize, directed: bool, edges: &[Edge]) -> Vec<Vec<bool>> {
    let mut r = vec![vec![false; n]; n];
    for (i, row) in r.iter_mut().enumerate() {
        row[i] = true;
    }
    for &(u, v, _) in edges {
        r[u][v] = true;
        if !directed {
            r[v][u] = true;
        }
    }
    for k in 0..n {
        for i in 0..n {
            if r[i][k] {
                for j in 0..n {
                    if r[k][j] {
                        r[i][j] = true;
                    }
                }
            }
        }
    }
    r
}

/// `m[i][j]` holds when `i` and `j` share a label.
pub fn co_membership(assign: &[usize]) -> Vec<Vec<bool>> {
    assign
        .iter()
        .map(|a| assign.iter().map(|b| a == b).collect())
        .collect()
}

pub fn mutual_reachability(n: usize, edges: &[Edge]) -> Vec<Vec<bool>> {
    let r = reachability(n, true, edges);
    (0..n)
        .map(|i| (0..n).map(|j| r[i][j] && r[j][i]).collect())
        .collect()
}

/// `Q = 1/2m sum_ij (A_ij - k_i k_j / 2m) delta(c_i, c_j)` with binary `A`.
pub fn modularity_double_sum(n: usize, edges: &[Edge], assign: &[usize]) -> f64 {
    let mut a = vec![vec![0.0; n]; n];
    for &(u, v, _) in edges {
        a[u][v] = 1.0;
        a[v][u] = 1.0;
    }
    let k: Vec<f64> = a.iter().map(|r| r.iter().sum()).collect();
    let two_m: f64 = k.iter().sum();
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            if assign[i] == assign[j] {
                q += a[i][j] - k[i] * k[j] / two_m;
            }
        }
    }
    q / two_m
}

/// Betweenness by listing every shortest path between every ordered pair.
/// Undirected scores count each unordered pair once.
pub fn betweenness_by_paths(n: usize, directed: bool, edges: &[Edge]) -> Vec<f64> {
    fn collect(
        adj: &[Vec<(usize, f64)>],
        u: usize,
        t: usize,
        remaining: usize,
        path: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if u == t {
            out.push(path.clone());
            return;
        }
        if remaining == 0 {
            return;
        }
        for &(v, _) in &adj[u] {
            if !path.contains(&v) {
                path.push(v);
                collect(adj, v, t, remaining - 1, path, out);
                path.pop();
            }
        }
    }
    let unit: Vec<Edge> = edges.iter().map(|&(u, v, _)| (u, v, 1.0)).collect();
    let dist = all_simple_path_distances(n, directed, &unit);
    let adj = adjacency(n, directed, &unit);
    let mut score = vec![0.0; n];
    for s in 0..n {
        for t in 0..n {
            if s == t || !dist[s][t].is_finite() {
                continue;
            }
            let mut paths = Vec::new();
            collect(&adj, s, t, dist[s][t] as usize, &mut vec![s], &mut paths);
            let total = paths.len() as f64;
            for p in &paths {
                for &v in &p[1..p.len() - 1] {
                    score[v] += 1.0 / total;
                }
            }
        }
    }
    if !directed {
        score.iter_mut().for_each(|x| *x /= 2.0);
    }
    score
}

pub fn random_labels(r: &mut Rng, n: usize, k: usize) -> Vec<usize> {
    (0..n).map(|_| r.gen_range(0..k)).collect()
}

pub struct PartitionScores {
    pub nmi: f64,
    pub ari: f64,
    pub homogeneity: f64,
    pub completeness: f64,
}

fn entropy_of(counts: impl Iterator<Item = usize>, n: f64) -> f64 {
    counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Agreement scores from joint label frequencies (entropies) and explicit
/// pair enumeration (ARI).
pub fn reference_partition_scores(u: &[usize], v: &[usize]) -> PartitionScores {
    let n = u.len() as f64;
    let mut joint: HashMap<(usize, usize), usize> = HashMap::new();
    let mut cu: HashMap<usize, usize> = HashMap::new();
    let mut cv: HashMap<usize, usize> = HashMap::new();
    for (&a, &b) in u.iter().zip(v) {
        *joint.entry((a, b)).or_default() += 1;
        *cu.entry(a).or_default() += 1;
        *cv.entry(b).or_default() += 1;
    }
    let hu = entropy_of(cu.values().copied(), n);
    let hv = entropy_of(cv.values().copied(), n);
    let h_joint = entropy_of(joint.values().copied(), n);
    let mi = (hu + hv - h_joint).max(0.0);
    // H(U|V) = H(U,V) - H(V)
    let hu_v = (h_joint - hv).max(0.0);
    let hv_u = (h_joint - hu).max(0.0);
    let same_partition = co_membership(u) == co_membership(v);
    let nmi = if same_partition {
        1.0
    } else if hu == 0.0 || hv == 0.0 {
        0.0
    } else {
        mi / (hu * hv).sqrt()
    };
    let homogeneity = if hu == 0.0 || hu_v <= 1e-15 { 1.0 } else { 1.0 - hu_v / hu };
    let completeness = if hv == 0.0 || hv_u <= 1e-15 { 1.0 } else { 1.0 - hv_u / hv };

    // Pair counting: a = together in both, b = apart in both.
    let len = u.len();
    let (mut both, mut only_u, mut only_v, mut neither) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..len {
        for j in i + 1..len {
            match (u[i] == u[j], v[i] == v[j]) {
                (true, true) => both += 1.0,
                (true, false) => only_u += 1.0,
                (false, true) => only_v += 1.0,
                (false, false) => neither += 1.0,
            }
        }
    }
    let pairs = both + only_u + only_v + neither;
    let expected = (both + only_u) * (both + only_v) / pairs;
    let max_index = ((both + only_u) + (both + only_v)) / 2.0;
    let ari = if max_index == expected {
        if same_partition { 1.0 } else { 0.0 }
    } else {
        (both - expected) / (max_index - expected)
    };
    PartitionScores {
        nmi,
        ari,
        homogeneity,
        completeness,
    }
}

pub fn random_matrix(r: &mut Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| r.gen_range(-1.0..1.0))
}

/// Norm-wise relative error `||a - b|| / (||a|| + ||b||)`, zero when both vanish.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt() + b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        0.0
    } else {
        diff / norm
    }
}

pub const FD_STEP: f64 = 1e-6;

/// Central differences of `f` with respect to every entry of `x`.
pub fn numeric_gradient(x: &Matrix, mut f: impl FnMut(&Matrix) -> f64) -> Vec<f64> {
    let mut probe = x.clone();
    (0..x.as_slice().len())
        .map(|i| {
            let orig = probe.as_slice()[i];
            probe.as_mut_slice()[i] = orig + FD_STEP;
            let up = f(&probe);
            probe.as_mut_slice()[i] = orig - FD_STEP;
            let down = f(&probe);
            probe.as_mut_slice()[i] = orig;
            (up - down) / (2.0 * FD_STEP)
        })
        .collect()
}

/// Weighted sum `sum(out .* r)`, a scalar read-out whose gradient is `r`.
pub fn readout(out: &Matrix, r: &Matrix) -> f64 {
    out.as_slice().iter().zip(r.as_slice()).map(|(a, b)| a * b).sum()
}

/// Worst absolute deviation of the four partition scores from the reference
/// over `pairs` random labelings with `n <= 50`.
pub fn partition_metric_worst_error(pairs: u64) -> f64 {
    let mut worst: f64 = 0.0;
    for seed in 0..pairs {
        let mut r = seeded(0x6e6d69 ^ seed);
        let n = r.gen_range(2..=50);
        let (ku, kv) = (r.gen_range(1..=6), r.gen_range(1..=6));
        let u = random_labels(&mut r, n, ku);
        let v = match seed % 5 {
            // Same partition under a relabeling.
            0 => u.iter().map(|&x| 7 * x + 3).collect(),
            // Refinement or coarsening of `u`.
            1 => u.iter().zip(random_labels(&mut r, n, 2)).map(|(&a, b)| 2 * a + b).collect(),
            _ => random_labels(&mut r, n, kv),
        };
        let m = graphbench::metrics::clustering_metrics(&u, &v).unwrap();
        let e = reference_partition_scores(&u, &v);
        for (a, b) in [
            (m.nmi, e.nmi),
            (m.ari, e.ari),
            (m.homogeneity, e.homogeneity),
            (m.completeness, e.completeness),
        ] {
            worst = worst.max((a - b).abs());
        }
    }
    worst
}

/// Worst absolute deviation of paired-test p-values from a Student-t
/// reference, over random samples with `df` from 1 to 30.
pub fn paired_t_worst_error(trials: u64) -> f64 {
    use statrs::distribution::{ContinuousCDF, StudentsT};
    let mut worst: f64 = 0.0;
    for seed in 0..trials {
        let mut r = seeded(0x7474 ^ seed);
        let n = 2 + (seed as usize % 30);
        let shift = r.gen_range(-0.5..0.5);
        let a: Vec<f64> = (0..n).map(|_| r.gen_range(0.0..1.0)).collect();
        let b: Vec<f64> = a.iter().map(|x| x + shift + r.gen_range(-0.3..0.3)).collect();
        let c = graphbench::metrics::compare_methods(&a, &b).unwrap();
        let d: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
        let mean = d.iter().sum::<f64>() / n as f64;
        let sd = (d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        let t = mean / (sd / (n as f64).sqrt());
        let dist = StudentsT::new(0.0, 1.0, (n - 1) as f64).unwrap();
        let p = 2.0 * dist.cdf(-t.abs());
        worst = worst.max((c.p_two_sided - p).abs()).max((c.t - t).abs() / t.abs().max(1.0));
    }
    worst
}
