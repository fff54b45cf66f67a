//! Traversal, shortest paths, spanning trees and connectivity.
//!
//! Ties are always broken by ascending node id (or `(weight, u, v)` for
//! edges) so outputs are reproducible.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::partition::Partition;
use crate::serde_util::inf_f64_vec;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BfsResult {
    pub order: Vec<usize>,
    /// Hop count from the source; `None` when unreachable.
    pub hop_dist: Vec<Option<usize>>,
}

pub fn bfs(g: &Graph, source: usize) -> BfsResult {
    let n = g.n_nodes();
    assert!(source < n, "source {source} out of range");
    let mut hop_dist = vec![None; n];
    let mut order = Vec::new();
    let mut queue = VecDeque::new();
    hop_dist[source] = Some(0);
    queue.push_back(source);
    while let Some(u) = queue.pop_front() {
        order.push(u);
        let d = hop_dist[u].expect("queued nodes are labeled");
        for &v in g.neighbors(u) {
            if hop_dist[v].is_none() {
                hop_dist[v] = Some(d + 1);
                queue.push_back(v);
            }
        }
    }
    BfsResult { order, hop_dist }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DfsResult {
    pub preorder: Vec<usize>,
    pub finish_order: Vec<usize>,
}

/// Iterative depth-first search expanding neighbors in ascending id order.
pub fn dfs(g: &Graph, source: usize) -> DfsResult {
    let n = g.n_nodes();
    assert!(source < n, "source {source} out of range");
    let mut visited = vec![false; n];
    let mut preorder = Vec::new();
    let mut finish_order = Vec::new();
    let mut stack: Vec<(usize, usize)> = vec![(source, 0)];
    visited[source] = true;
    preorder.push(source);
    while let Some(top) = stack.last_mut() {
        let (u, next) = *top;
        let nbrs = g.neighbors(u);
        if next < nbrs.len() {
            top.1 += 1;
            let v = nbrs[next];
            if !visited[v] {
                visited[v] = true;
                preorder.push(v);
                stack.push((v, 0));
            }
        } else {
            finish_order.push(u);
            stack.pop();
        }
    }
    DfsResult {
        preorder,
        finish_order,
    }
}

/// Single-source distances; `f64::INFINITY` marks unreachable nodes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathResult {
    #[serde(with = "inf_f64_vec")]
    pub dist: Vec<f64>,
    pub pred: Vec<Option<usize>>,
}

impl PathResult {
    /// Node sequence from the source to `target`, if reachable.
    pub fn path_to(&self, target: usize) -> Option<Vec<usize>> {
        if !self.dist[target].is_finite() {
            return None;
        }
        let mut path = vec![target];
        let mut cur = target;
        while let Some(p) = self.pred[cur] {
            path.push(p);
            cur = p;
        }
        path.reverse();
        Some(path)
    }
}

#[derive(Debug, PartialEq)]
struct HeapEntry {
    dist: f64,
    node: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed for a min-heap; ties by ascending node id.
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Binary-heap Dijkstra with stale-entry skipping.
pub fn dijkstra(g: &Graph, source: usize) -> Result<PathResult> {
    let n = g.n_nodes();
    if source >= n {
        return Err(Error::Contract(format!("source {source} out of range")));
    }
    if let Some(u) = (0..n).find(|&u| g.neighbor_weights(u).iter().any(|&w| w < 0.0)) {
        return Err(Error::Contract(format!(
            "dijkstra requires non-negative weights; node {u} has a negative out-edge"
        )));
    }
    let mut dist = vec![f64::INFINITY; n];
    let mut pred = vec![None; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(HeapEntry {
        dist: 0.0,
        node: source,
    });
    while let Some(HeapEntry { dist: d, node: u }) = heap.pop() {
        if done[u] || d > dist[u] {
            continue;
        }
        done[u] = true;
        for (v, w) in g.weighted_neighbors(u) {
            let nd = d + w;
            if nd < dist[v] {
                dist[v] = nd;
                pred[v] = Some(u);
                heap.push(HeapEntry { dist: nd, node: v });
            }
        }
    }
    Ok(PathResult { dist, pred })
}

/// All-pairs distance matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceMatrix {
    n: usize,
    #[serde(with = "inf_f64_vec")]
    d: Vec<f64>,
}

impl DistanceMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.d[i * self.n..(i + 1) * self.n]
    }
}

/// Floyd-Warshall with the in-place `k` recurrence. Negative edge weights are
/// allowed; a negative cycle is reported with a node on it.
pub fn floyd_warshall(g: &Graph) -> Result<DistanceMatrix> {
    let n = g.n_nodes();
    let mut d = vec![f64::INFINITY; n * n];
    for i in 0..n {
        d[i * n + i] = 0.0;
    }
    for u in 0..n {
        for (v, w) in g.weighted_neighbors(u) {
            let cell = &mut d[u * n + v];
            if w < *cell {
                *cell = w;
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            let dik = d[i * n + k];
            if dik == f64::INFINITY {
                continue;
            }
            for j in 0..n {
                let dkj = d[k * n + j];
                if dkj == f64::INFINITY {
                    continue;
                }
                let through = dik + dkj;
                if through < d[i * n + j] {
                    d[i * n + j] = through;
                }
            }
        }
    }
    if let Some(node) = (0..n).find(|&i| d[i * n + i] < 0.0) {
        return Err(Error::NegativeCycle { node });
    }
    Ok(DistanceMatrix { n, d })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MstResult {
    /// Tree edges as `(u, v, w)` with `u < v`, in the order they were added.
    pub edges: Vec<(usize, usize, f64)>,
    pub total_weight: f64,
    /// Number of trees; greater than one means the result is a forest.
    pub n_components: usize,
}

impl MstResult {
    pub fn is_spanning_forest(&self) -> bool {
        self.n_components > 1
    }
}

fn edge_key_cmp(a: &(usize, usize, f64), b: &(usize, usize, f64)) -> Ordering {
    a.2.total_cmp(&b.2)
        .then(a.0.cmp(&b.0))
        .then(a.1.cmp(&b.1))
}

/// Disjoint-set forest with path compression and union by rank.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
    sets: usize,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
            sets: n,
        }
    }

    pub fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    /// Returns false if `a` and `b` were already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            Ordering::Less => self.parent[ra] = rb,
            Ordering::Greater => self.parent[rb] = ra,
            Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        self.sets -= 1;
        true
    }

    pub fn n_sets(&self) -> usize {
        self.sets
    }
}

pub fn kruskal(g: &Graph) -> Result<MstResult> {
    g.require_undirected("kruskal")?;
    let mut edges = g.edges();
    edges.sort_by(edge_key_cmp);
    let mut uf = UnionFind::new(g.n_nodes());
    let mut tree = Vec::new();
    let mut total = 0.0;
    for e in edges {
        if uf.union(e.0, e.1) {
            total += e.2;
            tree.push(e);
        }
    }
    Ok(MstResult {
        edges: tree,
        total_weight: total,
        n_components: uf.n_sets(),
    })
}

#[derive(Debug, PartialEq)]
struct PrimEntry((usize, usize, f64));

impl Eq for PrimEntry {}

impl Ord for PrimEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        edge_key_cmp(&other.0, &self.0)
    }
}

impl PartialOrd for PrimEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Lazy Prim. Each tree of the forest is grown from its smallest node id.
pub fn prim(g: &Graph) -> Result<MstResult> {
    g.require_undirected("prim")?;
    let n = g.n_nodes();
    let mut in_tree = vec![false; n];
    let mut tree = Vec::new();
    let mut total = 0.0;
    let mut components = 0;
    let mut heap = BinaryHeap::new();
    for root in 0..n {
        if in_tree[root] {
            continue;
        }
        components += 1;
        in_tree[root] = true;
        let push = |heap: &mut BinaryHeap<PrimEntry>, u: usize, in_tree: &[bool]| {
            for (v, w) in g.weighted_neighbors(u) {
                if !in_tree[v] {
                    heap.push(PrimEntry((u.min(v), u.max(v), w)));
                }
            }
        };
        push(&mut heap, root, &in_tree);
        while let Some(PrimEntry(e)) = heap.pop() {
            let new = match (in_tree[e.0], in_tree[e.1]) {
                (true, false) => e.1,
                (false, true) => e.0,
                _ => continue,
            };
            in_tree[new] = true;
            total += e.2;
            tree.push(e);
            push(&mut heap, new, &in_tree);
        }
    }
    Ok(MstResult {
        edges: tree,
        total_weight: total,
        n_components: components,
    })
}

/// Components numbered by their smallest node id. Directed graphs get weakly
/// connected components.
pub fn connected_components(g: &Graph) -> Partition {
    let n = g.n_nodes();
    let mut uf = UnionFind::new(n);
    for u in 0..n {
        for &v in g.neighbors(u) {
            uf.union(u, v);
        }
    }
    let roots: Vec<usize> = (0..n).map(|u| uf.find(u)).collect();
    Partition::from_labels(&roots)
}

/// Iterative Tarjan. Component ids come out in reverse topological order of
/// the condensation: sink components get the smallest ids.
pub fn strongly_connected_components(g: &Graph) -> Result<Partition> {
    if !g.is_directed() {
        return Err(Error::Contract(
            "strongly_connected_components requires a directed graph".into(),
        ));
    }
    const UNSEEN: usize = usize::MAX;
    let n = g.n_nodes();
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut comp = vec![UNSEEN; n];
    let mut next_index = 0;
    let mut next_comp = 0;
    let mut call: Vec<(usize, usize)> = Vec::new();

    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        call.push((root, 0));
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&mut (v, ref mut pos)) = call.last_mut() {
            let nbrs = g.neighbors(v);
            if *pos < nbrs.len() {
                let w = nbrs[*pos];
                *pos += 1;
                if index[w] == UNSEEN {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    loop {
                        let w = stack.pop().expect("component members are stacked");
                        on_stack[w] = false;
                        comp[w] = next_comp;
                        if w == v {
                            break;
                        }
                    }
                    next_comp += 1;
                }
            }
        }
    }
    Partition::from_contiguous(comp)
}
