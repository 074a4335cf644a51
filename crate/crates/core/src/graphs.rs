//! Decomposable (chordal) graphs over `p` labelled nodes.
//!
//! A [`DecomposableGraph`] always carries a clique/separator decomposition in
//! perfect order. Decomposability is decided by maximum-cardinality search
//! followed by a perfect-elimination check; the same search yields the
//! cliques, so every constructor either returns a certified graph or fails.
//!
//! Node sets are sorted `Vec<usize>`. Separators are kept with multiplicity;
//! empty separators (between connected components) are dropped since they
//! contribute nothing to any clique/separator product.

use std::cmp::Reverse;
use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use statrs::function::beta::ln_beta;

use crate::error::{Error, Result};

/// Cliques `C_1..C_K` in perfect order and the non-empty separators
/// `S_k = C_k ∩ (C_1 ∪ … ∪ C_{k-1})`, repeated when they recur.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliqueDecomposition {
    pub cliques: Vec<Vec<usize>>,
    pub separators: Vec<Vec<usize>>,
}

impl CliqueDecomposition {
    pub fn max_clique_size(&self) -> usize {
        self.cliques.iter().map(Vec::len).max().unwrap_or(0)
    }
}

/// Undirected decomposable graph with a cached decomposition.
///
/// Values are immutable; edits go through [`DecomposableGraph::try_toggle_edge`],
/// which returns a fresh graph.
#[derive(Debug, Clone)]
pub struct DecomposableGraph {
    p: usize,
    adj: Vec<bool>,
    decomposition: CliqueDecomposition,
}

impl PartialEq for DecomposableGraph {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.adj == other.adj
    }
}

impl Eq for DecomposableGraph {}

/// Canonical identity of a graph: node count plus sorted edge list.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GraphKey {
    pub p: usize,
    pub edges: Vec<(usize, usize)>,
}

/// Wire format `{"p": int, "edges": [[i,j],…]}` with `i<j`, sorted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphJson {
    pub p: usize,
    pub edges: Vec<[usize; 2]>,
}

/// Beta(a, b) hyperprior on the edge-inclusion rate of the multiplicity
/// correcting graph prior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphPriorConfig {
    pub a: f64,
    pub b: f64,
}

impl Default for GraphPriorConfig {
    fn default() -> Self {
        GraphPriorConfig { a: 1.0, b: 1.0 }
    }
}

impl GraphPriorConfig {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        let cfg = GraphPriorConfig { a, b };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.b > 0.0 && self.a.is_finite() && self.b.is_finite()) {
            return Err(Error::config(
                "graphs",
                format!("graph prior needs a > 0 and b > 0, got a={} b={}", self.a, self.b),
            ));
        }
        Ok(())
    }
}

fn check_pair(p: usize, i: usize, j: usize) -> Result<()> {
    for index in [i, j] {
        if index >= p {
            return Err(Error::InvalidNode { index, p });
        }
    }
    if i == j {
        return Err(Error::SelfLoop(i));
    }
    Ok(())
}

fn build_adjacency(p: usize, edges: &[(usize, usize)]) -> Result<Vec<bool>> {
    let mut adj = vec![false; p * p];
    for &(i, j) in edges {
        check_pair(p, i, j)?;
        adj[i * p + j] = true;
        adj[j * p + i] = true;
    }
    Ok(adj)
}

/// Maximum-cardinality search. Ties go to the lowest vertex index.
fn mcs_order<F: Fn(usize, usize) -> bool>(p: usize, adjacent: &F) -> Vec<usize> {
    let mut label = vec![0usize; p];
    let mut visited = vec![false; p];
    let mut order = Vec::with_capacity(p);
    for _ in 0..p {
        let v = (0..p)
            .filter(|&v| !visited[v])
            .max_by_key(|&v| (label[v], Reverse(v)))
            .expect("unvisited vertex remains");
        visited[v] = true;
        order.push(v);
        for u in 0..p {
            if !visited[u] && adjacent(v, u) {
                label[u] += 1;
            }
        }
    }
    order
}

/// Neighbours of each vertex that precede it in `order`, sorted by position.
fn earlier_neighbours<F: Fn(usize, usize) -> bool>(
    order: &[usize],
    adjacent: &F,
) -> Vec<Vec<usize>> {
    order
        .iter()
        .enumerate()
        .map(|(pos, &v)| {
            order[..pos]
                .iter()
                .copied()
                .filter(|&u| adjacent(u, v))
                .collect()
        })
        .collect()
}

/// Perfect elimination check of the reverse MCS order: for every vertex the
/// latest-visited earlier neighbour must be adjacent to all other earlier
/// neighbours.
fn is_perfect<F: Fn(usize, usize) -> bool>(earlier: &[Vec<usize>], adjacent: &F) -> bool {
    earlier.iter().all(|m| match m.last() {
        None => true,
        Some(&parent) => m[..m.len() - 1].iter().all(|&w| adjacent(w, parent)),
    })
}

fn chordal_with<F: Fn(usize, usize) -> bool>(p: usize, adjacent: &F) -> bool {
    let order = mcs_order(p, adjacent);
    is_perfect(&earlier_neighbours(&order, adjacent), adjacent)
}

fn decompose_with<F: Fn(usize, usize) -> bool>(
    p: usize,
    adjacent: &F,
) -> Option<CliqueDecomposition> {
    let order = mcs_order(p, adjacent);
    let earlier = earlier_neighbours(&order, adjacent);
    if !is_perfect(&earlier, adjacent) {
        return None;
    }
    let mut cliques: Vec<Vec<usize>> = Vec::new();
    let mut separators = Vec::new();
    let mut prev_len = 0usize;
    for (pos, (&v, m)) in order.iter().zip(&earlier).enumerate() {
        // Under MCS the earlier-neighbour count grows by exactly one while the
        // current clique is being extended; anything else starts a new clique.
        if pos == 0 || m.len() <= prev_len {
            let mut sep = m.clone();
            sep.sort_unstable();
            let mut clique = sep.clone();
            clique.push(v);
            clique.sort_unstable();
            if !sep.is_empty() {
                separators.push(sep);
            }
            cliques.push(clique);
        } else {
            let current = cliques.last_mut().expect("clique started");
            current.push(v);
            current.sort_unstable();
        }
        prev_len = m.len();
    }
    Some(CliqueDecomposition {
        cliques,
        separators,
    })
}

/// True iff the undirected graph on `p` nodes with these edges is chordal.
pub fn is_decomposable(p: usize, edges: &[(usize, usize)]) -> Result<bool> {
    let adj = build_adjacency(p, edges)?;
    Ok(chordal_with(p, &|u, v| adj[u * p + v]))
}

/// Clique/separator decomposition of a decomposable edge set.
pub fn decompose(p: usize, edges: &[(usize, usize)]) -> Result<CliqueDecomposition> {
    let adj = build_adjacency(p, edges)?;
    decompose_with(p, &|u, v| adj[u * p + v]).ok_or(Error::NotDecomposable)
}

/// Min-fill triangulation; ties are broken by lowest vertex index. The output
/// contains every input edge.
pub fn triangulate(p: usize, edges: &[(usize, usize)]) -> Result<DecomposableGraph> {
    let mut adj = build_adjacency(p, edges)?;
    let mut work = adj.clone();
    let mut alive = vec![true; p];
    for _ in 0..p {
        let mut pick: Option<(usize, usize)> = None;
        for v in (0..p).filter(|&v| alive[v]) {
            let nbrs: Vec<usize> = (0..p).filter(|&u| alive[u] && work[v * p + u]).collect();
            let mut fill = 0;
            for (a, &x) in nbrs.iter().enumerate() {
                for &y in &nbrs[a + 1..] {
                    if !work[x * p + y] {
                        fill += 1;
                    }
                }
            }
            if pick.is_none_or(|(_, best)| fill < best) {
                pick = Some((v, fill));
            }
        }
        let (v, _) = pick.expect("vertex remains");
        let nbrs: Vec<usize> = (0..p).filter(|&u| alive[u] && work[v * p + u]).collect();
        for (a, &x) in nbrs.iter().enumerate() {
            for &y in &nbrs[a + 1..] {
                work[x * p + y] = true;
                work[y * p + x] = true;
                adj[x * p + y] = true;
                adj[y * p + x] = true;
            }
        }
        alive[v] = false;
    }
    DecomposableGraph::from_adjacency(p, adj)
}

/// Log of the Beta-Binomial graph prior, `ln β(a+k, b+m−k) − ln β(a, b)`.
pub fn log_graph_prior(graph: &DecomposableGraph, config: &GraphPriorConfig) -> f64 {
    log_graph_prior_counts(graph.num_nodes(), graph.num_edges(), config)
}

/// Same as [`log_graph_prior`] from the node and edge counts alone.
pub fn log_graph_prior_counts(p: usize, k: usize, config: &GraphPriorConfig) -> f64 {
    let m = (p * p.saturating_sub(1) / 2) as f64;
    let k = k as f64;
    ln_beta(config.a + k, config.b + m - k) - ln_beta(config.a, config.b)
}

impl DecomposableGraph {
    pub fn empty(p: usize) -> Self {
        let decomposition = CliqueDecomposition {
            cliques: (0..p).map(|v| vec![v]).collect(),
            separators: Vec::new(),
        };
        DecomposableGraph {
            p,
            adj: vec![false; p * p],
            decomposition,
        }
    }

    pub fn complete(p: usize) -> Self {
        let mut adj = vec![true; p * p];
        for v in 0..p {
            adj[v * p + v] = false;
        }
        let decomposition = CliqueDecomposition {
            cliques: if p == 0 { vec![] } else { vec![(0..p).collect()] },
            separators: Vec::new(),
        };
        DecomposableGraph {
            p,
            adj,
            decomposition,
        }
    }

    pub fn new(p: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let adj = build_adjacency(p, edges)?;
        Self::from_adjacency(p, adj)
    }

    fn from_adjacency(p: usize, adj: Vec<bool>) -> Result<Self> {
        let decomposition = decompose_with(p, &|u, v| adj[u * p + v]).ok_or(Error::NotDecomposable)?;
        Ok(DecomposableGraph {
            p,
            adj,
            decomposition,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.p
    }

    pub fn num_edges(&self) -> usize {
        self.adj.iter().filter(|&&a| a).count() / 2
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i < self.p && j < self.p && self.adj[i * self.p + j]
    }

    /// Edges as `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let p = self.p;
        (0..p)
            .flat_map(|i| (i + 1..p).map(move |j| (i, j)))
            .filter(|&(i, j)| self.adj[i * p + j])
            .collect()
    }

    pub fn edge_set(&self) -> BTreeSet<(usize, usize)> {
        self.edges().into_iter().collect()
    }

    pub fn decomposition(&self) -> &CliqueDecomposition {
        &self.decomposition
    }

    pub fn key(&self) -> GraphKey {
        GraphKey {
            p: self.p,
            edges: self.edges(),
        }
    }

    /// Whether flipping `(i, j)` keeps the graph decomposable.
    ///
    /// Deleting an edge is legal iff it lies in exactly one maximal clique;
    /// additions run the full chordality check on the flipped adjacency.
    pub fn can_toggle(&self, i: usize, j: usize) -> Result<bool> {
        check_pair(self.p, i, j)?;
        let p = self.p;
        if self.adj[i * p + j] {
            let holders = self
                .decomposition
                .cliques
                .iter()
                .filter(|c| c.binary_search(&i).is_ok() && c.binary_search(&j).is_ok())
                .count();
            Ok(holders == 1)
        } else {
            let (lo, hi) = (i.min(j), i.max(j));
            Ok(chordal_with(p, &|u, v| {
                if u.min(v) == lo && u.max(v) == hi {
                    true
                } else {
                    self.adj[u * p + v]
                }
            }))
        }
    }

    /// Flip edge `(i, j)`. Returns `None` when the result would not be
    /// decomposable.
    pub fn try_toggle_edge(&self, i: usize, j: usize) -> Result<Option<DecomposableGraph>> {
        check_pair(self.p, i, j)?;
        let p = self.p;
        let mut adj = self.adj.clone();
        let flipped = !adj[i * p + j];
        adj[i * p + j] = flipped;
        adj[j * p + i] = flipped;
        Ok(decompose_with(p, &|u, v| adj[u * p + v]).map(|decomposition| DecomposableGraph {
            p,
            adj,
            decomposition,
        }))
    }

    /// Relabel nodes: node `v` becomes `perm[v]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<DecomposableGraph> {
        if perm.len() != self.p {
            return Err(Error::mismatch("graphs", "permutation length differs from p"));
        }
        let edges: Vec<(usize, usize)> = self
            .edges()
            .into_iter()
            .map(|(i, j)| (perm[i], perm[j]))
            .collect();
        DecomposableGraph::new(self.p, &edges)
    }

    pub fn to_json(&self) -> GraphJson {
        GraphJson {
            p: self.p,
            edges: self.edges().into_iter().map(|(i, j)| [i, j]).collect(),
        }
    }

    /// Graphviz DOT text, optionally with node labels.
    pub fn to_dot(&self, labels: Option<&[String]>) -> String {
        let mut out = String::from("graph G {\n");
        for v in 0..self.p {
            match labels.and_then(|l| l.get(v)) {
                Some(name) => writeln!(out, "  {v} [label=\"{}\"];", name.replace('"', "\\\"")),
                None => writeln!(out, "  {v};"),
            }
            .expect("write to string");
        }
        for (i, j) in self.edges() {
            writeln!(out, "  {i} -- {j};").expect("write to string");
        }
        out.push_str("}\n");
        out
    }
}

impl TryFrom<GraphJson> for DecomposableGraph {
    type Error = Error;

    fn try_from(value: GraphJson) -> Result<Self> {
        let edges: Vec<(usize, usize)> = value.edges.iter().map(|e| (e[0], e[1])).collect();
        DecomposableGraph::new(value.p, &edges)
    }
}

impl From<&DecomposableGraph> for GraphJson {
    fn from(g: &DecomposableGraph) -> Self {
        g.to_json()
    }
}

impl Serialize for DecomposableGraph {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DecomposableGraph {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = GraphJson::deserialize(deserializer)?;
        DecomposableGraph::try_from(raw).map_err(serde::de::Error::custom)
    }
}
