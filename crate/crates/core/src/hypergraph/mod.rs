//! Interaction hypergraphs and their dependency graphs.
//!
//! Qudits are numbered `0..n_qudits`; every hyperedge is the support of one
//! projector. The dependency graph has one vertex per hyperedge and joins two
//! vertices when their supports overlap.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

mod generate;
mod io;

pub use generate::{generate, EnsembleSpec, QuditPlacement};
pub use io::{load_hypergraph, parse_hypergraph, HypergraphFile};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HypergraphError {
    #[error("edges[{edge}]: qudit index {index} out of range for {n_qudits} qudits")]
    IndexOutOfRange {
        edge: usize,
        index: usize,
        n_qudits: usize,
    },
    #[error("edges[{edge}] is empty")]
    EmptyEdge { edge: usize },
    #[error("edges[{edge}] repeats qudit {index}")]
    RepeatedIndex { edge: usize, index: usize },
    #[error("vertex {vertex} out of range for a graph on {n_vertices} vertices")]
    VertexOutOfRange { vertex: usize, n_vertices: usize },
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("invalid ensemble parameter: {0}")]
    InvalidParameter(String),
    #[error("{location}: {message}")]
    Format { location: String, message: String },
}

/// Qudits plus the supports of the projectors acting on them.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawHypergraph", into = "RawHypergraph")]
pub struct InteractionHypergraph {
    n_qudits: usize,
    edges: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct RawHypergraph {
    n_qudits: usize,
    edges: Vec<Vec<usize>>,
}

impl TryFrom<RawHypergraph> for InteractionHypergraph {
    type Error = HypergraphError;

    fn try_from(raw: RawHypergraph) -> Result<Self, Self::Error> {
        InteractionHypergraph::new(raw.n_qudits, raw.edges)
    }
}

impl From<InteractionHypergraph> for RawHypergraph {
    fn from(h: InteractionHypergraph) -> Self {
        RawHypergraph {
            n_qudits: h.n_qudits,
            edges: h.edges,
        }
    }
}

impl InteractionHypergraph {
    /// Validates and builds a hypergraph. Edge order is preserved; it fixes
    /// the vertex order of the dependency graph.
    pub fn new(n_qudits: usize, edges: Vec<Vec<usize>>) -> Result<Self, HypergraphError> {
        for (e, edge) in edges.iter().enumerate() {
            if edge.is_empty() {
                return Err(HypergraphError::EmptyEdge { edge: e });
            }
            let mut seen = BTreeSet::new();
            for &a in edge {
                if a >= n_qudits {
                    return Err(HypergraphError::IndexOutOfRange {
                        edge: e,
                        index: a,
                        n_qudits,
                    });
                }
                if !seen.insert(a) {
                    return Err(HypergraphError::RepeatedIndex { edge: e, index: a });
                }
            }
        }
        Ok(Self { n_qudits, edges })
    }

    pub fn n_qudits(&self) -> usize {
        self.n_qudits
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Vec<usize>] {
        &self.edges
    }

    pub fn edge(&self, i: usize) -> &[usize] {
        &self.edges[i]
    }

    /// Constraint density `α = M/N`.
    pub fn density(&self) -> f64 {
        if self.n_qudits == 0 {
            0.0
        } else {
            self.edges.len() as f64 / self.n_qudits as f64
        }
    }

    /// Number of hyperedges touching each qudit.
    pub fn qudit_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n_qudits];
        for edge in &self.edges {
            for &a in edge {
                deg[a] += 1;
            }
        }
        deg
    }

    /// For each qudit, the hyperedges containing it, in edge order.
    pub fn qudit_edges(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_qudits];
        for (i, edge) in self.edges.iter().enumerate() {
            for &a in edge {
                out[a].push(i);
            }
        }
        out
    }

    /// The common edge size, if all edges have the same size.
    pub fn uniform_locality(&self) -> Option<usize> {
        let k = self.edges.first()?.len();
        self.edges.iter().all(|e| e.len() == k).then_some(k)
    }

    /// Disjoint union; qudits and edges of `other` are shifted past ours.
    pub fn disjoint_union(&self, other: &Self) -> Self {
        let shift = self.n_qudits;
        let mut edges = self.edges.clone();
        edges.extend(
            other
                .edges
                .iter()
                .map(|e| e.iter().map(|&a| a + shift).collect::<Vec<_>>()),
        );
        Self {
            n_qudits: self.n_qudits + other.n_qudits,
            edges,
        }
    }

    /// True when the site/hyperedge incidence graph is a forest, i.e. belief
    /// propagation is exact on this hypergraph.
    pub fn is_factor_forest(&self) -> bool {
        // union-find over sites + edges
        let n = self.n_qudits + self.edges.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for (i, edge) in self.edges.iter().enumerate() {
            let ei = self.n_qudits + i;
            for &a in edge {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, ei));
                if ra == rb {
                    return false;
                }
                parent[ra] = rb;
            }
        }
        true
    }
}

/// Simple undirected graph: one vertex per projector.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DependencyGraph {
    n_vertices: usize,
    adjacency: Vec<Vec<usize>>,
}

impl DependencyGraph {
    /// Builds a graph from an edge list; duplicate pairs are merged.
    pub fn from_edges(
        n_vertices: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, HypergraphError> {
        let mut adj = vec![BTreeSet::new(); n_vertices];
        for (u, v) in edges {
            for w in [u, v] {
                if w >= n_vertices {
                    return Err(HypergraphError::VertexOutOfRange {
                        vertex: w,
                        n_vertices,
                    });
                }
            }
            if u == v {
                return Err(HypergraphError::SelfLoop(u));
            }
            adj[u].insert(v);
            adj[v].insert(u);
        }
        Ok(Self {
            n_vertices,
            adjacency: adj.into_iter().map(|s| s.into_iter().collect()).collect(),
        })
    }

    pub fn empty(n_vertices: usize) -> Self {
        Self {
            n_vertices,
            adjacency: vec![Vec::new(); n_vertices],
        }
    }

    pub fn complete(n_vertices: usize) -> Self {
        let adjacency = (0..n_vertices)
            .map(|v| (0..n_vertices).filter(|&u| u != v).collect())
            .collect();
        Self {
            n_vertices,
            adjacency,
        }
    }

    /// Path on `n` vertices.
    pub fn path(n: usize) -> Self {
        Self::from_edges(n, (1..n).map(|v| (v - 1, v))).expect("valid path")
    }

    pub fn cycle(n: usize) -> Self {
        assert!(n >= 3, "cycle needs at least 3 vertices");
        Self::from_edges(n, (0..n).map(|v| (v, (v + 1) % n))).expect("valid cycle")
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn n_edges(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Sorted neighbor list.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency[u].binary_search(&v).is_ok()
    }

    /// Edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, nb)| nb.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
            .collect()
    }

    /// Subgraph induced by `vertices`, relabelled `0..vertices.len()` in the
    /// given order.
    pub fn induced_subgraph(&self, vertices: &[usize]) -> Self {
        let index: BTreeMap<usize, usize> =
            vertices.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let adjacency = vertices
            .iter()
            .map(|&v| {
                let mut nb: Vec<usize> = self.adjacency[v]
                    .iter()
                    .filter_map(|u| index.get(u).copied())
                    .collect();
                nb.sort_unstable();
                nb
            })
            .collect();
        Self {
            n_vertices: vertices.len(),
            adjacency,
        }
    }

    pub fn disjoint_union(&self, other: &Self) -> Self {
        let shift = self.n_vertices;
        let mut adjacency = self.adjacency.clone();
        adjacency.extend(
            other
                .adjacency
                .iter()
                .map(|nb| nb.iter().map(|&u| u + shift).collect()),
        );
        Self {
            n_vertices: self.n_vertices + other.n_vertices,
            adjacency,
        }
    }
}

/// Line graph of the hypergraph: hyperedges `i` and `j` are adjacent iff they
/// share a qudit. Vertex `i` is hyperedge `i`.
pub fn build_dependency_graph(h: &InteractionHypergraph) -> DependencyGraph {
    let mut adj = vec![BTreeSet::new(); h.n_edges()];
    for incident in h.qudit_edges() {
        for (x, &i) in incident.iter().enumerate() {
            for &j in &incident[x + 1..] {
                adj[i].insert(j);
                adj[j].insert(i);
            }
        }
    }
    DependencyGraph {
        n_vertices: h.n_edges(),
        adjacency: adj.into_iter().map(|s| s.into_iter().collect()).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeStats {
    /// degree → number of qudits with that degree
    pub histogram: BTreeMap<usize, usize>,
    pub mean: f64,
    pub cutoff: usize,
    /// Fraction of qudits whose degree is strictly above `cutoff`.
    pub fraction_above: f64,
}

/// Empirical qudit-degree histogram. For random k-QSAT the natural cutoff
/// is `2^k`, above which a single star already defeats the lattice-gas bound.
pub fn poisson_degree_stats(h: &InteractionHypergraph, cutoff: usize) -> DegreeStats {
    let degrees = h.qudit_degrees();
    let mut histogram = BTreeMap::new();
    for &d in &degrees {
        *histogram.entry(d).or_insert(0) += 1;
    }
    let n = degrees.len().max(1) as f64;
    DegreeStats {
        histogram,
        mean: degrees.iter().sum::<usize>() as f64 / n,
        cutoff,
        fraction_above: degrees.iter().filter(|&&d| d > cutoff).count() as f64 / n,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_invalid_edges() {
        assert_eq!(
            InteractionHypergraph::new(3, vec![vec![0, 3]]),
            Err(HypergraphError::IndexOutOfRange {
                edge: 0,
                index: 3,
                n_qudits: 3
            })
        );
        assert_eq!(
            InteractionHypergraph::new(3, vec![vec![0, 1], vec![]]),
            Err(HypergraphError::EmptyEdge { edge: 1 })
        );
        assert_eq!(
            InteractionHypergraph::new(3, vec![vec![1, 1]]),
            Err(HypergraphError::RepeatedIndex { edge: 0, index: 1 })
        );
    }

    #[test]
    fn chain_of_three_gives_k2() {
        let h = InteractionHypergraph::new(3, vec![vec![0, 1], vec![1, 2]]).unwrap();
        let g = build_dependency_graph(&h);
        assert_eq!(g.n_vertices(), 2);
        assert_eq!(g.edges(), vec![(0, 1)]);
    }

    #[test]
    fn star_gives_complete_graph() {
        let h = InteractionHypergraph::new(
            9,
            vec![vec![0, 1, 2], vec![0, 3, 4], vec![0, 5, 6], vec![0, 7, 8]],
        )
        .unwrap();
        assert_eq!(build_dependency_graph(&h), DependencyGraph::complete(4));
    }

    #[test]
    fn disjoint_edges_are_independent() {
        let h = InteractionHypergraph::new(4, vec![vec![0, 1], vec![2, 3]]).unwrap();
        let g = build_dependency_graph(&h);
        assert_eq!(g.n_vertices(), 2);
        assert_eq!(g.n_edges(), 0);
    }

    #[test]
    fn density_and_degrees() {
        let h = InteractionHypergraph::new(4, vec![vec![0, 1], vec![1, 2]]).unwrap();
        assert_eq!(h.density(), 0.5);
        assert_eq!(h.qudit_degrees(), vec![1, 2, 1, 0]);
        assert_eq!(h.uniform_locality(), Some(2));
        let mixed = InteractionHypergraph::new(4, vec![vec![0, 1], vec![1, 2, 3]]).unwrap();
        assert_eq!(mixed.uniform_locality(), None);
    }

    #[test]
    fn factor_forest_detection() {
        let tree = InteractionHypergraph::new(4, vec![vec![0, 1], vec![1, 2, 3]]).unwrap();
        assert!(tree.is_factor_forest());
        let loop_ = InteractionHypergraph::new(3, vec![vec![0, 1], vec![1, 2], vec![2, 0]]).unwrap();
        assert!(!loop_.is_factor_forest());
        // two edges sharing two qudits form a cycle in the incidence graph
        let double = InteractionHypergraph::new(3, vec![vec![0, 1], vec![0, 1, 2]]).unwrap();
        assert!(!double.is_factor_forest());
    }

    #[test]
    fn induced_subgraph_relabels() {
        let g = DependencyGraph::path(5);
        let sub = g.induced_subgraph(&[1, 2, 4]);
        assert_eq!(sub.edges(), vec![(0, 1)]);
    }

    #[test]
    fn degree_stats_chain_and_star() {
        let chain = generate(&EnsembleSpec::Chain { n: 5 }).unwrap();
        let stats = poisson_degree_stats(&chain, 1);
        assert_eq!(stats.histogram, BTreeMap::from([(1, 2), (2, 3)]));
        assert!((stats.fraction_above - 0.6).abs() < 1e-15);

        let star = generate(&EnsembleSpec::Star { z: 4, k: 3 }).unwrap();
        let deg = star.qudit_degrees();
        assert_eq!(deg[0], 4);
        assert!(deg[1..].iter().all(|&d| d == 1));
    }
}
