//! Graphs, graph shift operators, k-hop neighborhoods and relabeling.

mod hoods;
mod permutation;
mod shift;

pub use hoods::{neighborhoods, NeighborhoodTable};
pub use permutation::{permute, permute_signal, Permutation};
pub use shift::{
    apply_shift, apply_shift_transpose, build_shift_operator, shift_column,
    shift_column_transpose, spectral_rescale, spectral_rescale_with, ShiftOperator,
    ShiftVariant, POWER_ITERATION_CAP, POWER_ITERATION_TOL,
};

use std::collections::HashMap;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    pub weight: f64,
}

/// A weighted graph on nodes `0..n`.
///
/// Edges are kept sorted by `(src, dst)`. An undirected graph stores both
/// orientations of every edge with equal weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    edges: Vec<Edge>,
    directed: bool,
}

impl Graph {
    /// Validates and canonicalizes a raw edge list.
    pub fn new(n: usize, mut edges: Vec<Edge>, directed: bool) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyGraph);
        }
        for e in &edges {
            for index in [e.src, e.dst] {
                if index >= n {
                    return Err(Error::NodeOutOfRange { index, n });
                }
            }
            if e.src == e.dst {
                return Err(Error::SelfLoop(e.src));
            }
            if !e.weight.is_finite() {
                return Err(Error::NonFinite(format!(
                    "weight of edge ({}, {})",
                    e.src, e.dst
                )));
            }
        }
        edges.sort_by_key(|e| (e.src, e.dst));
        if let Some(w) = edges
            .windows(2)
            .find(|w| (w[0].src, w[0].dst) == (w[1].src, w[1].dst))
        {
            return Err(Error::DuplicateEdge {
                src: w[0].src,
                dst: w[0].dst,
            });
        }
        if !directed {
            let lookup: HashMap<(usize, usize), f64> =
                edges.iter().map(|e| ((e.src, e.dst), e.weight)).collect();
            for e in &edges {
                if lookup.get(&(e.dst, e.src)) != Some(&e.weight) {
                    return Err(Error::AsymmetricEdge {
                        src: e.src,
                        dst: e.dst,
                    });
                }
            }
        }
        Ok(Graph { n, edges, directed })
    }

    /// Undirected graph from one entry per unordered pair.
    pub fn undirected(n: usize, pairs: &[(usize, usize, f64)]) -> Result<Self> {
        let edges = pairs
            .iter()
            .flat_map(|&(a, b, weight)| {
                [
                    Edge {
                        src: a,
                        dst: b,
                        weight,
                    },
                    Edge {
                        src: b,
                        dst: a,
                        weight,
                    },
                ]
            })
            .collect();
        Graph::new(n, edges, false)
    }

    pub fn directed(n: usize, arcs: &[(usize, usize, f64)]) -> Result<Self> {
        let edges = arcs
            .iter()
            .map(|&(src, dst, weight)| Edge { src, dst, weight })
            .collect();
        Graph::new(n, edges, true)
    }

    /// Path graph `0 - 1 - ... - (n-1)` with unit weights.
    pub fn path(n: usize) -> Result<Self> {
        let pairs: Vec<_> = (1..n).map(|i| (i - 1, i, 1.0)).collect();
        Graph::undirected(n, &pairs)
    }

    pub fn cycle(n: usize) -> Result<Self> {
        let pairs: Vec<_> = (0..n).map(|i| (i, (i + 1) % n, 1.0)).collect();
        Graph::undirected(n, &pairs)
    }

    pub fn complete(n: usize) -> Result<Self> {
        let pairs: Vec<_> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j, 1.0)))
            .collect();
        Graph::undirected(n, &pairs)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    /// Undirected edges are counted once.
    pub fn edge_count(&self) -> usize {
        if self.directed {
            self.edges.len()
        } else {
            self.edges.len() / 2
        }
    }

    /// Average number of incident (undirected) or outgoing (directed) edges.
    pub fn mean_degree(&self) -> f64 {
        self.edges.len() as f64 / self.n as f64
    }

    pub fn max_degree(&self) -> usize {
        let mut deg = vec![0usize; self.n];
        for e in &self.edges {
            deg[e.src] += 1;
        }
        deg.into_iter().max().unwrap_or(0)
    }

    /// Weak connectivity (edge directions ignored).
    pub fn is_connected(&self) -> bool {
        let mut adj = vec![Vec::new(); self.n];
        for e in &self.edges {
            adj[e.src].push(e.dst);
            adj[e.dst].push(e.src);
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == self.n
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_edges() {
        assert_eq!(Graph::undirected(0, &[]), Err(Error::EmptyGraph));
        assert_eq!(
            Graph::undirected(2, &[(0, 2, 1.0)]),
            Err(Error::NodeOutOfRange { index: 2, n: 2 })
        );
        assert_eq!(
            Graph::directed(3, &[(0, 1, 1.0), (0, 1, 2.0)]),
            Err(Error::DuplicateEdge { src: 0, dst: 1 })
        );
        assert_eq!(
            Graph::new(
                2,
                vec![Edge {
                    src: 0,
                    dst: 1,
                    weight: 1.0
                }],
                false
            ),
            Err(Error::AsymmetricEdge { src: 0, dst: 1 })
        );
        assert_eq!(Graph::directed(2, &[(1, 1, 1.0)]), Err(Error::SelfLoop(1)));
    }

    #[test]
    fn connectivity() {
        assert!(Graph::path(4).unwrap().is_connected());
        assert!(!Graph::undirected(3, &[(0, 1, 1.0)]).unwrap().is_connected());
        assert!(Graph::undirected(1, &[]).unwrap().is_connected());
    }
}
