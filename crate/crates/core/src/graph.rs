use std::collections::btree_map::{BTreeMap, Entry};

use crate::error::{Error, Result};
use crate::linkage::{ClusterId, DenseWeights, PairWeights};

/// Weighted undirected graph over points `0..n`.
///
/// Edges are keyed by the unordered id pair; a missing pair means the
/// dissimilarity is unknown, not infinite.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DissimilarityGraph {
    n: usize,
    edges: BTreeMap<(ClusterId, ClusterId), f64>,
}

impl DissimilarityGraph {
    pub fn new(n: usize) -> Self {
        DissimilarityGraph {
            n,
            edges: BTreeMap::new(),
        }
    }

    /// Complete graph from a weight function over unordered pairs.
    pub fn complete(n: usize, mut weight: impl FnMut(ClusterId, ClusterId) -> f64) -> Result<Self> {
        let mut g = DissimilarityGraph::new(n);
        for a in 0..n as ClusterId {
            for b in a + 1..n as ClusterId {
                g.add_edge(a, b, weight(a, b))?;
            }
        }
        Ok(g)
    }

    pub fn num_nodes(&self) -> usize {
        self.n
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Adds `{u, v}` with weight `w`.
    ///
    /// Re-adding an existing pair with the identical weight is a no-op;
    /// a different weight is rejected.
    pub fn add_edge(&mut self, u: ClusterId, v: ClusterId, w: f64) -> Result<()> {
        if u == v {
            return Err(Error::contract(format!("self-loop on node {u}")));
        }
        if !w.is_finite() || w < 0.0 {
            return Err(Error::contract(format!(
                "edge {{{u}, {v}}} has weight {w}; weights must be finite and non-negative"
            )));
        }
        let key = (u.min(v), u.max(v));
        if key.1 as usize >= self.n {
            return Err(Error::contract(format!(
                "edge {{{u}, {v}}} out of range for {} nodes",
                self.n
            )));
        }
        match self.edges.entry(key) {
            Entry::Vacant(e) => {
                e.insert(w);
                Ok(())
            }
            Entry::Occupied(e) if e.get().to_bits() == w.to_bits() => Ok(()),
            Entry::Occupied(e) => Err(Error::contract(format!(
                "edge {{{u}, {v}}} given twice with different weights ({} and {w})",
                e.get()
            ))),
        }
    }

    pub fn weight(&self, u: ClusterId, v: ClusterId) -> Option<f64> {
        self.edges.get(&(u.min(v), u.max(v))).copied()
    }

    /// Edges as `(lo, hi, weight)` in increasing `(lo, hi)` order.
    pub fn edges(&self) -> impl Iterator<Item = (ClusterId, ClusterId, f64)> + '_ {
        self.edges.iter().map(|(&(a, b), &w)| (a, b, w))
    }

    /// Per-node neighbor lists, each sorted by neighbor id.
    pub fn adjacency(&self) -> Vec<Vec<(ClusterId, f64)>> {
        let mut adj = vec![Vec::new(); self.n];
        for (a, b, w) in self.edges() {
            adj[a as usize].push((b, w));
            adj[b as usize].push((a, w));
        }
        for list in &mut adj {
            list.sort_unstable_by_key(|&(x, _)| x);
        }
        adj
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for (a, b, _) in self.edges() {
            deg[a as usize] += 1;
            deg[b as usize] += 1;
        }
        deg
    }

    /// Whether more than half of all possible pairs carry an edge.
    pub fn is_dense(&self) -> bool {
        let possible = self.n.saturating_mul(self.n.saturating_sub(1)) / 2;
        possible > 0 && self.edges.len() * 2 > possible
    }

    pub fn to_dense(&self) -> DenseWeights {
        let mut d = DenseWeights::new(self.n);
        for (a, b, w) in self.edges() {
            d.set(a, b, w);
        }
        d
    }
}

impl PairWeights for DissimilarityGraph {
    fn pair_weight(&self, a: ClusterId, b: ClusterId) -> Option<f64> {
        self.weight(a, b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_lookup_and_dedup() {
        let mut g = DissimilarityGraph::new(3);
        g.add_edge(0, 1, 1.5).unwrap();
        g.add_edge(1, 0, 1.5).unwrap();
        assert_eq!(g.num_edges(), 1);
        assert_eq!(g.weight(1, 0), Some(1.5));
        assert_eq!(g.weight(0, 2), None);
    }

    #[test]
    fn rejects_bad_edges() {
        let mut g = DissimilarityGraph::new(3);
        assert!(g.add_edge(1, 1, 1.0).is_err());
        assert!(g.add_edge(0, 1, -1.0).is_err());
        assert!(g.add_edge(0, 1, f64::NAN).is_err());
        assert!(g.add_edge(0, 1, f64::INFINITY).is_err());
        assert!(g.add_edge(0, 3, 1.0).is_err());
        g.add_edge(0, 1, 1.0).unwrap();
        assert!(g.add_edge(1, 0, 2.0).is_err());
    }

    #[test]
    fn adjacency_is_sorted_and_symmetric() {
        let g = DissimilarityGraph::complete(4, |a, b| (a + b) as f64).unwrap();
        let adj = g.adjacency();
        assert_eq!(adj[2], vec![(0, 2.0), (1, 3.0), (3, 5.0)]);
        assert!(g.is_dense());
        assert_eq!(g.degrees(), vec![3; 4]);
    }
}
