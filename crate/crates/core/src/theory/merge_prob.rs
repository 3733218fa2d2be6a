//! Merge probabilities of clusters under uniformly random edge orderings.
//!
//! With single linkage and i.i.d. continuous weights, clusters `C_i` and
//! `C_j` merge in a round iff the lightest edge touching either of them runs
//! between them.

use std::collections::BTreeMap;

use num_rational::Ratio;

use crate::error::{Error, Result};

/// Enumeration cap: `9! = 362880` orderings.
pub const MAX_ENUMERATED_EDGES: usize = 9;

/// Vertices grouped into clusters, with the edges between them.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterPartitionGraph {
    membership: Vec<usize>,
    edges: Vec<(usize, usize)>,
    clusters: usize,
}

impl ClusterPartitionGraph {
    /// `membership[v]` is the cluster of vertex `v`; `edges` join vertices.
    pub fn new(membership: Vec<usize>, edges: Vec<(usize, usize)>) -> Result<Self> {
        let clusters = membership.iter().map(|&c| c + 1).max().unwrap_or(0);
        for &(u, v) in &edges {
            if u >= membership.len() || v >= membership.len() {
                return Err(Error::contract(format!("edge ({u}, {v}) names a missing vertex")));
            }
            if u == v {
                return Err(Error::contract(format!("self-loop on vertex {u}")));
            }
        }
        Ok(ClusterPartitionGraph {
            membership,
            edges,
            clusters,
        })
    }

    /// Cluster-level multigraph; every edge gets its own pair of endpoint
    /// vertices.
    pub fn from_cluster_edges(clusters: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut membership: Vec<usize> = (0..clusters).collect();
        let mut vertex_edges = Vec::with_capacity(edges.len());
        for &(i, j) in edges {
            if i >= clusters || j >= clusters || i == j {
                return Err(Error::contract(format!("bad cluster edge ({i}, {j})")));
            }
            membership.push(i);
            membership.push(j);
            vertex_edges.push((membership.len() - 2, membership.len() - 1));
        }
        ClusterPartitionGraph::new(membership, vertex_edges)
    }

    pub fn triangle() -> Self {
        Self::cycle(3)
    }

    pub fn path(k: usize) -> Self {
        let edges: Vec<_> = (1..k).map(|i| (i - 1, i)).collect();
        Self::from_cluster_edges(k, &edges).expect("valid path")
    }

    pub fn cycle(k: usize) -> Self {
        let edges: Vec<_> = (0..k).map(|i| (i, (i + 1) % k)).collect();
        Self::from_cluster_edges(k, &edges).expect("valid cycle")
    }

    pub fn star(leaves: usize) -> Self {
        let edges: Vec<_> = (1..=leaves).map(|i| (0, i)).collect();
        Self::from_cluster_edges(leaves + 1, &edges).expect("valid star")
    }

    pub fn complete(k: usize) -> Self {
        let edges: Vec<_> = (0..k).flat_map(|i| (i + 1..k).map(move |j| (i, j))).collect();
        Self::from_cluster_edges(k, &edges).expect("valid complete graph")
    }

    pub fn num_clusters(&self) -> usize {
        self.clusters
    }

    /// Edges between different clusters, as sorted cluster pairs.
    pub fn inter_edges(&self) -> Vec<(usize, usize)> {
        self.edges
            .iter()
            .map(|&(u, v)| (self.membership[u], self.membership[v]))
            .filter(|(a, b)| a != b)
            .map(|(a, b)| (a.min(b), a.max(b)))
            .collect()
    }

    pub fn d_ij(&self, i: usize, j: usize) -> u64 {
        let key = (i.min(j), i.max(j));
        self.inter_edges().iter().filter(|&&e| e == key).count() as u64
    }

    pub fn d_i(&self, i: usize) -> u64 {
        self.inter_edges().iter().filter(|&&(a, b)| a == i || b == i).count() as u64
    }

    /// Largest vertex degree.
    pub fn degree_bound(&self) -> usize {
        let mut deg = vec![0usize; self.membership.len()];
        for &(u, v) in &self.edges {
            deg[u] += 1;
            deg[v] += 1;
        }
        deg.into_iter().max().unwrap_or(0)
    }

    /// Cluster pairs joined by at least one edge.
    pub fn adjacent_pairs(&self) -> Vec<(usize, usize)> {
        let mut p = self.inter_edges();
        p.sort_unstable();
        p.dedup();
        p
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MergeProbTable {
    pub orderings: u64,
    pub pairs: BTreeMap<(usize, usize), Ratio<u64>>,
}

impl MergeProbTable {
    /// Expected merges per round, `M(G) = sum of P_ij`.
    pub fn expected_merges(&self) -> Ratio<u64> {
        self.pairs.values().fold(Ratio::from_integer(0), |a, &b| a + b)
    }
}

/// Exact merge probabilities by enumerating every edge ordering.
pub fn merge_prob_exhaustive(g: &ClusterPartitionGraph) -> Result<MergeProbTable> {
    let edges = g.inter_edges();
    let m = edges.len();
    if m > MAX_ENUMERATED_EDGES {
        return Err(Error::TooLarge(format!(
            "{m} inter-cluster edges; enumeration is limited to {MAX_ENUMERATED_EDGES}"
        )));
    }
    let pairs = g.adjacent_pairs();
    let mut counts = vec![0u64; pairs.len()];
    let mut orderings = 0u64;
    let mut order: Vec<usize> = (0..m).collect();
    let mut lightest = vec![usize::MAX; g.num_clusters()];
    let mut visit = |order: &[usize]| {
        lightest.fill(usize::MAX);
        // order[r] is the edge of rank r; the first edge seen at a cluster is its lightest
        for &e in order {
            let (a, b) = edges[e];
            if lightest[a] == usize::MAX {
                lightest[a] = e;
            }
            if lightest[b] == usize::MAX {
                lightest[b] = e;
            }
        }
        for (c, &(i, j)) in counts.iter_mut().zip(&pairs) {
            if lightest[i] == lightest[j] {
                *c += 1;
            }
        }
        orderings += 1;
    };
    // Heap's algorithm, iterative form.
    visit(&order);
    let mut stack = vec![0usize; m];
    let mut i = 1;
    while i < m {
        if stack[i] < i {
            let swap_with = if i % 2 == 0 { 0 } else { stack[i] };
            order.swap(swap_with, i);
            visit(&order);
            stack[i] += 1;
            i = 1;
        } else {
            stack[i] = 0;
            i += 1;
        }
    }
    Ok(MergeProbTable {
        orderings,
        pairs: pairs
            .into_iter()
            .zip(counts)
            .map(|(p, c)| (p, Ratio::new(c, orderings)))
            .collect(),
    })
}

fn check_counts(d_ij: u64, d_i: u64, d_j: u64) -> Result<()> {
    if d_ij < 1 || d_i < d_ij || d_j < d_ij {
        return Err(Error::contract(format!(
            "inconsistent edge counts d_ij = {d_ij}, d_i = {d_i}, d_j = {d_j}"
        )));
    }
    Ok(())
}

/// `d_ij / (d_i + d_j - d_ij)`: the lightest of the `d_i + d_j - d_ij` edges
/// touching either cluster is uniformly placed.
pub fn merge_prob_formula(d_ij: u64, d_i: u64, d_j: u64) -> Result<Ratio<u64>> {
    check_counts(d_ij, d_i, d_j)?;
    Ok(Ratio::new(d_ij, d_i + d_j - d_ij))
}

/// `d_ij / (d_i + d_j + d_ij)`, the variant with `+ d_ij` in the denominator. Kept
/// for comparison; it disagrees with enumeration (1/5 instead of 1/3 on a
/// triangle).
pub fn merge_prob_plus_denominator(d_ij: u64, d_i: u64, d_j: u64) -> Result<Ratio<u64>> {
    check_counts(d_ij, d_i, d_j)?;
    Ok(Ratio::new(d_ij, d_i + d_j + d_ij))
}
