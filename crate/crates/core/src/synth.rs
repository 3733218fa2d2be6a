//! Seeded random instances.

use rand::Rng;

use crate::error::Result;
use crate::graph::DissimilarityGraph;
use crate::io::{Metric, PointSet};
use crate::rng;

/// Complete graph with i.i.d. uniform(0, 1) weights.
pub fn random_dense_graph(n: usize, seed: u64) -> DissimilarityGraph {
    let mut rng = rng::stream(seed, "random-dense", 0);
    DissimilarityGraph::complete(n, |_, _| rng.random::<f64>()).expect("uniform weights are valid")
}

/// `n` points with i.i.d. uniform(0, 1) coordinates.
pub fn random_vectors(n: usize, dim: usize, metric: Metric, seed: u64) -> Result<PointSet> {
    let mut rng = rng::stream(seed, "random-vectors", 0);
    let vectors = (0..n)
        .map(|_| (0..dim).map(|_| rng.random::<f64>()).collect())
        .collect();
    PointSet::new(vectors, metric)
}
