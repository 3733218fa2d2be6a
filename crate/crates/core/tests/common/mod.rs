#![allow(dead_code)]

use rac::io::{build_knn_graph, Metric};
use rac::{rng, synth, ClusterId, DissimilarityGraph};
use rand::Rng;

/// Random graph where each pair is present with probability `density`,
/// weights uniform(0, 1).
pub fn random_graph(n: usize, density: f64, seed: u64) -> DissimilarityGraph {
    let mut rng = rng::stream(seed, "test-graph", 0);
    let mut g = DissimilarityGraph::new(n);
    for a in 0..n as ClusterId {
        for b in a + 1..n as ClusterId {
            if rng.random::<f64>() < density {
                g.add_edge(a, b, rng.random::<f64>()).unwrap();
            }
        }
    }
    g
}

pub fn random_knn(n: usize, k: usize, dim: usize, seed: u64) -> DissimilarityGraph {
    let pts = synth::random_vectors(n, dim, Metric::L2, seed).unwrap();
    build_knn_graph(&pts, k).unwrap()
}

/// Merge dissimilarities in merge order must never decrease.
pub fn is_monotone(d: &rac::Dendrogram) -> bool {
    d.merges()
        .windows(2)
        .all(|w| w[1].dissimilarity >= w[0].dissimilarity - 1e-12 * w[0].dissimilarity.abs().max(1.0))
}
