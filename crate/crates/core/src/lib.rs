//! Exact hierarchical agglomerative clustering by merging reciprocal
//! nearest neighbors in parallel rounds.
//!
//! * [`hac`] holds the sequential reference algorithm.
//! * [`rac`] is the round-based engine over shared memory.
//! * [`shard`] runs the same rounds over isolated shards that talk only
//!   through batched messages.
//! * [`io`] reads and writes graphs, point sets, dendrograms and stats.
//! * [`theory`] generates and checks the analytical round-count models.

pub mod dendrogram;
pub mod error;
pub mod graph;
pub mod hac;
pub mod io;
pub mod linkage;
pub mod rac;
pub mod rng;
pub mod shard;
pub mod synth;
pub mod theory;

pub use dendrogram::{CanonicalMerge, Dendrogram, MergeDiff, MergeEvent};
pub use error::{Error, Result};
pub use graph::DissimilarityGraph;
pub use hac::{hac_naive, hac_run, hac_run_observed};
pub use io::{
    build_epsilon_graph, build_knn_graph, load_edge_list, read_dendrogram, write_dendrogram, Metric, PointSet,
};
pub use linkage::{
    check_reducibility, direct_linkage, lance_williams_update, ClusterId, DenseWeights, Link, Linkage, PairKey,
    PairWeights,
};
pub use rac::{rac_run, rac_run_with, RacConfig, RacEngine, RacOutput, RoundStats};
pub use shard::{run_sharded, ShardConfig, ShardedOutput};
