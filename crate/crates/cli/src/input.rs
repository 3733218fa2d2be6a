use std::path::PathBuf;

use clap::Args;
use rac::io::{self, Metric};
use rac::DissimilarityGraph;

use crate::Exit;

/// Where the graph comes from: an edge list, or vectors plus a kNN or
/// epsilon rule.
#[derive(Args, Debug)]
pub struct GraphArgs {
    /// Edge list, `u<TAB>v<TAB>w` per line.
    #[arg(long, required_unless_present = "vectors", conflicts_with = "vectors")]
    pub edges: Option<PathBuf>,
    /// Vectors, `id<TAB>c1,c2,...` per line.
    #[arg(long)]
    pub vectors: Option<PathBuf>,
    /// Build a k-nearest-neighbor graph from the vectors.
    #[arg(long, conflicts_with = "eps")]
    pub knn: Option<usize>,
    /// Build an epsilon-ball graph from the vectors.
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long, default_value = "l2")]
    pub metric: Metric,
}

impl GraphArgs {
    pub fn load(&self) -> Result<DissimilarityGraph, Exit> {
        if let Some(path) = &self.edges {
            if self.knn.is_some() || self.eps.is_some() {
                return Err(Exit::usage("--knn and --eps apply to --vectors input only"));
            }
            return Ok(io::load_edge_list(path)?);
        }
        let path = self.vectors.as_ref().expect("clap requires one input");
        let points = io::load_vectors(path, self.metric)?;
        let g = match (self.knn, self.eps) {
            (Some(k), None) => io::build_knn_graph(&points, k)?,
            (None, Some(eps)) => io::build_epsilon_graph(&points, eps)?,
            _ => return Err(Exit::usage("--vectors needs exactly one of --knn or --eps")),
        };
        log::info!("built graph with {} nodes, {} edges", g.num_nodes(), g.num_edges());
        Ok(g)
    }
}
