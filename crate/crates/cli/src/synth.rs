use std::path::PathBuf;
use std::time::Instant;

use clap::Subcommand;
use rac::io::{self, Metric};
use rac::theory::{gen_negative_example, gen_stable_instance, is_stable_tree, MAX_STABLE_POINTS};
use rac::{synth, Linkage};
use serde_json::{json, Value};

use crate::{output, CmdResult};

#[derive(Subcommand, Debug)]
pub enum Command {
    /// 2^n points needing at least 2^(n-1) average-linkage rounds.
    NegativeExample {
        #[arg(long)]
        n: u32,
        /// Vector file.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        props: Option<PathBuf>,
    },
    /// Balanced, well-separated hierarchy on a line.
    Stable {
        #[arg(long)]
        depth: u32,
        #[arg(long, default_value_t = 10.0)]
        separation: f64,
        #[arg(long, default_value_t = 2)]
        branching: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Vector file.
        #[arg(long)]
        out: PathBuf,
        /// Expected tree, dendrogram format.
        #[arg(long)]
        tree: Option<PathBuf>,
        #[arg(long)]
        props: Option<PathBuf>,
    },
    /// Complete graph with uniform(0, 1) weights.
    RandomDense {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Edge list.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        props: Option<PathBuf>,
    },
    /// kNN graph over uniform random vectors.
    RandomKnn {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 8)]
        dim: usize,
        #[arg(long, default_value = "l2")]
        metric: Metric,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Edge list.
        #[arg(long)]
        out: PathBuf,
        /// Also write the vectors.
        #[arg(long)]
        vectors_out: Option<PathBuf>,
        #[arg(long)]
        props: Option<PathBuf>,
    },
}

fn finish(kind: &str, props: Value, path: &Option<PathBuf>, started: Instant) -> CmdResult {
    let mut props = props;
    props["kind"] = kind.into();
    if let Some(path) = path {
        output::write(path, &output::lines([&props]))?;
    }
    let mut record = output::summary("synth", props);
    record["wall_secs"] = started.elapsed().as_secs_f64().into();
    output::print(&record);
    Ok(())
}

pub fn run(cmd: &Command) -> CmdResult {
    let started = Instant::now();
    match cmd {
        Command::NegativeExample { n, out, props } => {
            let points = gen_negative_example(*n)?;
            io::write_vectors(&points, out)?;
            let p = json!({
                "n": n,
                "points": points.len(),
                "height": n,
                "min_rounds": 1u64 << (n - 1),
                "linkage": "average",
            });
            finish("negative-example", p, props, started)
        }
        Command::Stable {
            depth,
            separation,
            branching,
            seed,
            out,
            tree,
            props,
        } => {
            let inst = gen_stable_instance(*branching, *depth, *separation, *seed)?;
            io::write_vectors(&inst.points, out)?;
            if let Some(path) = tree {
                io::write_dendrogram(&inst.tree, path)?;
            }
            let stable = if inst.points.len() <= MAX_STABLE_POINTS {
                json!(is_stable_tree(&inst.graph()?, &inst.tree, Linkage::Average)?)
            } else {
                Value::Null
            };
            let p = json!({
                "points": inst.points.len(),
                "height": depth,
                "expected_rounds": depth,
                "separation": separation,
                "seed": seed,
                "stable": stable,
            });
            finish("stable", p, props, started)
        }
        Command::RandomDense { n, seed, out, props } => {
            let g = synth::random_dense_graph(*n, *seed);
            io::write_edge_list(&g, out)?;
            let p = json!({"n": n, "edges": g.num_edges(), "seed": seed});
            finish("random-dense", p, props, started)
        }
        Command::RandomKnn {
            n,
            k,
            dim,
            metric,
            seed,
            out,
            vectors_out,
            props,
        } => {
            let points = synth::random_vectors(*n, *dim, *metric, *seed)?;
            let g = io::build_knn_graph(&points, *k)?;
            io::write_edge_list(&g, out)?;
            if let Some(path) = vectors_out {
                io::write_vectors(&points, path)?;
            }
            let p = json!({
                "n": n,
                "k": k,
                "dim": dim,
                "metric": metric.to_string(),
                "seed": seed,
                "edges": g.num_edges(),
                "max_degree": g.degrees().into_iter().max().unwrap_or(0),
            });
            finish("random-knn", p, props, started)
        }
    }
}
