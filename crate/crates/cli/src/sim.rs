use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Subcommand, ValueEnum};
use rac::theory::{
    decay_bound, merge_prob_exhaustive, merge_prob_formula, merge_prob_plus_denominator, sim_bounded_degree_graph,
    sim_grid_single_linkage, simulate_decay, BoundedDegreeConfig, ClusterPartitionGraph, GraphShape, Summary, ZSampler,
};
use serde_json::{json, Value};

use crate::{output, CmdResult, Exit};

/// Slack on the absorption-time bound.
const DECAY_SLACK: f64 = 1.05;
/// Merges per cluster expected in the grid model.
const GRID_MIN_FRACTION: f64 = 0.30;

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Shape {
    Triangle,
    Path,
    Cycle,
    Star,
    Complete,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Absorption time of X <- X - Z.
    Decay {
        #[arg(long, default_value_t = 1024)]
        n: u64,
        #[arg(long, default_value = "uniform")]
        sampler: ZSampler,
        /// Alpha used for the bound; at most the sampler's guaranteed alpha.
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Single linkage on sorted uniform points.
    Grid {
        #[arg(long, default_value_t = 1024)]
        n: usize,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Single linkage on random bounded-degree graphs.
    BoundedDegree {
        #[arg(long, default_value_t = 4096)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        d: usize,
        #[arg(long, default_value = "regular")]
        shape: GraphShape,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact merge probabilities against the closed form.
    MergeProb {
        #[arg(long, value_enum, default_value = "triangle")]
        shape: Shape,
        /// Clusters (path, cycle, complete) or leaves (star).
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Writes records plus the summary to `out`, prints the summary with wall
/// time, and fails with exit code 2 if `failures` is non-empty.
fn finish(
    records: &[Value],
    summary: Value,
    failures: Vec<String>,
    out: &Option<PathBuf>,
    started: Instant,
) -> CmdResult {
    let mut summary = output::summary("sim", summary);
    summary["passed"] = failures.is_empty().into();
    if let Some(path) = out {
        let mut text = output::lines(records);
        text.push_str(&output::lines([&summary]));
        output::write(path, &text)?;
    }
    summary["wall_secs"] = started.elapsed().as_secs_f64().into();
    output::print(&summary);
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Exit::assertion(failures.join("; ")))
    }
}

fn by_round_records(by_round: &[(usize, f64)]) -> Vec<Value> {
    by_round
        .iter()
        .enumerate()
        .map(|(r, &(runs, f))| json!({"round": r + 1, "runs": runs, "mean_merge_fraction": f}))
        .collect()
}

pub fn run(cmd: &Command) -> CmdResult {
    let started = Instant::now();
    match cmd {
        Command::Decay {
            n,
            sampler,
            alpha,
            trials,
            seed,
            out,
        } => {
            let alpha = alpha.unwrap_or(sampler.alpha());
            if !(alpha > 0.0 && alpha <= sampler.alpha()) {
                return Err(Exit::usage(format!(
                    "--alpha must be in (0, {}] for the {sampler} sampler",
                    sampler.alpha()
                )));
            }
            let s = *sampler;
            let taus = simulate_decay(*n, *trials, *seed, |x, rng| s.sample(x, rng))?;
            let mut hist: BTreeMap<u64, usize> = BTreeMap::new();
            for &t in &taus {
                *hist.entry(t).or_default() += 1;
            }
            let records: Vec<Value> = hist.iter().map(|(t, c)| json!({"tau": t, "count": c})).collect();
            let tau = Summary::of(&taus.iter().map(|&t| t as f64).collect::<Vec<_>>());
            let bound = decay_bound(*n, alpha);
            let mut failures = Vec::new();
            if tau.mean > bound * DECAY_SLACK {
                failures.push(format!("mean tau {} exceeds bound {bound} x {DECAY_SLACK}", tau.mean));
            }
            let summary = json!({
                "model": "decay", "n": n, "sampler": sampler.to_string(), "alpha": alpha,
                "trials": trials, "seed": seed, "tau": tau, "bound": bound,
            });
            finish(&records, summary, failures, out, started)
        }
        Command::Grid { n, trials, seed, out } => {
            let r = sim_grid_single_linkage(*n, *trials, *seed)?;
            let bound = (*n as f64).ln() / 1.5f64.ln();
            let mut failures = Vec::new();
            if r.mean_merge_fraction < GRID_MIN_FRACTION {
                failures.push(format!(
                    "mean merge fraction {:.4} below {GRID_MIN_FRACTION}",
                    r.mean_merge_fraction
                ));
            }
            if r.rounds.mean > bound * DECAY_SLACK {
                failures.push(format!(
                    "mean rounds {} above {:.2}",
                    r.rounds.mean,
                    bound * DECAY_SLACK
                ));
            }
            let summary = json!({
                "model": "grid", "n": n, "trials": trials, "seed": seed, "rounds": r.rounds,
                "rounds_bound": bound, "mean_merge_fraction": r.mean_merge_fraction,
                "first_round_fraction": r.first_round_fraction,
            });
            finish(&by_round_records(&r.fraction_by_round), summary, failures, out, started)
        }
        Command::BoundedDegree {
            n,
            d,
            shape,
            trials,
            seed,
            out,
        } => {
            let r = sim_bounded_degree_graph(&BoundedDegreeConfig {
                n: *n,
                d: *d,
                shape: *shape,
                trials: *trials,
                seed: *seed,
            })?;
            let mut failures = Vec::new();
            if r.mean_merge_fraction < r.fraction_floor || r.min_round_fraction < r.fraction_floor {
                failures.push(format!(
                    "merge fraction (mean {:.4}, worst round {:.4}) below {:.4}",
                    r.mean_merge_fraction, r.min_round_fraction, r.fraction_floor
                ));
            }
            if r.rounds.mean > r.rounds_bound {
                failures.push(format!(
                    "mean rounds {} above bound {:.2}",
                    r.rounds.mean, r.rounds_bound
                ));
            }
            let summary = json!({
                "model": "bounded-degree", "n": n, "d": r.d, "shape": shape.to_string(),
                "trials": trials, "seed": seed, "rounds": r.rounds, "rounds_bound": r.rounds_bound,
                "mean_merge_fraction": r.mean_merge_fraction, "min_round_fraction": r.min_round_fraction,
                "fraction_floor": r.fraction_floor,
            });
            finish(&by_round_records(&r.fraction_by_round), summary, failures, out, started)
        }
        Command::MergeProb { shape, k, out } => {
            let g = match shape {
                Shape::Triangle => ClusterPartitionGraph::triangle(),
                Shape::Path => ClusterPartitionGraph::path(*k),
                Shape::Cycle => ClusterPartitionGraph::cycle(*k),
                Shape::Star => ClusterPartitionGraph::star(*k),
                Shape::Complete => ClusterPartitionGraph::complete(*k),
            };
            let table = merge_prob_exhaustive(&g)?;
            let mut records = Vec::new();
            let mut failures = Vec::new();
            for (&(i, j), &p) in &table.pairs {
                let (dij, di, dj) = (g.d_ij(i, j), g.d_i(i), g.d_i(j));
                let formula = merge_prob_formula(dij, di, dj)?;
                let plus = merge_prob_plus_denominator(dij, di, dj)?;
                if formula != p {
                    failures.push(format!("pair ({i}, {j}): enumeration {p}, formula {formula}"));
                }
                println!("P({i},{j}) = {p}");
                records.push(json!({
                    "i": i, "j": j, "d_ij": dij, "d_i": di, "d_j": dj,
                    "exhaustive": p.to_string(), "formula": formula.to_string(),
                    "plus_denominator": plus.to_string(),
                }));
            }
            let summary = json!({
                "model": "merge-prob", "shape": format!("{shape:?}").to_lowercase(), "k": k,
                "orderings": table.orderings, "expected_merges": table.expected_merges().to_string(),
            });
            finish(&records, summary, failures, out, started)
        }
    }
}
