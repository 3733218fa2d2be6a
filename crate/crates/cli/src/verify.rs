use std::time::Instant;

use clap::Args as ClapArgs;
use rac::shard::{run_sharded, ShardConfig};
use rac::{hac_run, rac_run_with, Dendrogram, Linkage, MergeDiff, RacConfig};
use serde_json::json;

use crate::input::GraphArgs;
use crate::{output, CmdResult, Exit};

const MAX_DENSE: usize = 10_000;
const MAX_SPARSE: usize = 100_000;

#[derive(ClapArgs, Debug)]
pub struct Args {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long, default_value = "average")]
    pub linkage: Linkage,
    /// Also run the sharded runtime with this many shards.
    #[arg(long)]
    pub shards: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    /// Test hook: drop the last RAC merge before comparing.
    #[arg(long, hide = true)]
    pub corrupt: bool,
}

fn leaves(set: &[rac::ClusterId]) -> String {
    if set.len() <= 8 {
        return format!("{set:?}");
    }
    format!("[{}, {}, {}, ... {} points]", set[0], set[1], set[2], set.len())
}

fn describe(diff: &MergeDiff, left: &str, right: &str) -> String {
    let (side, m) = match diff {
        MergeDiff::OnlyLeft(m) => (left, m),
        MergeDiff::OnlyRight(m) => (right, m),
    };
    format!(
        "first differing merge, only in {side}: {} + {} at {:e}",
        leaves(&m.lo),
        leaves(&m.hi),
        m.dissimilarity
    )
}

pub fn run(args: &Args) -> CmdResult {
    let g = args.graph.load()?;
    let n = g.num_nodes();
    if (g.is_dense() && n > MAX_DENSE) || n > MAX_SPARSE {
        return Err(Exit::usage(format!(
            "{n} nodes is too large for the sequential reference (limits: {MAX_DENSE} dense, \
             {MAX_SPARSE} sparse); verify a smaller or sparser instance"
        )));
    }

    let t = Instant::now();
    let hac = hac_run(&g, args.linkage);
    let hac_secs = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let cfg = RacConfig {
        workers: args.workers,
        check_invariants: true,
    };
    let rac = rac_run_with(&g, args.linkage, &cfg)?;
    let rac_secs = t.elapsed().as_secs_f64();

    let mut rac_tree = rac.dendrogram;
    if args.corrupt && !rac_tree.is_empty() {
        let mut merges = rac_tree.merges().to_vec();
        merges.pop();
        rac_tree = Dendrogram::from_merges(n, merges)?;
    }
    let mut candidates = vec![("rac", rac_tree)];
    if let Some(s) = args.shards {
        let cfg = ShardConfig {
            workers_per_shard: args.workers,
            check_invariants: true,
            ..ShardConfig::new(s)
        };
        candidates.push(("sharded", run_sharded(&g, args.linkage, &cfg)?.dendrogram));
    }

    let mut gap: f64 = 0.0;
    for (name, tree) in &candidates {
        if let Some(diff) = hac.first_difference(tree) {
            let msg = describe(&diff, "hac", name);
            println!("{msg}");
            return Err(Exit::mismatch(format!("{name} differs from hac: {msg}")));
        }
        gap = gap.max(hac.max_relative_gap(tree));
    }

    output::print(&output::summary(
        "verify",
        json!({
            "n": n,
            "edges": g.num_edges(),
            "linkage": args.linkage.name(),
            "merges": hac.len(),
            "rounds": rac.rounds.len(),
            "identical": true,
            "compared": candidates.iter().map(|c| c.0).collect::<Vec<_>>(),
            "max_relative_gap": gap,
            "hac_secs": hac_secs,
            "rac_secs": rac_secs,
            "phase_secs": output::phase_secs(&rac.rounds),
        }),
    ));
    Ok(())
}
