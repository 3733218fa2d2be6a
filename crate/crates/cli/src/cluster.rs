use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Args as ClapArgs;
use rac::shard::{run_sharded, ShardConfig};
use rac::{io, rac_run_with, Dendrogram, Linkage, RacConfig, RoundStats};
use serde_json::{json, Value};

use crate::input::GraphArgs;
use crate::{output, CmdResult};

#[derive(ClapArgs, Debug)]
pub struct Args {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long, default_value = "average")]
    pub linkage: Linkage,
    /// Number of shards; more than one selects the sharded runtime.
    #[arg(long, default_value_t = 1)]
    pub shards: usize,
    /// Worker threads (per shard when sharded).
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    /// Dendrogram output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-round stats (JSON lines, run-independent fields only).
    #[arg(long)]
    pub stats: Option<PathBuf>,
    /// Per-round stats with phase wall times, then the summary record.
    #[arg(long)]
    pub timings: Option<PathBuf>,
    /// Per-round message counters of a sharded run (JSON lines).
    #[arg(long)]
    pub transport: Option<PathBuf>,
    /// Per-batch transport log of a sharded run (TSV).
    #[arg(long)]
    pub transport_log: Option<PathBuf>,
    /// Cut the hierarchy into this many flat clusters.
    #[arg(long, requires = "flat_out")]
    pub flat: Option<usize>,
    /// Flat clustering output, `point<TAB>cluster` per line.
    #[arg(long, requires = "flat")]
    pub flat_out: Option<PathBuf>,
    /// Check engine invariants after every round.
    #[arg(long)]
    pub check_invariants: bool,
}

pub fn run(args: &Args) -> CmdResult {
    let t0 = Instant::now();
    let g = args.graph.load()?;
    let load_secs = t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let sharded = args.shards > 1 || args.transport.is_some() || args.transport_log.is_some();
    let (dendrogram, rounds, transport) = if sharded {
        let cfg = ShardConfig {
            workers_per_shard: args.workers,
            check_invariants: args.check_invariants,
            keep_log: args.transport_log.is_some(),
            ..ShardConfig::new(args.shards)
        };
        let out = run_sharded(&g, args.linkage, &cfg)?;
        if let Some(path) = &args.transport {
            let records: Vec<Value> = out.transport.rounds.iter().map(|r| json!(r)).collect();
            output::write(path, &output::lines(&records))?;
        }
        if let Some(path) = &args.transport_log {
            let mut text = String::from("#round\tphase\tsrc\tdst\tkind\tcount\tbytes\n");
            for rec in &out.log {
                writeln!(text, "{}", rec.to_line()).unwrap();
            }
            output::write(path, &text)?;
        }
        let totals = json!({
            "remote_messages": out.transport.remote_messages(),
            "remote_bytes": out.transport.remote_bytes(),
        });
        (out.dendrogram, out.rounds, Some(totals))
    } else {
        let cfg = RacConfig {
            workers: args.workers,
            check_invariants: args.check_invariants,
        };
        let out = rac_run_with(&g, args.linkage, &cfg)?;
        (out.dendrogram, out.rounds, None)
    };
    let cluster_secs = t1.elapsed().as_secs_f64();

    if let Some(path) = &args.out {
        io::write_dendrogram(&dendrogram, path)?;
    }
    if let Some(path) = &args.stats {
        io::write_stats(&rounds, path)?;
    }
    if let (Some(k), Some(path)) = (args.flat, &args.flat_out) {
        write_flat(&dendrogram, k, path)?;
    }

    let record = summary(args, &g, &dendrogram, &rounds, transport, load_secs, cluster_secs);
    if let Some(path) = &args.timings {
        let mut text = io::stats_with_timings_to_string(&rounds);
        text.push_str(&output::lines([&record]));
        output::write(path, &text)?;
    }
    output::print(&record);
    Ok(())
}

fn write_flat(d: &Dendrogram, k: usize, path: &Path) -> CmdResult {
    let blocks = d.flat_clusters(k)?;
    let mut label = vec![0usize; d.n_points()];
    for (c, block) in blocks.iter().enumerate() {
        for &p in block {
            label[p as usize] = c;
        }
    }
    let mut text = String::new();
    for (p, c) in label.iter().enumerate() {
        writeln!(text, "{p}\t{c}").unwrap();
    }
    output::write(path, &text)
}

fn summary(
    args: &Args,
    g: &rac::DissimilarityGraph,
    d: &Dendrogram,
    rounds: &[RoundStats],
    transport: Option<Value>,
    load_secs: f64,
    cluster_secs: f64,
) -> Value {
    let mut fields = json!({
        "n": g.num_nodes(),
        "edges": g.num_edges(),
        "linkage": args.linkage.name(),
        "shards": args.shards,
        "workers": args.workers,
        "rounds": rounds.len(),
        "merges": d.len(),
        "roots": d.num_roots(),
        "height": d.height(),
        "load_secs": load_secs,
        "cluster_secs": cluster_secs,
        "phase_secs": output::phase_secs(rounds),
    });
    if let (Some(Value::Object(t)), Value::Object(f)) = (transport, &mut fields) {
        f.extend(t);
    }
    output::summary("cluster", fields)
}
