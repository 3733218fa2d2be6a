//! Message accounting and determinism of the sharded runtime.

mod common;

use std::collections::BTreeMap;

use common::{random_graph, random_knn};
use proptest::prelude::*;
use rac::shard::{assign_shard, run_sharded, MessageKind, ShardConfig};
use rac::{DissimilarityGraph, Linkage};

fn run(g: &DissimilarityGraph, l: Linkage, shards: usize, workers: usize) -> rac::ShardedOutput {
    let cfg = ShardConfig {
        workers_per_shard: workers,
        check_invariants: true,
        audit: true,
        keep_log: true,
        ..ShardConfig::new(shards)
    };
    run_sharded(g, l, &cfg).unwrap()
}

fn counts(out: &rac::ShardedOutput) -> Vec<(u32, MessageKind, u64, u64, u64)> {
    out.transport
        .rounds
        .iter()
        .flat_map(|r| {
            MessageKind::ALL.into_iter().map(move |k| {
                let c = r.counter(k);
                (r.round, k, c.local, c.remote, c.remote_bytes)
            })
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn message_counts_follow_the_merges(n in 2usize..60, density in 0.05f64..1.0, seed in any::<u64>(), shards in 1usize..9) {
        let g = random_graph(n, density, seed);
        for l in Linkage::ALL {
            let out = run(&g, l, shards, 1);
            let merges = out.dendrogram.len() as u64;
            prop_assert_eq!(out.transport.total(MessageKind::DeleteNotice), merges);
            let split = out.dendrogram.merges().iter()
                .filter(|m| assign_shard(m.left, shards) != assign_shard(m.right, shards))
                .count() as u64;
            let req = out.transport.rounds.iter().map(|r| r.counter(MessageKind::NeighborhoodRequest).remote).sum::<u64>();
            let rep = out.transport.rounds.iter().map(|r| r.counter(MessageKind::NeighborhoodReply).remote).sum::<u64>();
            prop_assert_eq!(req, split);
            prop_assert_eq!(rep, split);
            prop_assert_eq!(out.transport.total(MessageKind::NNQuery), out.transport.total(MessageKind::NNReply));
            if shards == 1 {
                prop_assert_eq!(out.transport.remote_messages(), 0);
                prop_assert_eq!(out.transport.remote_bytes(), 0);
            }
            prop_assert_eq!(out.transport.rounds.len(), out.rounds.len());
        }
    }

    /// Both owners of a pair of simultaneous merges compute the same bits
    /// for the dissimilarity between the two merged clusters.
    #[test]
    fn cross_values_agree_between_owners(n in 2usize..60, density in 0.1f64..1.0, seed in any::<u64>(), shards in 2usize..9) {
        let g = random_graph(n, density, seed);
        for l in Linkage::ALL {
            let out = run(&g, l, shards, 1);
            let mut seen = BTreeMap::new();
            for a in &out.audit {
                let key = (a.round, a.own.min(a.other), a.own.max(a.other));
                if let Some(prev) = seen.insert(key, a.link) {
                    prop_assert_eq!(prev.weight.to_bits(), a.link.weight.to_bits());
                    prop_assert_eq!(prev.pairs, a.link.pairs);
                }
            }
        }
    }
}

#[test]
fn transport_is_deterministic_across_runs_and_workers() {
    let g = random_knn(600, 5, 4, 3);
    for l in Linkage::ALL {
        for s in [2, 4, 16] {
            let base = run(&g, l, s, 1);
            for w in [1, 3] {
                let again = run(&g, l, s, w);
                assert_eq!(counts(&base), counts(&again), "{l} s={s} w={w}");
                assert_eq!(base.log, again.log);
                assert_eq!(base.audit, again.audit);
            }
        }
    }
}

#[test]
fn byte_accounting() {
    let g = random_knn(300, 4, 3, 9);
    let out = run(&g, Linkage::Average, 4, 1);
    let from_log: u64 = out.log.iter().filter(|b| b.src != b.dst).map(|b| b.bytes).sum();
    assert_eq!(from_log, out.transport.remote_bytes());
    let msgs: u64 = out.log.iter().filter(|b| b.src != b.dst).map(|b| b.count).sum();
    assert_eq!(msgs, out.transport.remote_messages());
    assert!(out.transport.remote_bytes() > 0);
}

#[test]
fn shard_assignment() {
    assert_eq!(assign_shard(0, 4), 0);
    assert_eq!(assign_shard(7, 4), 3);
    assert_eq!(assign_shard(7, 1), 0);
}

#[test]
fn zero_shards_is_an_error() {
    let g = random_graph(5, 1.0, 0);
    assert!(run_sharded(&g, Linkage::Single, &ShardConfig::new(0)).is_err());
}
