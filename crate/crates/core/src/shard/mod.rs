//! RAC rounds over isolated shards.
//!
//! Every cluster lives on exactly one shard (`id mod shards`). A shard reads
//! only its own clusters; anything it needs from elsewhere arrives as a
//! [`Message`] delivered at a barrier. Per round:
//!
//! 1. find: query the nn of remote nearest neighbors, then mark reciprocal
//!    pairs;
//! 2. merge: the lower id's shard fetches the higher id's neighborhood,
//!    asks for the merge status of remote neighbors, computes the merged
//!    neighbor map and pushes symmetric updates; the higher id is deleted;
//! 3. nn update: clusters that merged or whose nn merged rescan locally.

pub mod transport;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::time::Instant;

use rayon::prelude::*;

use crate::dendrogram::Dendrogram;
use crate::error::{Error, Result};
use crate::graph::DissimilarityGraph;
use crate::linkage::{ClusterId, Link, Linkage, PairKey};
use crate::rac::kernel::{merged_neighborhood, nearest, NeighborMap, Partner};
use crate::rac::{ClusterState, RoundStats};

pub use transport::{
    BatchRecord, KindCounter, Message, MessageKind, Payload, Phase, RoundTransport, Transport, TransportStats,
};

/// Shard that owns cluster `id`.
pub fn assign_shard(id: ClusterId, num_shards: usize) -> usize {
    id as usize % num_shards
}

#[derive(Clone, Debug)]
pub struct ShardConfig {
    pub shards: usize,
    pub workers_per_shard: usize,
    pub check_invariants: bool,
    /// Record every cross-pair value computed by a merging owner.
    pub audit: bool,
    /// Keep the per-batch transport log.
    pub keep_log: bool,
}

impl ShardConfig {
    pub fn new(shards: usize) -> Self {
        ShardConfig {
            shards,
            workers_per_shard: 1,
            check_invariants: false,
            audit: false,
            keep_log: false,
        }
    }
}

/// A dissimilarity between two pairs merging in the same round, as computed
/// by the owner of `own`.
#[derive(Clone, Debug, PartialEq)]
pub struct CrossAudit {
    pub round: u32,
    pub own: (ClusterId, ClusterId),
    pub other: (ClusterId, ClusterId),
    pub link: Link,
}

#[derive(Clone, Debug)]
pub struct ShardedOutput {
    pub dendrogram: Dendrogram,
    pub rounds: Vec<RoundStats>,
    pub transport: TransportStats,
    pub log: Vec<BatchRecord>,
    pub audit: Vec<CrossAudit>,
}

/// NNReply contents: nn, will_merge, weight to nn.
type RemoteStatus = (Option<ClusterId>, bool, f64);

struct Shard {
    index: usize,
    num_shards: usize,
    linkage: Linkage,
    audit_enabled: bool,
    clusters: BTreeMap<ClusterId, ClusterState>,
    deleted: HashSet<ClusterId>,
    seq: u64,
    outbox: Vec<Message>,
    round: u32,
    // Round-scoped state, cleared by the nn phase.
    remote: HashMap<ClusterId, RemoteStatus>,
    partner: HashMap<ClusterId, Partner>,
    borrowed: HashMap<ClusterId, (u64, NeighborMap)>,
    pairs: Vec<(ClusterId, ClusterId)>,
    touched: HashSet<ClusterId>,
    merged: Vec<(ClusterId, ClusterId, f64, u64)>,
    audit: Vec<CrossAudit>,
    updates_applied: u64,
    deletes_applied: u64,
}

impl Shard {
    fn owner(&self, id: ClusterId) -> usize {
        assign_shard(id, self.num_shards)
    }

    fn is_local(&self, id: ClusterId) -> bool {
        self.owner(id) == self.index
    }

    fn send(&mut self, dst: usize, payload: Payload) {
        self.outbox.push(Message {
            src: self.index,
            dst,
            seq: self.seq,
            payload,
        });
        self.seq += 1;
    }

    fn check_access(&self, id: ClusterId) -> Result<()> {
        if !self.is_local(id) {
            return Err(Error::consistency(format!(
                "shard {} touched cluster {id} owned by shard {}",
                self.index,
                self.owner(id)
            )));
        }
        if self.deleted.contains(&id) {
            return Err(Error::consistency(format!(
                "shard {} got a message for deleted cluster {id}",
                self.index
            )));
        }
        Ok(())
    }

    fn owned(&self, id: ClusterId) -> Result<&ClusterState> {
        self.check_access(id)?;
        self.clusters.get(&id).ok_or(Error::UnknownCluster(id))
    }

    fn owned_mut(&mut self, id: ClusterId) -> Result<&mut ClusterState> {
        self.check_access(id)?;
        self.clusters.get_mut(&id).ok_or(Error::UnknownCluster(id))
    }

    fn unexpected(&self, m: &Message) -> Error {
        Error::consistency(format!(
            "shard {} received unexpected {} from shard {}",
            self.index,
            m.payload.kind(),
            m.src
        ))
    }

    /// Merge status of a neighbor, local or learned from an NNReply.
    fn status(&self, x: ClusterId) -> Option<Partner> {
        if self.is_local(x) {
            return self.partner.get(&x).copied();
        }
        let &(nn, will_merge, weight) = self
            .remote
            .get(&x)
            .expect("status of every remote neighbor was queried");
        will_merge.then(|| Partner {
            id: nn.expect("merging cluster has an nn"),
            weight,
        })
    }

    fn query(&mut self, targets: BTreeSet<(usize, ClusterId)>) {
        for (dst, target) in targets {
            self.send(dst, Payload::NNQuery { target });
        }
    }

    fn find_query(&mut self) {
        let targets: BTreeSet<(usize, ClusterId)> = self
            .clusters
            .values()
            .filter_map(|c| c.nn)
            .filter(|&x| !self.is_local(x))
            .map(|x| (self.owner(x), x))
            .collect();
        self.query(targets);
    }

    fn answer(&mut self, inbox: Vec<Message>) -> Result<()> {
        for m in inbox {
            let Payload::NNQuery { target } = m.payload else {
                return Err(self.unexpected(&m));
            };
            let c = self.owned(target)?;
            let weight = c.nn.map_or(0.0, |x| c.neighbors[&x].weight);
            let reply = Payload::NNReply {
                target,
                nn: c.nn,
                will_merge: c.will_merge,
                weight,
            };
            self.send(m.src, reply);
        }
        Ok(())
    }

    fn take_replies(&mut self, inbox: Vec<Message>) -> Result<()> {
        for m in inbox {
            let Payload::NNReply {
                target,
                nn,
                will_merge,
                weight,
            } = m.payload
            else {
                return Err(self.unexpected(&m));
            };
            self.remote.insert(target, (nn, will_merge, weight));
        }
        Ok(())
    }

    fn mark_merging(&mut self, inbox: Vec<Message>) -> Result<usize> {
        self.take_replies(inbox)?;
        let mut found = Vec::new();
        for c in self.clusters.values() {
            let Some(nn) = c.nn else { continue };
            let back = if self.is_local(nn) {
                self.clusters[&nn].nn
            } else {
                self.remote[&nn].0
            };
            if back == Some(c.id) {
                found.push((c.id, nn, c.neighbors[&nn].weight));
            }
        }
        self.remote.clear();
        for &(id, nn, weight) in &found {
            self.clusters.get_mut(&id).unwrap().will_merge = true;
            self.partner.insert(id, Partner { id: nn, weight });
            if id < nn {
                self.pairs.push((id, nn));
            }
        }
        Ok(self.pairs.len())
    }

    fn request_neighborhoods(&mut self) {
        let remote: Vec<_> = self
            .pairs
            .iter()
            .copied()
            .filter(|&(_, hi)| !self.is_local(hi))
            .collect();
        for (lo, hi) in remote {
            self.send(self.owner(hi), Payload::NeighborhoodRequest { lo, hi });
        }
    }

    fn send_neighborhoods(&mut self, inbox: Vec<Message>) -> Result<()> {
        for m in inbox {
            let Payload::NeighborhoodRequest { lo, hi } = m.payload else {
                return Err(self.unexpected(&m));
            };
            let c = self.owned(hi)?;
            if !c.will_merge || self.partner.get(&hi).map(|p| p.id) != Some(lo) {
                return Err(Error::consistency(format!("{hi} is not merging with {lo}")));
            }
            let mut entries: Vec<(ClusterId, Link)> = c.neighbors.iter().map(|(&x, &l)| (x, l)).collect();
            entries.sort_unstable_by_key(|&(x, _)| x);
            let reply = Payload::NeighborhoodReply {
                lo,
                hi,
                size: c.size,
                entries,
            };
            self.send(m.src, reply);
        }
        Ok(())
    }

    fn hi_neighbors(&self, hi: ClusterId) -> &NeighborMap {
        if self.is_local(hi) {
            &self.clusters[&hi].neighbors
        } else {
            &self.borrowed[&hi].1
        }
    }

    fn query_status(&mut self, inbox: Vec<Message>) -> Result<()> {
        for m in inbox {
            let Payload::NeighborhoodReply { lo, hi, size, entries } = m.payload else {
                return Err(self.unexpected(&m));
            };
            if self.partner.get(&lo).map(|p| p.id) != Some(hi) {
                return Err(Error::consistency(format!("unrequested neighborhood of {hi} for {lo}")));
            }
            self.borrowed.insert(hi, (size, entries.into_iter().collect()));
        }
        let mut targets = BTreeSet::new();
        for &(lo, hi) in &self.pairs {
            for &x in self.clusters[&lo].neighbors.keys().chain(self.hi_neighbors(hi).keys()) {
                if x != lo && x != hi && !self.is_local(x) {
                    targets.insert((self.owner(x), x));
                }
            }
        }
        self.query(targets);
        Ok(())
    }

    fn merge(&mut self, inbox: Vec<Message>) -> Result<()> {
        self.take_replies(inbox)?;
        // A merged map may be keyed by the lower id of a remote pair of which
        // only the higher id was a neighbor. Its status is implied by the
        // partner's status: same pair, same weight.
        let known = self
            .remote
            .iter()
            .filter(|(_, s)| s.1)
            .map(|(&x, &(nn, _, w))| (x, nn.expect("merging cluster has an nn"), w))
            .chain(self.partner.iter().map(|(&x, p)| (x, p.id, p.weight)));
        let implied: Vec<(ClusterId, RemoteStatus)> = known
            .filter(|&(_, y, _)| !self.is_local(y) && !self.remote.contains_key(&y))
            .map(|(x, y, w)| (y, (Some(x), true, w)))
            .collect();
        self.remote.extend(implied);
        let this = &*self;
        let maps: Vec<NeighborMap> = this
            .pairs
            .par_iter()
            .map(|&(lo, hi)| {
                let w = this.partner[&lo].weight;
                merged_neighborhood(
                    this.linkage,
                    lo,
                    hi,
                    w,
                    &this.clusters[&lo].neighbors,
                    this.hi_neighbors(hi),
                    |x| this.status(x),
                )
            })
            .collect();

        let pairs = std::mem::take(&mut self.pairs);
        for (&(lo, hi), map) in pairs.iter().zip(maps) {
            let hi_size = if self.is_local(hi) {
                self.clusters[&hi].size
            } else {
                self.borrowed[&hi].0
            };
            let mut targets: Vec<(ClusterId, Link)> = map.iter().map(|(&x, &l)| (x, l)).collect();
            targets.sort_unstable_by_key(|&(x, _)| x);
            for (x, link) in targets {
                match self.status(x) {
                    None => self.send(
                        self.owner(x),
                        Payload::DissimilarityUpdate {
                            target: x,
                            lo,
                            removed: hi,
                            link,
                        },
                    ),
                    Some(p) if self.audit_enabled => self.audit.push(CrossAudit {
                        round: self.round,
                        own: (lo, hi),
                        other: (x.min(p.id), x.max(p.id)),
                        link,
                    }),
                    Some(_) => {}
                }
            }
            let c = self.clusters.get_mut(&lo).unwrap();
            c.size += hi_size;
            c.neighbors = map;
            let w = self.partner[&lo].weight;
            self.merged.push((lo, hi, w, c.size));
        }
        self.pairs = pairs;

        // The higher id of every pair is deleted by its owner.
        let mut doomed: Vec<(ClusterId, ClusterId)> = self
            .partner
            .iter()
            .filter(|(&id, p)| p.id < id)
            .map(|(&id, p)| (id, p.id))
            .collect();
        doomed.sort_unstable();
        for (hi, lo) in doomed {
            self.clusters.remove(&hi);
            self.deleted.insert(hi);
            self.send(self.owner(lo), Payload::DeleteNotice { hi, lo });
        }
        Ok(())
    }

    fn apply(&mut self, inbox: Vec<Message>) -> Result<()> {
        for m in inbox {
            match m.payload {
                Payload::DissimilarityUpdate {
                    target,
                    lo,
                    removed,
                    link,
                } => {
                    let first_touch = !self.touched.contains(&target);
                    let c = self.owned_mut(target)?;
                    if c.will_merge {
                        return Err(Error::consistency(format!(
                            "update for merging cluster {target} from {lo}"
                        )));
                    }
                    let mut touched = false;
                    if first_touch {
                        if c.nn == Some(lo) || c.nn == Some(removed) {
                            touched = true;
                        } else if let Some(nn) = c.nn {
                            let current = PairKey::new(c.neighbors[&nn].weight, target, nn);
                            if PairKey::new(link.weight, target, lo) < current {
                                c.nn = Some(lo);
                                touched = true;
                            }
                        }
                    }
                    c.neighbors.remove(&removed);
                    c.neighbors.insert(lo, link);
                    if touched {
                        self.touched.insert(target);
                    }
                    self.updates_applied += 1;
                }
                Payload::DeleteNotice { hi, lo } => {
                    self.owned(lo)?;
                    if self.partner.get(&lo).map(|p| p.id) != Some(hi) {
                        return Err(Error::consistency(format!(
                            "delete notice for {hi}, not merged into {lo}"
                        )));
                    }
                    self.deletes_applied += 1;
                }
                _ => return Err(self.unexpected(&m)),
            }
        }
        Ok(())
    }

    fn update_nearest_neighbors(&mut self) -> usize {
        let mut rescans = 0;
        for c in self.clusters.values_mut() {
            if c.will_merge || self.touched.contains(&c.id) {
                c.nn = nearest(c.id, &c.neighbors);
                rescans += 1;
            }
            c.will_merge = false;
        }
        self.partner.clear();
        self.borrowed.clear();
        self.remote.clear();
        self.pairs.clear();
        self.touched.clear();
        rescans
    }
}

/// Runs one sub-phase on every shard, collects outboxes and phase times.
fn step<R, F>(
    shards: &mut [Shard],
    inboxes: Vec<Vec<Message>>,
    transport: &mut Transport,
    phase: usize,
    f: F,
) -> Result<Vec<R>>
where
    R: Send,
    F: Fn(&mut Shard, Vec<Message>) -> Result<R> + Sync + Send,
{
    let results: Vec<(Result<R>, f64)> = shards
        .par_iter_mut()
        .zip(inboxes)
        .map(|(s, inbox)| {
            let t = Instant::now();
            let r = f(s, inbox);
            (r, t.elapsed().as_secs_f64())
        })
        .collect();
    let mut out = Vec::with_capacity(results.len());
    for (i, (r, secs)) in results.into_iter().enumerate() {
        transport.enqueue(std::mem::take(&mut shards[i].outbox));
        transport.add_shard_secs(i, phase, secs);
        out.push(r?);
    }
    Ok(out)
}

const FIND: usize = 0;
const MERGE: usize = 1;
const NN_UPDATE: usize = 2;

/// Runs RAC over `config.shards` simulated shards.
pub fn run_sharded(g: &DissimilarityGraph, linkage: Linkage, config: &ShardConfig) -> Result<ShardedOutput> {
    if config.shards == 0 {
        return Err(Error::contract("at least one shard is required"));
    }
    let threads = config.shards * config.workers_per_shard.max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::consistency(format!("cannot start worker pool: {e}")))?;
    pool.install(|| run_sharded_inner(g, linkage, config))
}

fn run_sharded_inner(g: &DissimilarityGraph, linkage: Linkage, config: &ShardConfig) -> Result<ShardedOutput> {
    let s = config.shards;
    let mut shards: Vec<Shard> = (0..s)
        .map(|index| Shard {
            index,
            num_shards: s,
            linkage,
            audit_enabled: config.audit,
            clusters: BTreeMap::new(),
            deleted: HashSet::new(),
            seq: 0,
            outbox: Vec::new(),
            round: 0,
            remote: HashMap::new(),
            partner: HashMap::new(),
            borrowed: HashMap::new(),
            pairs: Vec::new(),
            touched: HashSet::new(),
            merged: Vec::new(),
            audit: Vec::new(),
            updates_applied: 0,
            deletes_applied: 0,
        })
        .collect();
    for (id, edges) in g.adjacency().into_iter().enumerate() {
        let id = id as ClusterId;
        let neighbors: NeighborMap = edges.into_iter().map(|(x, w)| (x, Link::point(w))).collect();
        let nn = nearest(id, &neighbors);
        shards[assign_shard(id, s)].clusters.insert(
            id,
            ClusterState {
                id,
                size: 1,
                neighbors,
                nn,
                will_merge: false,
            },
        );
    }

    let mut transport = Transport::new(s, config.keep_log);
    let mut dendrogram = Dendrogram::new(g.num_nodes());
    let mut rounds = Vec::new();
    let mut audit = Vec::new();
    let empty = || vec![Vec::new(); s];
    loop {
        let round = rounds.len() as u32 + 1;
        for sh in &mut shards {
            sh.round = round;
        }
        let clusters_before: usize = shards.iter().map(|sh| sh.clusters.len()).sum();

        let t0 = Instant::now();
        step(&mut shards, empty(), &mut transport, FIND, |sh, _| {
            sh.find_query();
            Ok(())
        })?;
        transport.flush_barrier(Phase::FindQuery);
        let inboxes = transport.take_inboxes();
        step(&mut shards, inboxes, &mut transport, FIND, Shard::answer)?;
        transport.flush_barrier(Phase::FindReply);
        let inboxes = transport.take_inboxes();
        let found = step(&mut shards, inboxes, &mut transport, FIND, Shard::mark_merging)?;
        let merges: usize = found.iter().sum();
        let t1 = Instant::now();
        if merges == 0 {
            break;
        }

        step(&mut shards, empty(), &mut transport, MERGE, |sh, _| {
            sh.request_neighborhoods();
            Ok(())
        })?;
        transport.flush_barrier(Phase::NeighborhoodRequest);
        let inboxes = transport.take_inboxes();
        step(&mut shards, inboxes, &mut transport, MERGE, Shard::send_neighborhoods)?;
        transport.flush_barrier(Phase::NeighborhoodReply);
        let inboxes = transport.take_inboxes();
        step(&mut shards, inboxes, &mut transport, MERGE, Shard::query_status)?;
        transport.flush_barrier(Phase::InfoQuery);
        let inboxes = transport.take_inboxes();
        step(&mut shards, inboxes, &mut transport, MERGE, Shard::answer)?;
        transport.flush_barrier(Phase::InfoReply);
        let inboxes = transport.take_inboxes();
        step(&mut shards, inboxes, &mut transport, MERGE, Shard::merge)?;
        transport.flush_barrier(Phase::Update);
        let inboxes = transport.take_inboxes();
        step(&mut shards, inboxes, &mut transport, MERGE, Shard::apply)?;
        let t2 = Instant::now();

        let rescans = step(&mut shards, empty(), &mut transport, NN_UPDATE, |sh, _| {
            Ok(sh.update_nearest_neighbors())
        })?;
        let nn_updates: usize = rescans.iter().sum();
        let t3 = Instant::now();

        let mut merged: Vec<(ClusterId, ClusterId, f64, u64)> = shards
            .iter_mut()
            .flat_map(|sh| std::mem::take(&mut sh.merged))
            .collect();
        merged.sort_unstable_by_key(|m| m.0);
        for &(lo, hi, w, size) in &merged {
            dendrogram.push(round, lo, hi, w, size);
        }
        for sh in &mut shards {
            audit.append(&mut sh.audit);
        }
        check_conservation(&shards, transport.current_round(), merges)?;
        if config.check_invariants {
            check_global_state(&shards)?;
        }

        let mut stats = RoundStats::new(round, clusters_before, merges, nn_updates);
        stats.find_rnn_secs = (t1 - t0).as_secs_f64();
        stats.merge_secs = (t2 - t1).as_secs_f64();
        stats.nn_update_secs = (t3 - t2).as_secs_f64();
        rounds.push(stats);
        transport.end_round();
        for sh in &mut shards {
            sh.updates_applied = 0;
            sh.deletes_applied = 0;
        }
    }
    let (transport, log) = transport.into_parts();
    Ok(ShardedOutput {
        dendrogram,
        rounds,
        transport,
        log,
        audit,
    })
}

fn check_conservation(shards: &[Shard], round: &RoundTransport, merges: usize) -> Result<()> {
    let requests = round.total(MessageKind::NeighborhoodRequest);
    let replies = round.total(MessageKind::NeighborhoodReply);
    if requests != replies {
        return Err(Error::consistency(format!(
            "{requests} neighborhood requests but {replies} replies"
        )));
    }
    let queries = round.total(MessageKind::NNQuery);
    let answers = round.total(MessageKind::NNReply);
    if queries != answers {
        return Err(Error::consistency(format!(
            "{queries} nn queries but {answers} replies"
        )));
    }
    let applied: u64 = shards.iter().map(|s| s.updates_applied).sum();
    let sent = round.total(MessageKind::DissimilarityUpdate);
    if applied != sent {
        return Err(Error::consistency(format!(
            "{sent} dissimilarity updates sent, {applied} applied"
        )));
    }
    let deletes: u64 = shards.iter().map(|s| s.deletes_applied).sum();
    if deletes != merges as u64 || round.total(MessageKind::DeleteNotice) != merges as u64 {
        return Err(Error::consistency(format!(
            "{deletes} delete notices for {merges} merges"
        )));
    }
    Ok(())
}

/// Global view for debugging runs only; the protocol itself never does this.
fn check_global_state(shards: &[Shard]) -> Result<()> {
    let all: HashMap<ClusterId, &ClusterState> = shards
        .iter()
        .flat_map(|s| s.clusters.iter().map(|(&id, c)| (id, c)))
        .collect();
    for c in all.values() {
        for (&x, l) in &c.neighbors {
            let back = all.get(&x).and_then(|o| o.neighbors.get(&c.id));
            match back {
                Some(b) if b.weight.to_bits() == l.weight.to_bits() && b.pairs == l.pairs => {}
                _ => {
                    return Err(Error::consistency(format!(
                        "asymmetric dissimilarity between {} and {x}",
                        c.id
                    )))
                }
            }
        }
        if c.nn != nearest(c.id, &c.neighbors) {
            return Err(Error::consistency(format!("stale nearest neighbor on {}", c.id)));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rac::rac_run;

    fn line(points: &[f64]) -> DissimilarityGraph {
        DissimilarityGraph::complete(points.len(), |a, b| (points[a as usize] - points[b as usize]).abs()).unwrap()
    }

    fn checked(shards: usize) -> ShardConfig {
        ShardConfig {
            check_invariants: true,
            audit: true,
            keep_log: true,
            ..ShardConfig::new(shards)
        }
    }

    #[test]
    fn assign_shard_examples() {
        assert_eq!(assign_shard(7, 1), 0);
        assert_eq!(assign_shard(7, 4), 3);
        assert_eq!(assign_shard(8, 4), 0);
    }

    #[test]
    fn single_shard_matches_rac_without_remote_messages() {
        let g = line(&[0.0, 1.0, 3.0, 7.0, 7.5, 20.0]);
        for l in Linkage::ALL {
            let out = run_sharded(&g, l, &checked(1)).unwrap();
            assert_eq!(out.dendrogram, rac_run(&g, l).dendrogram);
            assert_eq!(out.transport.remote_messages(), 0);
        }
    }

    #[test]
    fn split_pair_fetches_neighborhood_once() {
        // 0 and 1 are mutual nearest neighbors on different shards; 2 and 3
        // are far away and share nothing with the pair this round.
        let g = line(&[0.0, 1.0, 50.0, 52.0]);
        let out = run_sharded(&g, Linkage::Average, &checked(2)).unwrap();
        let r1 = &out.transport.rounds[0];
        // round 1 merges (0, 1) [shards 0|1] and (2, 3) [shards 0|1]
        assert_eq!(out.rounds[0].merges, 2);
        assert_eq!(r1.counter(MessageKind::NeighborhoodRequest).remote, 2);
        assert_eq!(r1.counter(MessageKind::NeighborhoodReply).remote, 2);
        assert_eq!(r1.total(MessageKind::DeleteNotice), 2);
        assert_eq!(out.dendrogram, rac_run(&g, Linkage::Average).dendrogram);
    }

    #[test]
    fn one_split_merge_one_request_reply_pair() {
        // only (0, 1) merges in round 1; 2 is non-merging
        let g = line(&[0.0, 1.0, 2.5]);
        let out = run_sharded(&g, Linkage::Single, &checked(2)).unwrap();
        let r1 = &out.transport.rounds[0];
        assert_eq!(out.rounds[0].merges, 1);
        assert_eq!(r1.total(MessageKind::NeighborhoodRequest), 1);
        assert_eq!(r1.total(MessageKind::NeighborhoodReply), 1);
        assert_eq!(r1.counter(MessageKind::NeighborhoodRequest).remote, 1);
    }

    #[test]
    fn cross_values_agree_between_owners() {
        let g = line(&[0.0, 1.0, 3.0, 3.9, 9.0, 9.2, 14.0, 15.5]);
        for l in Linkage::ALL {
            let out = run_sharded(&g, l, &checked(3)).unwrap();
            assert!(!out.audit.is_empty());
            for a in &out.audit {
                let twin = out
                    .audit
                    .iter()
                    .find(|b| b.round == a.round && b.own == a.other && b.other == a.own)
                    .expect("both owners compute the cross value");
                assert_eq!(a.link.weight.to_bits(), twin.link.weight.to_bits());
                assert_eq!(a.link.pairs, twin.link.pairs);
            }
        }
    }

    #[test]
    fn zero_shards_rejected() {
        assert!(run_sharded(&line(&[0.0, 1.0]), Linkage::Single, &ShardConfig::new(0)).is_err());
    }

    #[test]
    fn foreign_access_is_an_error() {
        let g = line(&[0.0, 1.0, 2.0]);
        let mut shard = Shard {
            index: 0,
            num_shards: 2,
            linkage: Linkage::Single,
            audit_enabled: false,
            clusters: BTreeMap::new(),
            deleted: HashSet::from([2]),
            seq: 0,
            outbox: Vec::new(),
            round: 1,
            remote: HashMap::new(),
            partner: HashMap::new(),
            borrowed: HashMap::new(),
            pairs: Vec::new(),
            touched: HashSet::new(),
            merged: Vec::new(),
            audit: Vec::new(),
            updates_applied: 0,
            deletes_applied: 0,
        };
        assert_eq!(g.num_nodes(), 3);
        assert!(matches!(shard.owned(1), Err(Error::Consistency(_))));
        let late = Message {
            src: 1,
            dst: 0,
            seq: 0,
            payload: Payload::NNQuery { target: 2 },
        };
        assert!(matches!(shard.answer(vec![late]), Err(Error::Consistency(_))));
    }
}
