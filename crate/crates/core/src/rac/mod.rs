//! Reciprocal agglomerative clustering in synchronized rounds.
//!
//! Each round finds every pair of clusters that are each other's nearest
//! neighbor, merges all of them at once, and repairs the cached nearest
//! neighbors that the merges invalidated. The three phases are separated by
//! barriers; inside a phase, work is split over cluster-id ranges.

pub mod kernel;

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dendrogram::Dendrogram;
use crate::error::{Error, Result};
use crate::graph::DissimilarityGraph;
use crate::linkage::{ClusterId, Link, Linkage, PairKey};

pub use kernel::{merged_neighborhood, nearest, NeighborMap, Partner};

#[derive(Clone, Debug, PartialEq)]
pub struct ClusterState {
    pub id: ClusterId,
    pub size: u64,
    pub neighbors: NeighborMap,
    pub nn: Option<ClusterId>,
    pub will_merge: bool,
}

impl ClusterState {
    fn singleton(id: ClusterId, edges: &[(ClusterId, f64)]) -> Self {
        let neighbors: NeighborMap = edges.iter().map(|&(x, w)| (x, Link::point(w))).collect();
        let nn = nearest(id, &neighbors);
        ClusterState {
            id,
            size: 1,
            neighbors,
            nn,
            will_merge: false,
        }
    }

    fn nn_key(&self) -> Option<PairKey> {
        self.nn.map(|x| PairKey::new(self.neighbors[&x].weight, self.id, x))
    }
}

/// Per-round counters. `alpha` is the fraction of clusters that merged,
/// `beta_per_merge` the nearest-neighbor rescans per merge.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundStats {
    pub round: u32,
    pub clusters_before: usize,
    pub merges: usize,
    pub alpha: f64,
    pub nn_updates: usize,
    pub beta_per_merge: f64,
    #[serde(default)]
    pub find_rnn_secs: f64,
    #[serde(default)]
    pub merge_secs: f64,
    #[serde(default)]
    pub nn_update_secs: f64,
}

impl RoundStats {
    pub(crate) fn new(round: u32, clusters_before: usize, merges: usize, nn_updates: usize) -> Self {
        RoundStats {
            round,
            clusters_before,
            merges,
            alpha: if clusters_before == 0 {
                0.0
            } else {
                2.0 * merges as f64 / clusters_before as f64
            },
            nn_updates,
            beta_per_merge: if merges == 0 {
                0.0
            } else {
                nn_updates as f64 / merges as f64
            },
            find_rnn_secs: 0.0,
            merge_secs: 0.0,
            nn_update_secs: 0.0,
        }
    }

    /// Fraction of clusters removed by this round's merges.
    pub fn merge_fraction(&self) -> f64 {
        self.alpha / 2.0
    }
}

#[derive(Clone, Debug)]
pub struct RacConfig {
    /// Worker threads per phase.
    pub workers: usize,
    /// Verify map symmetry and nn caches after every round.
    pub check_invariants: bool,
}

impl Default for RacConfig {
    fn default() -> Self {
        RacConfig {
            workers: 1,
            check_invariants: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RacOutput {
    pub dendrogram: Dendrogram,
    pub rounds: Vec<RoundStats>,
}

/// The live clustering state of one run.
pub struct RacEngine {
    linkage: Linkage,
    clusters: Vec<Option<ClusterState>>,
    partner: Vec<Option<Partner>>,
    active: usize,
    workers: usize,
}

impl RacEngine {
    pub fn new(g: &DissimilarityGraph, linkage: Linkage) -> Self {
        let clusters: Vec<Option<ClusterState>> = g
            .adjacency()
            .iter()
            .enumerate()
            .map(|(id, edges)| Some(ClusterState::singleton(id as ClusterId, edges)))
            .collect();
        RacEngine {
            linkage,
            partner: vec![None; clusters.len()],
            active: clusters.len(),
            clusters,
            workers: 1,
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers.max(1);
        self
    }

    pub fn active_clusters(&self) -> usize {
        self.active
    }

    pub fn cluster(&self, id: ClusterId) -> Option<&ClusterState> {
        self.clusters.get(id as usize).and_then(Option::as_ref)
    }

    pub fn clusters(&self) -> impl Iterator<Item = &ClusterState> {
        self.clusters.iter().flatten()
    }

    fn live(&self, id: ClusterId) -> &ClusterState {
        self.clusters[id as usize].as_ref().expect("live cluster")
    }

    /// Marks every cluster whose nearest neighbor points back at it and
    /// returns the merging pairs as `(lower id, higher id)`, sorted.
    pub fn find_reciprocal_nearest_neighbors(&mut self) -> Vec<(ClusterId, ClusterId)> {
        if self.active <= 1 {
            return Vec::new();
        }
        let clusters = &self.clusters;
        let matched: Vec<Option<ClusterId>> = clusters
            .par_iter()
            .map(|c| {
                let c = c.as_ref()?;
                let nn = c.nn?;
                let back = clusters[nn as usize].as_ref().and_then(|x| x.nn);
                (back == Some(c.id)).then_some(nn)
            })
            .collect();
        let mut pairs = Vec::new();
        for (id, nn) in matched.into_iter().enumerate() {
            let Some(nn) = nn else { continue };
            let c = self.clusters[id].as_mut().unwrap();
            c.will_merge = true;
            let weight = c.neighbors[&nn].weight;
            self.partner[id] = Some(Partner { id: nn, weight });
            if (id as ClusterId) < nn {
                pairs.push((id as ClusterId, nn));
            }
        }
        pairs
    }

    /// Merges every pair found this round: the lower id absorbs the higher
    /// one, neighbor maps are rebuilt, and non-merging neighbors receive the
    /// symmetric update.
    pub fn update_cluster_dissimilarities(&mut self, pairs: &[(ClusterId, ClusterId)]) -> Result<()> {
        for &(lo, hi) in pairs {
            let ok = lo < hi
                && self.partner[lo as usize].map(|p| p.id) == Some(hi)
                && self.partner[hi as usize].map(|p| p.id) == Some(lo);
            if !ok {
                return Err(Error::consistency(format!(
                    "({lo}, {hi}) is not a reciprocal pair of this round"
                )));
            }
        }
        let linkage = self.linkage;
        let partner = &self.partner;
        let clusters = &self.clusters;
        let merged: Vec<NeighborMap> = pairs
            .par_iter()
            .map(|&(lo, hi)| {
                let a = clusters[lo as usize].as_ref().unwrap();
                let b = clusters[hi as usize].as_ref().unwrap();
                let w = partner[lo as usize].unwrap().weight;
                merged_neighborhood(linkage, lo, hi, w, &a.neighbors, &b.neighbors, |x| partner[x as usize])
            })
            .collect();

        let mut inbox: Vec<(ClusterId, ClusterId, ClusterId, Link)> = pairs
            .par_iter()
            .zip(merged.par_iter())
            .flat_map_iter(|(&(lo, hi), map)| {
                map.iter()
                    .filter(|(&x, _)| partner[x as usize].is_none())
                    .map(move |(&x, &l)| (x, lo, hi, l))
            })
            .collect();
        inbox.par_sort_unstable_by_key(|&(x, lo, _, _)| (x, lo));

        for (&(lo, hi), map) in pairs.iter().zip(merged) {
            let gone = self.clusters[hi as usize].take().unwrap();
            let c = self.clusters[lo as usize].as_mut().unwrap();
            c.size += gone.size;
            c.neighbors = map;
            self.active -= 1;
        }

        // Symmetric updates: each worker owns a contiguous id range.
        let chunk = self.clusters.len().div_ceil(self.workers).max(1);
        let inbox = &inbox;
        self.clusters.par_chunks_mut(chunk).enumerate().for_each(|(ci, slots)| {
            let start = (ci * chunk) as ClusterId;
            let end = start + slots.len() as ClusterId;
            let from = inbox.partition_point(|u| u.0 < start);
            let to = inbox.partition_point(|u| u.0 < end);
            for &(x, lo, hi, l) in &inbox[from..to] {
                let c = slots[(x - start) as usize].as_mut().expect("update target is live");
                c.neighbors.remove(&hi);
                c.neighbors.insert(lo, l);
                // Exact ties can make the merged cluster the new nearest
                // neighbor of a cluster whose nn did not merge.
                let stays = c.nn.is_some_and(|nn| partner[nn as usize].is_none());
                if stays && Some(PairKey::new(l.weight, x, lo)) < c.nn_key() {
                    c.nn = Some(lo);
                }
            }
        });
        Ok(())
    }

    /// Rescans the neighbor map of every cluster that merged or whose nearest
    /// neighbor merged. Returns the number of rescans.
    pub fn update_nearest_neighbors(&mut self) -> usize {
        let partner = &self.partner;
        let rescans = self
            .clusters
            .par_iter_mut()
            .flatten()
            .map(|c| {
                let stale = c.will_merge || c.nn.is_some_and(|nn| partner[nn as usize].is_some());
                c.will_merge = false;
                if stale {
                    c.nn = nearest(c.id, &c.neighbors);
                }
                stale as usize
            })
            .sum();
        self.partner.par_iter_mut().for_each(|p| *p = None);
        rescans
    }

    /// Checks that neighbor maps are symmetric (bit-identical values) and
    /// every cached nn is the argmin of its map.
    pub fn check_invariants(&self) -> Result<()> {
        self.clusters.par_iter().flatten().try_for_each(|c| {
            for (&x, l) in &c.neighbors {
                let Some(other) = self.cluster(x) else {
                    return Err(Error::consistency(format!("{} lists deleted cluster {x}", c.id)));
                };
                match other.neighbors.get(&c.id) {
                    Some(back) if back.weight.to_bits() == l.weight.to_bits() && back.pairs == l.pairs => {}
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
            if c.will_merge {
                return Err(Error::consistency(format!("will_merge left set on {}", c.id)));
            }
            Ok(())
        })
    }

    /// Runs rounds until no reciprocal pair remains.
    pub fn run(&mut self, check_invariants: bool) -> Result<RacOutput> {
        let mut dendrogram = Dendrogram::new(self.clusters.len());
        let mut rounds = Vec::new();
        loop {
            let round = rounds.len() as u32 + 1;
            let clusters_before = self.active;
            let t0 = Instant::now();
            let pairs = self.find_reciprocal_nearest_neighbors();
            let t1 = Instant::now();
            if pairs.is_empty() {
                break;
            }
            for &(lo, hi) in &pairs {
                let w = self.partner[lo as usize].unwrap().weight;
                let size = self.live(lo).size + self.live(hi).size;
                dendrogram.push(round, lo, hi, w, size);
            }
            self.update_cluster_dissimilarities(&pairs)?;
            let t2 = Instant::now();
            let nn_updates = self.update_nearest_neighbors();
            let t3 = Instant::now();
            if check_invariants {
                self.check_invariants()?;
            }
            let mut stats = RoundStats::new(round, clusters_before, pairs.len(), nn_updates);
            stats.find_rnn_secs = (t1 - t0).as_secs_f64();
            stats.merge_secs = (t2 - t1).as_secs_f64();
            stats.nn_update_secs = (t3 - t2).as_secs_f64();
            log::debug!(
                "round {round}: {} clusters, {} merges, {nn_updates} nn updates",
                clusters_before,
                pairs.len()
            );
            rounds.push(stats);
        }
        Ok(RacOutput { dendrogram, rounds })
    }
}

/// Runs RAC single-threaded without invariant checks.
pub fn rac_run(g: &DissimilarityGraph, linkage: Linkage) -> RacOutput {
    rac_run_with(g, linkage, &RacConfig::default()).expect("unchecked run cannot fail")
}

pub fn rac_run_with(g: &DissimilarityGraph, linkage: Linkage, config: &RacConfig) -> Result<RacOutput> {
    let workers = config.workers.max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::consistency(format!("cannot start worker pool: {e}")))?;
    pool.install(|| {
        let mut engine = RacEngine::new(g, linkage).with_workers(workers);
        engine.run(config.check_invariants)
    })
}
