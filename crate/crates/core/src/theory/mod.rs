//! Generators, checkers and simulators for the round-count models.

mod bounded;
mod decay;
mod grid;
mod merge_prob;
mod negative;
mod stable;

pub use bounded::{sim_bounded_degree_graph, BoundedDegreeConfig, BoundedDegreeReport, GraphShape};
pub use decay::{decay_bound, sim_decay_process, simulate_decay, DecayConfig, DecayReport, ZSampler};
pub use grid::{sim_grid_single_linkage, GridReport};
pub use merge_prob::{
    merge_prob_exhaustive, merge_prob_formula, merge_prob_plus_denominator, ClusterPartitionGraph, MergeProbTable,
    MAX_ENUMERATED_EDGES,
};
pub use negative::{gen_negative_example, verify_negative_example, NegativeReport, MAX_NEGATIVE_N, MAX_VERIFIED_N};
pub use stable::{gen_stable_instance, is_stable_tree, StableInstance, MAX_STABLE_POINTS};

use serde::Serialize;

use crate::graph::DissimilarityGraph;
use crate::linkage::Linkage;
use crate::rac::RacEngine;

/// Mean and nearest-rank quantiles of a sample.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub p50: f64,
    pub p99: f64,
    pub min: f64,
    pub max: f64,
}

impl Summary {
    pub fn of(samples: &[f64]) -> Summary {
        if samples.is_empty() {
            return Summary {
                count: 0,
                mean: f64::NAN,
                p50: f64::NAN,
                p99: f64::NAN,
                min: f64::NAN,
                max: f64::NAN,
            };
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let rank = |q: f64| sorted[((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len()) - 1];
        Summary {
            count: sorted.len(),
            mean: samples.iter().sum::<f64>() / samples.len() as f64,
            p50: rank(0.5),
            p99: rank(0.99),
            min: sorted[0],
            max: sorted[sorted.len() - 1],
        }
    }
}

/// One round of a model run: clusters with at least one neighbor, and
/// merges.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ModelRound {
    pub active: usize,
    pub merges: usize,
}

impl ModelRound {
    pub fn fraction(&self) -> f64 {
        self.merges as f64 / self.active as f64
    }
}

/// Runs RAC to completion, recording per-round merges against the number
/// of clusters that still have a neighbor.
pub(crate) fn run_model(g: &DissimilarityGraph, linkage: Linkage) -> Vec<ModelRound> {
    let mut engine = RacEngine::new(g, linkage).with_workers(1);
    let mut out = Vec::new();
    loop {
        let active = engine.clusters().filter(|c| !c.neighbors.is_empty()).count();
        let pairs = engine.find_reciprocal_nearest_neighbors();
        if pairs.is_empty() {
            break;
        }
        engine
            .update_cluster_dissimilarities(&pairs)
            .expect("pairs come from the engine itself");
        engine.update_nearest_neighbors();
        out.push(ModelRound {
            active,
            merges: pairs.len(),
        });
    }
    out
}

/// Per-round-index mean merge fraction over runs, counting only runs that
/// still had more than two active clusters in that round.
pub(crate) fn mean_fraction_by_round(runs: &[Vec<ModelRound>]) -> Vec<(usize, f64)> {
    let rounds = runs.iter().map(Vec::len).max().unwrap_or(0);
    (0..rounds)
        .filter_map(|r| {
            let f: Vec<f64> = runs
                .iter()
                .filter_map(|run| run.get(r))
                .filter(|m| m.active > 2)
                .map(ModelRound::fraction)
                .collect();
            (!f.is_empty()).then(|| (f.len(), f.iter().sum::<f64>() / f.len() as f64))
        })
        .collect()
}

/// Mean merge fraction over every round with more than two active clusters.
pub(crate) fn pooled_fraction(runs: &[Vec<ModelRound>]) -> f64 {
    let f: Vec<f64> = runs
        .iter()
        .flatten()
        .filter(|m| m.active > 2)
        .map(ModelRound::fraction)
        .collect();
    f.iter().sum::<f64>() / f.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_quantiles() {
        let s = Summary::of(&(1..=100).map(f64::from).collect::<Vec<_>>());
        assert_eq!(s.mean, 50.5);
        assert_eq!(s.p50, 50.0);
        assert_eq!(s.p99, 99.0);
        assert_eq!((s.min, s.max), (1.0, 100.0));
        assert!(Summary::of(&[]).mean.is_nan());
    }

    #[test]
    fn model_counts_only_active_clusters() {
        let mut g = DissimilarityGraph::new(5);
        g.add_edge(0, 1, 1.0).unwrap();
        g.add_edge(1, 2, 2.0).unwrap();
        let runs = run_model(&g, Linkage::Single);
        assert_eq!(
            runs,
            vec![ModelRound { active: 3, merges: 1 }, ModelRound { active: 2, merges: 1 }]
        );
    }
}
