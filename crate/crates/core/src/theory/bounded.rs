//! Single-linkage RAC on random-weighted graphs of bounded degree.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::decay::decay_bound;
use super::{mean_fraction_by_round, pooled_fraction, run_model, ModelRound, Summary};
use crate::error::{Error, Result};
use crate::graph::DissimilarityGraph;
use crate::linkage::{ClusterId, Linkage};
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphShape {
    /// Degree 2 regardless of `d`.
    Cycle,
    /// Configuration model; self-loops and repeated pairs are dropped, so
    /// degrees are at most `d`.
    Regular,
    /// Perfect matching, degree 1.
    Matching,
}

impl fmt::Display for GraphShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GraphShape::Cycle => "cycle",
            GraphShape::Regular => "regular",
            GraphShape::Matching => "matching",
        })
    }
}

impl FromStr for GraphShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cycle" => Ok(GraphShape::Cycle),
            "regular" => Ok(GraphShape::Regular),
            "matching" => Ok(GraphShape::Matching),
            _ => Err(Error::contract(format!(
                "unknown shape {s:?} (expected cycle, regular or matching)"
            ))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct BoundedDegreeConfig {
    pub n: usize,
    pub d: usize,
    pub shape: GraphShape,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundedDegreeReport {
    pub n: usize,
    pub d: usize,
    pub shape: GraphShape,
    pub trials: usize,
    pub rounds: Summary,
    /// `ln n / ln(1 / (1 - 1/(4d)))`.
    pub rounds_bound: f64,
    pub mean_merge_fraction: f64,
    /// Smallest per-round-index mean fraction among round indices reached
    /// by at least a tenth of the trials.
    pub min_round_fraction: f64,
    /// `0.9 / (4d)`.
    pub fraction_floor: f64,
    pub fraction_by_round: Vec<(usize, f64)>,
    #[serde(skip)]
    pub runs: Vec<Vec<ModelRound>>,
}

impl BoundedDegreeReport {
    pub fn passes(&self) -> bool {
        self.mean_merge_fraction >= self.fraction_floor
            && self.min_round_fraction >= self.fraction_floor
            && self.rounds.mean <= self.rounds_bound
    }
}

fn edges_for(shape: GraphShape, n: usize, d: usize, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    match shape {
        GraphShape::Cycle => (0..n).map(|i| (i, (i + 1) % n)).filter(|(a, b)| a != b).collect(),
        GraphShape::Matching => {
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(rng);
            perm.chunks(2).map(|c| (c[0], c[1])).collect()
        }
        GraphShape::Regular => {
            let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, d)).collect();
            stubs.shuffle(rng);
            stubs.chunks(2).map(|c| (c[0], c[1])).filter(|(a, b)| a != b).collect()
        }
    }
}

fn random_graph(cfg: &BoundedDegreeConfig, trial: usize) -> DissimilarityGraph {
    let mut rng = rng::stream(cfg.seed, "bounded-degree", trial as u64);
    let edges = edges_for(cfg.shape, cfg.n, cfg.d, &mut rng);
    let mut g = DissimilarityGraph::new(cfg.n);
    for (a, b) in edges {
        let (a, b) = (a as ClusterId, b as ClusterId);
        if g.weight(a, b).is_none() {
            g.add_edge(a, b, rng.random::<f64>()).expect("valid edge");
        }
    }
    g
}

pub fn sim_bounded_degree_graph(cfg: &BoundedDegreeConfig) -> Result<BoundedDegreeReport> {
    let d = match cfg.shape {
        GraphShape::Cycle => 2,
        GraphShape::Matching => 1,
        GraphShape::Regular => cfg.d,
    };
    if cfg.n < 2 || d == 0 || cfg.trials == 0 {
        return Err(Error::contract(format!(
            "need n >= 2, d >= 1 and trials >= 1, got n = {} d = {d} trials = {}",
            cfg.n, cfg.trials
        )));
    }
    if cfg.shape != GraphShape::Cycle && !(cfg.n * d).is_multiple_of(2) {
        return Err(Error::contract(format!(
            "n * d must be even, got n = {} d = {d}",
            cfg.n
        )));
    }
    let runs: Vec<Vec<ModelRound>> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| run_model(&random_graph(cfg, t), Linkage::Single))
        .collect();
    let rounds: Vec<f64> = runs.iter().map(|r| r.len() as f64).collect();
    let by_round = mean_fraction_by_round(&runs);
    let min_support = (cfg.trials / 10).max(1);
    let min_round_fraction = by_round
        .iter()
        .filter(|(count, _)| *count >= min_support)
        .map(|&(_, f)| f)
        .fold(f64::INFINITY, f64::min);
    let alpha = 1.0 / (4.0 * d as f64);
    Ok(BoundedDegreeReport {
        n: cfg.n,
        d,
        shape: cfg.shape,
        trials: cfg.trials,
        rounds: Summary::of(&rounds),
        rounds_bound: decay_bound(cfg.n as u64, alpha),
        mean_merge_fraction: pooled_fraction(&runs),
        min_round_fraction,
        fraction_floor: 0.9 * alpha,
        fraction_by_round: by_round,
        runs,
    })
}
