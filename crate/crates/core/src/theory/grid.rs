//! Single linkage on sorted uniform points: RAC on the path of gaps.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{mean_fraction_by_round, pooled_fraction, run_model, ModelRound, Summary};
use crate::error::{Error, Result};
use crate::graph::DissimilarityGraph;
use crate::linkage::{ClusterId, Linkage};
use crate::rng;

#[derive(Clone, Debug, Serialize)]
pub struct GridReport {
    pub n: usize,
    pub trials: usize,
    pub rounds: Summary,
    /// Mean merges per active cluster over all rounds with more than two
    /// active clusters.
    pub mean_merge_fraction: f64,
    /// Mean fraction in the first round, where the gap order is uniform.
    pub first_round_fraction: f64,
    /// `(runs contributing, mean fraction)` per round index.
    pub fraction_by_round: Vec<(usize, f64)>,
    #[serde(skip)]
    pub runs: Vec<Vec<ModelRound>>,
}

pub fn sim_grid_single_linkage(n: usize, trials: usize, seed: u64) -> Result<GridReport> {
    if n < 2 || trials == 0 {
        return Err(Error::contract(format!(
            "grid model needs n >= 2 and trials >= 1, got n = {n}"
        )));
    }
    let runs: Vec<Vec<ModelRound>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng::stream(seed, "grid", t as u64);
            let mut xs: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            xs.sort_by(f64::total_cmp);
            let mut g = DissimilarityGraph::new(n);
            for i in 1..n {
                g.add_edge((i - 1) as ClusterId, i as ClusterId, xs[i] - xs[i - 1])
                    .expect("gaps are finite and non-negative");
            }
            run_model(&g, Linkage::Single)
        })
        .collect();
    let rounds: Vec<f64> = runs.iter().map(|r| r.len() as f64).collect();
    Ok(GridReport {
        n,
        trials,
        rounds: Summary::of(&rounds),
        mean_merge_fraction: pooled_fraction(&runs),
        first_round_fraction: runs.iter().map(|r| r[0].fraction()).sum::<f64>() / trials as f64,
        fraction_by_round: mean_fraction_by_round(&runs),
        runs,
    })
}
