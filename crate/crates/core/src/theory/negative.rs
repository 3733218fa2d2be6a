//! Points on a line whose average-linkage RAC run needs exponentially many
//! rounds although the dendrogram is only `n` levels deep.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::DissimilarityGraph;
use crate::io::{Metric, PointSet};
use crate::linkage::Linkage;
use crate::rac::rac_run;

/// Largest `n` the generator accepts. Beyond it the gap increment `2 eps`
/// falls below the spacing of doubles near `2^n`.
pub const MAX_NEGATIVE_N: u32 = 10;
/// Largest `n` for which the full RAC run is verified.
pub const MAX_VERIFIED_N: u32 = 8;

/// `2^n` points `P_k = (k + 1) + eps (k + 1)^2`, `eps = 2^(-4n)`.
///
/// Values are exact in f64 for every accepted `n`; the strictly increasing
/// gaps are still checked numerically.
pub fn gen_negative_example(n: u32) -> Result<PointSet> {
    if n == 0 {
        return Err(Error::contract("n must be positive"));
    }
    if n > MAX_NEGATIVE_N {
        return Err(Error::TooLarge(format!(
            "negative example with n = {n}; at most n = {MAX_NEGATIVE_N} is representable"
        )));
    }
    let eps = (-4.0 * n as f64).exp2();
    let xs: Vec<f64> = (1..=1u64 << n)
        .map(|k| {
            let k = k as f64;
            k + eps * k * k
        })
        .collect();
    for k in 1..xs.len().saturating_sub(1) {
        if (xs[k + 1] - xs[k]).partial_cmp(&(xs[k] - xs[k - 1])) != Some(std::cmp::Ordering::Greater) {
            return Err(Error::TooLarge(format!(
                "gaps stop increasing at k = {k} for n = {n} in double precision"
            )));
        }
    }
    PointSet::line(&xs, Metric::L2)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NegativeReport {
    pub n: u32,
    pub points: usize,
    pub height: usize,
    pub rounds: usize,
    /// Lower bound `2^(n-1)` on the rounds.
    pub min_rounds: usize,
    /// Largest number of merges in one round that involve an input point.
    pub max_singleton_merges: usize,
}

/// Runs average-linkage RAC on the complete graph over the construction and
/// checks height `n`, at least `2^(n-1)` rounds and at most one merge per
/// round touching an unmerged input point.
pub fn verify_negative_example(n: u32) -> Result<NegativeReport> {
    if n > MAX_VERIFIED_N {
        return Err(Error::TooLarge(format!(
            "full run verified only up to n = {MAX_VERIFIED_N}, got {n}"
        )));
    }
    let pts = gen_negative_example(n)?;
    let g = DissimilarityGraph::complete(pts.len(), |a, b| pts.distance(a as usize, b as usize))?;
    let out = rac_run(&g, Linkage::Average);
    let d = &out.dendrogram;

    let mut size = vec![1u64; pts.len()];
    let mut per_round = vec![0usize; out.rounds.len() + 1];
    for m in d.merges() {
        if size[m.left as usize] == 1 || size[m.right as usize] == 1 {
            per_round[m.round as usize] += 1;
        }
        size[m.left as usize] = m.size;
    }
    let report = NegativeReport {
        n,
        points: pts.len(),
        height: d.height(),
        rounds: out.rounds.len(),
        min_rounds: 1 << (n - 1),
        max_singleton_merges: per_round.iter().copied().max().unwrap_or(0),
    };
    if let Some(r) = per_round.iter().position(|&c| c > 1) {
        return Err(Error::consistency(format!(
            "round {r} has {} merges involving input points",
            per_round[r]
        )));
    }
    if report.height != n as usize {
        return Err(Error::consistency(format!("height {} instead of {n}", report.height)));
    }
    if report.rounds < report.min_rounds {
        return Err(Error::consistency(format!(
            "{} rounds, fewer than {}",
            report.rounds, report.min_rounds
        )));
    }
    Ok(report)
}
