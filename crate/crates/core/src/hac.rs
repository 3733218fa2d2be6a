//! Sequential HAC: repeatedly merge the globally closest pair.
//!
//! [`hac_run`] keeps cached cluster dissimilarities and a lazy priority
//! queue; [`hac_naive`] recomputes every dissimilarity from the point-level
//! definition at every step. Both serve as reference oracles for the RAC
//! engines.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use crate::dendrogram::{Dendrogram, MergeEvent};
use crate::error::{Error, Result};
use crate::graph::DissimilarityGraph;
use crate::linkage::{direct_linkage_unchecked, ClusterId, Link, Linkage, PairKey};

/// Largest instance [`hac_naive`] accepts.
pub const NAIVE_MAX_POINTS: usize = 512;

struct OracleCluster {
    size: u64,
    neighbors: HashMap<ClusterId, Link>,
}

/// Runs HAC with Lance-Williams updates.
///
/// Stops when no pair with a defined dissimilarity remains, so disconnected
/// inputs yield a forest. Each merge is its own round.
pub fn hac_run(g: &DissimilarityGraph, linkage: Linkage) -> Dendrogram {
    hac_run_observed(g, linkage, |_, _| {})
}

/// [`hac_run`] with a hook called after every merge with the merged
/// cluster's neighbor values, sorted by neighbor id.
pub fn hac_run_observed<F>(g: &DissimilarityGraph, linkage: Linkage, mut observe: F) -> Dendrogram
where
    F: FnMut(&MergeEvent, &[(ClusterId, f64)]),
{
    let n = g.num_nodes();
    let mut clusters: Vec<Option<OracleCluster>> = (0..n)
        .map(|_| {
            Some(OracleCluster {
                size: 1,
                neighbors: HashMap::new(),
            })
        })
        .collect();
    let mut queue = BinaryHeap::with_capacity(g.num_edges());
    for (a, b, w) in g.edges() {
        clusters[a as usize]
            .as_mut()
            .unwrap()
            .neighbors
            .insert(b, Link::point(w));
        clusters[b as usize]
            .as_mut()
            .unwrap()
            .neighbors
            .insert(a, Link::point(w));
        queue.push(Reverse(PairKey::new(w, a, b)));
    }

    let mut dendrogram = Dendrogram::new(n);
    let mut scratch = Vec::new();
    while let Some(Reverse(key)) = queue.pop() {
        // Entries go stale when either side merges or the value changes.
        let current = match (&clusters[key.lo as usize], &clusters[key.hi as usize]) {
            (Some(lo), Some(_)) => lo.neighbors.get(&key.hi).map(|l| l.weight),
            _ => None,
        };
        if current.map(f64::to_bits) != Some(key.weight.to_bits()) {
            continue;
        }
        let (lo, hi) = (key.lo, key.hi);
        let hi_cluster = clusters[hi as usize].take().unwrap();
        let mut lo_cluster = clusters[lo as usize].take().unwrap();
        lo_cluster.neighbors.remove(&hi);

        let mut merged: HashMap<ClusterId, Link> =
            HashMap::with_capacity(lo_cluster.neighbors.len() + hi_cluster.neighbors.len());
        for (&x, &l) in &lo_cluster.neighbors {
            merged.insert(
                x,
                linkage.combine(Some(l), hi_cluster.neighbors.get(&x).copied()).unwrap(),
            );
        }
        for (&x, &l) in &hi_cluster.neighbors {
            if x != lo && !merged.contains_key(&x) {
                merged.insert(x, l);
            }
        }
        for (&x, &l) in &merged {
            let other = clusters[x as usize]
                .as_mut()
                .expect("neighbor of a live cluster is live");
            other.neighbors.remove(&hi);
            other.neighbors.insert(lo, l);
            queue.push(Reverse(PairKey::new(l.weight, lo, x)));
        }
        lo_cluster.size += hi_cluster.size;
        lo_cluster.neighbors = merged;

        dendrogram.push(dendrogram.len() as u32 + 1, lo, hi, key.weight, lo_cluster.size);
        scratch.clear();
        scratch.extend(lo_cluster.neighbors.iter().map(|(&x, l)| (x, l.weight)));
        scratch.sort_unstable_by_key(|&(x, _)| x);
        observe(dendrogram.merges().last().unwrap(), &scratch);
        clusters[lo as usize] = Some(lo_cluster);
    }
    dendrogram
}

/// HAC that re-evaluates the linkage definition over member points for every
/// pair of active clusters at every step. Refuses instances above
/// [`NAIVE_MAX_POINTS`].
pub fn hac_naive(g: &DissimilarityGraph, linkage: Linkage) -> Result<Dendrogram> {
    let n = g.num_nodes();
    if n > NAIVE_MAX_POINTS {
        return Err(Error::TooLarge(format!(
            "naive HAC is limited to {NAIVE_MAX_POINTS} points, got {n}"
        )));
    }
    let base = g.to_dense();
    let mut members: Vec<Option<Vec<ClusterId>>> = (0..n as ClusterId).map(|p| Some(vec![p])).collect();
    let mut dendrogram = Dendrogram::new(n);
    loop {
        let live: Vec<ClusterId> = (0..n as ClusterId).filter(|&c| members[c as usize].is_some()).collect();
        let mut best: Option<PairKey> = None;
        for (i, &a) in live.iter().enumerate() {
            for &b in &live[i + 1..] {
                let ma = members[a as usize].as_deref().unwrap();
                let mb = members[b as usize].as_deref().unwrap();
                if let Some(w) = direct_linkage_unchecked(linkage, ma, mb, &base) {
                    let key = PairKey::new(w, a, b);
                    if best.is_none_or(|k| key < k) {
                        best = Some(key);
                    }
                }
            }
        }
        let Some(key) = best else { break };
        let mut hi = members[key.hi as usize].take().unwrap();
        let lo = members[key.lo as usize].as_mut().unwrap();
        lo.append(&mut hi);
        lo.sort_unstable();
        let size = lo.len() as u64;
        dendrogram.push(dendrogram.len() as u32 + 1, key.lo, key.hi, key.weight, size);
    }
    Ok(dendrogram)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(points: &[f64]) -> DissimilarityGraph {
        DissimilarityGraph::complete(points.len(), |a, b| (points[a as usize] - points[b as usize]).abs()).unwrap()
    }

    fn dissimilarities(d: &Dendrogram) -> Vec<f64> {
        d.merges().iter().map(|m| m.dissimilarity).collect()
    }

    #[test]
    fn single_point_has_no_merges() {
        let g = DissimilarityGraph::new(1);
        assert!(hac_run(&g, Linkage::Average).is_empty());
        assert!(hac_naive(&g, Linkage::Average).unwrap().is_empty());
    }

    #[test]
    fn line_single_linkage() {
        let d = hac_run(&line(&[0.0, 1.0, 3.0, 7.0]), Linkage::Single);
        assert_eq!(dissimilarities(&d), vec![1.0, 2.0, 4.0]);
        let pairs: Vec<_> = d.merges().iter().map(|m| (m.left, m.right)).collect();
        assert_eq!(pairs, vec![(0, 1), (0, 2), (0, 3)]);
    }

    #[test]
    fn line_complete_linkage() {
        let d = hac_run(&line(&[0.0, 1.0, 3.0, 7.0]), Linkage::Complete);
        assert_eq!(dissimilarities(&d), vec![1.0, 3.0, 7.0]);
    }

    #[test]
    fn two_points() {
        let mut g = DissimilarityGraph::new(2);
        g.add_edge(0, 1, 0.25).unwrap();
        for l in Linkage::ALL {
            assert_eq!(dissimilarities(&hac_naive(&g, l).unwrap()), vec![0.25]);
            assert_eq!(dissimilarities(&hac_run(&g, l)), vec![0.25]);
        }
    }

    #[test]
    fn triangle_first_merge_is_global_min() {
        let mut g = DissimilarityGraph::new(3);
        g.add_edge(0, 1, 2.0).unwrap();
        g.add_edge(1, 2, 1.0).unwrap();
        g.add_edge(0, 2, 3.0).unwrap();
        let d = hac_naive(&g, Linkage::Average).unwrap();
        assert_eq!((d.merges()[0].left, d.merges()[0].right), (1, 2));
    }

    #[test]
    fn disconnected_input_gives_forest() {
        let mut g = DissimilarityGraph::new(4);
        g.add_edge(0, 1, 1.0).unwrap();
        g.add_edge(2, 3, 2.0).unwrap();
        let d = hac_run(&g, Linkage::Complete);
        assert_eq!(d.len(), 2);
        assert_eq!(d.num_roots(), 2);
        assert!(d.same_merges(&hac_naive(&g, Linkage::Complete).unwrap()));
    }

    #[test]
    fn naive_refuses_large_instances() {
        let g = DissimilarityGraph::new(NAIVE_MAX_POINTS + 1);
        assert!(matches!(hac_naive(&g, Linkage::Single), Err(Error::TooLarge(_))));
    }

    #[test]
    fn observer_sees_merged_neighbors() {
        let g = line(&[0.0, 1.0, 3.0, 7.0]);
        let mut seen = Vec::new();
        hac_run_observed(&g, Linkage::Average, |m, nbrs| seen.push((m.left, nbrs.to_vec())));
        assert_eq!(seen[0], (0, vec![(2, 2.5), (3, 6.5)]));
    }
}
