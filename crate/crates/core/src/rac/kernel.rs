//! Per-merge computations shared by the in-memory and the sharded engine.
//!
//! Both engines must produce bit-identical dissimilarities, so everything
//! that decides a cached value lives here.

use std::collections::HashMap;

use crate::linkage::{ClusterId, Link, Linkage, PairKey};

pub type NeighborMap = HashMap<ClusterId, Link>;

/// A cluster merging this round, as seen by its neighbors: its partner and
/// the dissimilarity of the pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Partner {
    pub id: ClusterId,
    pub weight: f64,
}

/// Nearest neighbor under the [`PairKey`] order.
pub fn nearest(id: ClusterId, neighbors: &NeighborMap) -> Option<ClusterId> {
    neighbors
        .iter()
        .min_by(|(&x, a), (&y, b)| PairKey::new(a.weight, id, x).cmp(&PairKey::new(b.weight, id, y)))
        .map(|(&x, _)| x)
}

/// Neighbor map of `lo ∪ hi`.
///
/// Non-merging neighbors get the plain update `W(lo ∪ hi, x)`. Neighbors that
/// merge this round are grouped under their pair's lower id and get
/// `W(lo ∪ hi, x0 ∪ x1)`. That value is folded in the order a sequential run
/// would have produced it: the pair that comes first under [`PairKey`]
/// is folded first. The owner of the other pair runs the same fold from its
/// side and obtains the same bits.
pub fn merged_neighborhood(
    linkage: Linkage,
    lo: ClusterId,
    hi: ClusterId,
    pair_weight: f64,
    lo_map: &NeighborMap,
    hi_map: &NeighborMap,
    status: impl Fn(ClusterId) -> Option<Partner>,
) -> NeighborMap {
    let own = PairKey::new(pair_weight, lo, hi);
    let mut out = NeighborMap::with_capacity(lo_map.len().max(hi_map.len()));
    for &x in lo_map.keys().chain(hi_map.keys()) {
        if x == lo || x == hi {
            continue;
        }
        match status(x) {
            None => {
                out.entry(x).or_insert_with(|| {
                    let l = linkage.combine(lo_map.get(&x).copied(), hi_map.get(&x).copied());
                    l.expect("x is a neighbor of lo or hi")
                });
            }
            Some(p) => {
                let (x0, x1) = (x.min(p.id), x.max(p.id));
                if out.contains_key(&x0) {
                    continue;
                }
                let other = PairKey::new(p.weight, x0, x1);
                let v = cross_pair(linkage, own < other, lo_map, hi_map, x0, x1);
                out.insert(x0, v.expect("x is a neighbor of lo or hi"));
            }
        }
    }
    out
}

fn cross_pair(
    linkage: Linkage,
    own_first: bool,
    lo_map: &NeighborMap,
    hi_map: &NeighborMap,
    x0: ClusterId,
    x1: ClusterId,
) -> Option<Link> {
    let a0 = lo_map.get(&x0).copied();
    let a1 = lo_map.get(&x1).copied();
    let b0 = hi_map.get(&x0).copied();
    let b1 = hi_map.get(&x1).copied();
    if own_first {
        linkage.combine(linkage.combine(a0, b0), linkage.combine(a1, b1))
    } else {
        linkage.combine(linkage.combine(a0, a1), linkage.combine(b0, b1))
    }
}
