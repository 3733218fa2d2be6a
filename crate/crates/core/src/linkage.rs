//! Linkage functions: the point-level definitions and their recursive
//! (Lance-Williams) updates.
//!
//! Graphs may be sparse. An absent pair contributes nothing: single linkage
//! takes the minimum of the present values, complete linkage the maximum,
//! and average linkage the mean over the point pairs that carry a weight.
//! To keep the recursive form exact on sparse inputs every cached value is a
//! [`Link`], which remembers how many point pairs stand behind it. On a
//! complete graph the pair count of `W(A, C)` is `|A|·|C|`, so the update
//! reduces to the textbook size-weighted mean.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cluster identifier. Input points are `0..n`; a merge keeps the lower id.
pub type ClusterId = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Linkage {
    Single,
    Complete,
    Average,
}

impl Linkage {
    pub const ALL: [Linkage; 3] = [Linkage::Single, Linkage::Complete, Linkage::Average];

    pub fn name(self) -> &'static str {
        match self {
            Linkage::Single => "single",
            Linkage::Complete => "complete",
            Linkage::Average => "average",
        }
    }

    /// Recursive update `W(A ∪ B, C)` from `W(A, C)` and `W(B, C)`.
    ///
    /// The operation is symmetric in its arguments down to the bit, which
    /// lets two owners of the same cross pair compute identical values.
    #[inline]
    pub fn combine(self, a: Option<Link>, b: Option<Link>) -> Option<Link> {
        match (a, b) {
            (None, None) => None,
            (Some(x), None) | (None, Some(x)) => Some(x),
            (Some(x), Some(y)) => Some(self.combine_present(x, y)),
        }
    }

    #[inline]
    fn combine_present(self, x: Link, y: Link) -> Link {
        let pairs = x.pairs + y.pairs;
        let weight = match self {
            Linkage::Single => x.weight.min(y.weight),
            Linkage::Complete => x.weight.max(y.weight),
            Linkage::Average => {
                let (cx, cy) = (x.pairs as f64, y.pairs as f64);
                (cx * x.weight + cy * y.weight) / (cx + cy)
            }
        };
        Link { weight, pairs }
    }
}

impl fmt::Display for Linkage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Linkage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "single" => Ok(Linkage::Single),
            "complete" => Ok(Linkage::Complete),
            "average" => Ok(Linkage::Average),
            other => Err(Error::contract(format!(
                "unknown linkage '{other}' (expected single, complete or average)"
            ))),
        }
    }
}

/// A cached cluster dissimilarity and the number of point pairs it summarizes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Link {
    pub weight: f64,
    pub pairs: u64,
}

impl Link {
    pub fn point(weight: f64) -> Self {
        Link { weight, pairs: 1 }
    }
}

/// Total order on cluster pairs: weight first, then lower id, then higher id.
///
/// Every comparison between dissimilarities in the HAC oracle and in both
/// RAC engines goes through this key, so ties resolve identically everywhere.
#[derive(Clone, Copy, Debug)]
pub struct PairKey {
    pub weight: f64,
    pub lo: ClusterId,
    pub hi: ClusterId,
}

impl PairKey {
    #[inline]
    pub fn new(weight: f64, a: ClusterId, b: ClusterId) -> Self {
        PairKey {
            weight,
            lo: a.min(b),
            hi: a.max(b),
        }
    }
}

impl PartialEq for PairKey {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for PairKey {}

impl PartialOrd for PairKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for PairKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.weight
            .total_cmp(&other.weight)
            .then(self.lo.cmp(&other.lo))
            .then(self.hi.cmp(&other.hi))
    }
}

/// Point-level dissimilarity lookup.
pub trait PairWeights {
    fn pair_weight(&self, a: ClusterId, b: ClusterId) -> Option<f64>;
}

/// Table-driven dissimilarity lookup for small dense oracles.
#[derive(Clone, Debug)]
pub struct DenseWeights {
    n: usize,
    weights: Vec<Option<f64>>,
}

impl DenseWeights {
    pub fn new(n: usize) -> Self {
        DenseWeights {
            n,
            weights: vec![None; n * n],
        }
    }

    pub fn set(&mut self, a: ClusterId, b: ClusterId, w: f64) {
        let (a, b) = (a as usize, b as usize);
        self.weights[a * self.n + b] = Some(w);
        self.weights[b * self.n + a] = Some(w);
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }
}

impl PairWeights for DenseWeights {
    #[inline]
    fn pair_weight(&self, a: ClusterId, b: ClusterId) -> Option<f64> {
        self.weights[a as usize * self.n + b as usize]
    }
}

/// Linkage value between two point sets, evaluated from its definition.
///
/// Returns `None` when no pair `(a, b)` carries a weight. Average linkage
/// divides by the number of present pairs.
pub fn direct_linkage<W: PairWeights + ?Sized>(
    linkage: Linkage,
    a: &[ClusterId],
    b: &[ClusterId],
    base: &W,
) -> Result<Option<f64>> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::contract("direct_linkage requires non-empty sets"));
    }
    let left: HashSet<ClusterId> = a.iter().copied().collect();
    if let Some(x) = b.iter().find(|x| left.contains(x)) {
        return Err(Error::contract(format!(
            "direct_linkage requires disjoint sets, point {x} is in both"
        )));
    }
    Ok(direct_linkage_unchecked(linkage, a, b, base))
}

pub(crate) fn direct_linkage_unchecked<W: PairWeights + ?Sized>(
    linkage: Linkage,
    a: &[ClusterId],
    b: &[ClusterId],
    base: &W,
) -> Option<f64> {
    let mut acc: Option<f64> = None;
    let mut count = 0u64;
    for &x in a {
        for &y in b {
            let Some(w) = base.pair_weight(x, y) else {
                continue;
            };
            count += 1;
            acc = Some(match (linkage, acc) {
                (_, None) => w,
                (Linkage::Single, Some(v)) => v.min(w),
                (Linkage::Complete, Some(v)) => v.max(w),
                (Linkage::Average, Some(v)) => v + w,
            });
        }
    }
    match linkage {
        Linkage::Average => acc.map(|sum| sum / count as f64),
        _ => acc,
    }
}

/// Lance-Williams update `W(A ∪ B, C)` from `W(A, C)` and `W(B, C)`.
///
/// `size_a` and `size_b` weight the two values under average linkage; they
/// are ignored by single and complete linkage. Absent inputs contribute
/// nothing.
pub fn lance_williams_update(
    linkage: Linkage,
    w_ac: Option<f64>,
    w_bc: Option<f64>,
    size_a: u64,
    size_b: u64,
) -> Result<Option<f64>> {
    if size_a < 1 || size_b < 1 {
        return Err(Error::contract(format!(
            "cluster sizes must be at least 1 (got {size_a} and {size_b})"
        )));
    }
    let a = w_ac.map(|weight| Link { weight, pairs: size_a });
    let b = w_bc.map(|weight| Link { weight, pairs: size_b });
    Ok(linkage.combine(a, b).map(|l| l.weight))
}

/// Checks `W(A ∪ B, C) >= min(W(A, C), W(B, C))` on one triple.
pub fn check_reducibility<W: PairWeights + ?Sized>(
    linkage: Linkage,
    a: &[ClusterId],
    b: &[ClusterId],
    c: &[ClusterId],
    base: &W,
) -> Result<bool> {
    let union: Vec<ClusterId> = a.iter().chain(b).copied().collect();
    let w_union = direct_linkage(linkage, &union, c, base)?;
    let w_ac = direct_linkage(linkage, a, c, base)?;
    let w_bc = direct_linkage(linkage, b, c, base)?;
    let (Some(w_union), Some(w_ac), Some(w_bc)) = (w_union, w_ac, w_bc) else {
        return Err(Error::contract("reducibility check needs weights for every cross pair"));
    };
    Ok(w_union >= w_ac.min(w_bc) - 1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn weights(n: usize, edges: &[(ClusterId, ClusterId, f64)]) -> DenseWeights {
        let mut w = DenseWeights::new(n);
        for &(a, b, x) in edges {
            w.set(a, b, x);
        }
        w
    }

    #[test]
    fn direct_single_takes_min() {
        let w = weights(3, &[(0, 1, 2.0), (0, 2, 5.0)]);
        assert_eq!(direct_linkage(Linkage::Single, &[0], &[1, 2], &w).unwrap(), Some(2.0));
    }

    #[test]
    fn direct_one_pair_all_linkages_agree() {
        let w = weights(2, &[(0, 1, 0.75)]);
        for l in Linkage::ALL {
            assert_eq!(direct_linkage(l, &[0], &[1], &w).unwrap(), Some(0.75));
        }
    }

    #[test]
    fn direct_average() {
        let w = weights(3, &[(0, 1, 1.0), (0, 2, 3.0)]);
        assert_eq!(direct_linkage(Linkage::Average, &[0], &[1, 2], &w).unwrap(), Some(2.0));
    }

    #[test]
    fn direct_average_sparse_uses_present_pairs() {
        let w = weights(4, &[(0, 2, 1.0), (1, 3, 4.0)]);
        assert_eq!(
            direct_linkage(Linkage::Average, &[0, 1], &[2, 3], &w).unwrap(),
            Some(2.5)
        );
    }

    #[test]
    fn direct_no_edges_is_none() {
        let w = weights(3, &[(0, 1, 1.0)]);
        assert_eq!(direct_linkage(Linkage::Single, &[0], &[2], &w).unwrap(), None);
    }

    #[test]
    fn direct_rejects_overlap() {
        let w = weights(3, &[(0, 1, 1.0)]);
        let err = direct_linkage(Linkage::Single, &[0, 1], &[1, 2], &w).unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
    }

    #[test]
    fn update_examples() {
        let lw = |l, a, b, sa, sb| lance_williams_update(l, a, b, sa, sb).unwrap();
        assert_eq!(lw(Linkage::Single, Some(1.0), Some(3.0), 1, 1), Some(1.0));
        assert_eq!(lw(Linkage::Complete, Some(1.0), Some(3.0), 1, 1), Some(3.0));
        let avg = lw(Linkage::Average, Some(1.0), Some(3.0), 1, 2).unwrap();
        assert!((avg - 7.0 / 3.0).abs() < 1e-12);
        assert_eq!(lw(Linkage::Single, Some(1.0), None, 1, 1), Some(1.0));
        assert_eq!(lw(Linkage::Average, None, None, 1, 1), None);
    }

    #[test]
    fn update_rejects_zero_sizes() {
        assert!(lance_williams_update(Linkage::Average, Some(1.0), Some(2.0), 0, 1).is_err());
        assert!(lance_williams_update(Linkage::Single, Some(1.0), Some(2.0), 1, 0).is_err());
    }

    #[test]
    fn combine_is_bitwise_symmetric() {
        let a = Some(Link { weight: 0.1, pairs: 3 });
        let b = Some(Link { weight: 0.7, pairs: 5 });
        for l in Linkage::ALL {
            let x = l.combine(a, b).unwrap();
            let y = l.combine(b, a).unwrap();
            assert_eq!(x.weight.to_bits(), y.weight.to_bits());
            assert_eq!(x.pairs, 8);
        }
    }

    #[test]
    fn complete_reducibility_example() {
        let w = weights(3, &[(0, 2, 1.0), (1, 2, 5.0), (0, 1, 0.5)]);
        assert!(check_reducibility(Linkage::Complete, &[0], &[1], &[2], &w).unwrap());
        assert_eq!(direct_linkage(Linkage::Complete, &[0, 1], &[2], &w).unwrap(), Some(5.0));
    }

    #[test]
    fn pair_key_orders_by_weight_then_ids() {
        assert!(PairKey::new(1.0, 5, 6) < PairKey::new(2.0, 0, 1));
        assert!(PairKey::new(1.0, 0, 9) < PairKey::new(1.0, 1, 2));
        assert!(PairKey::new(1.0, 3, 1) < PairKey::new(1.0, 1, 4));
        assert_eq!(PairKey::new(1.0, 3, 1), PairKey::new(1.0, 1, 3));
    }

    #[test]
    fn linkage_parse_roundtrip() {
        for l in Linkage::ALL {
            assert_eq!(l.name().parse::<Linkage>().unwrap(), l);
        }
        assert!("ward".parse::<Linkage>().is_err());
    }
}
