//! Merge forests produced by the clustering engines.

use std::cmp::Ordering;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linkage::ClusterId;

/// One merge: clusters `left < right` joined at `dissimilarity` in `round`.
/// The merged cluster keeps the lower id, so `result == left`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MergeEvent {
    pub seq: u64,
    pub round: u32,
    pub left: ClusterId,
    pub right: ClusterId,
    pub result: ClusterId,
    pub dissimilarity: f64,
    pub size: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dendrogram {
    n_points: usize,
    merges: Vec<MergeEvent>,
}

/// A merge identified by the leaf sets of its two children, independent of
/// cluster ids, rounds and merge order.
#[derive(Clone, Debug, PartialEq)]
pub struct CanonicalMerge {
    pub lo: Vec<ClusterId>,
    pub hi: Vec<ClusterId>,
    pub dissimilarity: f64,
}

impl CanonicalMerge {
    fn cmp_sets(&self, other: &Self) -> Ordering {
        self.lo.cmp(&other.lo).then_with(|| self.hi.cmp(&other.hi))
    }
}

/// The first point where two dendrograms disagree.
#[derive(Clone, Debug, PartialEq)]
pub enum MergeDiff {
    OnlyLeft(CanonicalMerge),
    OnlyRight(CanonicalMerge),
}

impl Dendrogram {
    pub fn new(n_points: usize) -> Self {
        Dendrogram {
            n_points,
            merges: Vec::new(),
        }
    }

    /// Builds a dendrogram from stored events and checks that they form a
    /// valid merge forest.
    pub fn from_merges(n_points: usize, merges: Vec<MergeEvent>) -> Result<Self> {
        let d = Dendrogram { n_points, merges };
        d.validate()?;
        Ok(d)
    }

    /// Appends a merge of `a` and `b`; assigns the next sequence number.
    pub fn push(&mut self, round: u32, a: ClusterId, b: ClusterId, dissimilarity: f64, size: u64) {
        let (left, right) = (a.min(b), a.max(b));
        self.merges.push(MergeEvent {
            seq: self.merges.len() as u64,
            round,
            left,
            right,
            result: left,
            dissimilarity,
            size,
        });
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn merges(&self) -> &[MergeEvent] {
        &self.merges
    }

    pub fn len(&self) -> usize {
        self.merges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.merges.is_empty()
    }

    /// Number of trees in the forest.
    pub fn num_roots(&self) -> usize {
        self.n_points - self.merges.len()
    }

    /// Highest round index that contains a merge.
    pub fn num_rounds(&self) -> u32 {
        self.merges.iter().map(|m| m.round).max().unwrap_or(0)
    }

    /// Checks the forest invariants: every child is live when merged,
    /// ids follow the lower-id rule, and sizes add up.
    pub fn validate(&self) -> Result<()> {
        let mut size: Vec<Option<u64>> = vec![Some(1); self.n_points];
        for (i, m) in self.merges.iter().enumerate() {
            let fail = |what: &str| Err(Error::consistency(format!("merge #{i} ({m:?}): {what}")));
            if m.seq != i as u64 {
                return fail("sequence numbers must be 0, 1, 2, ...");
            }
            if m.left >= m.right || m.result != m.left {
                return fail("expected left < right and result == left");
            }
            if m.right as usize >= self.n_points {
                return fail("cluster id out of range");
            }
            if !(m.dissimilarity.is_finite() && m.dissimilarity >= 0.0) {
                return fail("dissimilarity must be finite and non-negative");
            }
            if m.round == 0 {
                return fail("rounds are numbered from 1");
            }
            let (Some(sl), Some(sr)) = (size[m.left as usize], size[m.right as usize]) else {
                return fail("child is no longer a live cluster");
            };
            if m.size != sl + sr {
                return fail("size is not the sum of the child sizes");
            }
            size[m.left as usize] = Some(m.size);
            size[m.right as usize] = None;
        }
        Ok(())
    }

    /// Longest leaf-to-root path, counted in merges.
    pub fn height(&self) -> usize {
        let mut h = vec![0usize; self.n_points];
        let mut best = 0;
        for m in &self.merges {
            let v = h[m.left as usize].max(h[m.right as usize]) + 1;
            h[m.left as usize] = v;
            best = best.max(v);
        }
        best
    }

    /// Cuts the hierarchy into exactly `k` clusters.
    ///
    /// Merges are replayed in increasing dissimilarity (ties by ids) until
    /// `k` clusters remain. Each block of the returned partition is sorted,
    /// and blocks are ordered by their smallest point.
    pub fn flat_clusters(&self, k: usize) -> Result<Vec<Vec<ClusterId>>> {
        if k == 0 || k > self.n_points {
            return Err(Error::contract(format!(
                "cannot cut {} points into {k} clusters",
                self.n_points
            )));
        }
        let min_k = self.num_roots();
        if k < min_k {
            return Err(Error::contract(format!(
                "the forest has {min_k} trees; at least {min_k} clusters are achievable, not {k}"
            )));
        }
        let mut order: Vec<&MergeEvent> = self.merges.iter().collect();
        order.sort_by(|a, b| {
            a.dissimilarity
                .total_cmp(&b.dissimilarity)
                .then(a.left.cmp(&b.left))
                .then(a.right.cmp(&b.right))
        });
        let mut parent: Vec<usize> = (0..self.n_points).collect();
        for m in order.into_iter().take(self.n_points - k) {
            let a = find(&mut parent, m.left as usize);
            let b = find(&mut parent, m.right as usize);
            parent[a.max(b)] = a.min(b);
        }
        let mut blocks: Vec<Vec<ClusterId>> = Vec::new();
        let mut index: HashMap<usize, usize> = HashMap::new();
        for p in 0..self.n_points {
            let root = find(&mut parent, p);
            let slot = *index.entry(root).or_insert_with(|| {
                blocks.push(Vec::new());
                blocks.len() - 1
            });
            blocks[slot].push(p as ClusterId);
        }
        Ok(blocks)
    }

    /// Merges keyed by child leaf sets, sorted by those sets.
    pub fn canonical(&self) -> Vec<CanonicalMerge> {
        let mut leaves: Vec<Vec<ClusterId>> = (0..self.n_points as ClusterId).map(|p| vec![p]).collect();
        let mut out = Vec::with_capacity(self.merges.len());
        for m in &self.merges {
            let hi = std::mem::take(&mut leaves[m.right as usize]);
            let lo = std::mem::take(&mut leaves[m.left as usize]);
            let mut joined = Vec::with_capacity(lo.len() + hi.len());
            let (mut i, mut j) = (0, 0);
            while i < lo.len() && j < hi.len() {
                if lo[i] < hi[j] {
                    joined.push(lo[i]);
                    i += 1;
                } else {
                    joined.push(hi[j]);
                    j += 1;
                }
            }
            joined.extend_from_slice(&lo[i..]);
            joined.extend_from_slice(&hi[j..]);
            let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
            out.push(CanonicalMerge {
                lo,
                hi,
                dissimilarity: m.dissimilarity,
            });
            leaves[m.left as usize] = joined;
        }
        out.sort_by(|a, b| a.cmp_sets(b));
        out
    }

    /// First merge present in one dendrogram but not the other, comparing
    /// by child leaf sets only.
    pub fn first_difference(&self, other: &Dendrogram) -> Option<MergeDiff> {
        let a = self.canonical();
        let b = other.canonical();
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp_sets(&b[j]) {
                Ordering::Equal => {
                    i += 1;
                    j += 1;
                }
                Ordering::Less => return Some(MergeDiff::OnlyLeft(a[i].clone())),
                Ordering::Greater => return Some(MergeDiff::OnlyRight(b[j].clone())),
            }
        }
        if i < a.len() {
            return Some(MergeDiff::OnlyLeft(a[i].clone()));
        }
        if j < b.len() {
            return Some(MergeDiff::OnlyRight(b[j].clone()));
        }
        None
    }

    pub fn same_merges(&self, other: &Dendrogram) -> bool {
        self.n_points == other.n_points && self.first_difference(other).is_none()
    }

    /// Largest relative gap between matching merge dissimilarities.
    /// Only meaningful when [`Dendrogram::same_merges`] holds.
    pub fn max_relative_gap(&self, other: &Dendrogram) -> f64 {
        self.canonical()
            .iter()
            .zip(other.canonical().iter())
            .map(|(a, b)| relative_gap(a.dissimilarity, b.dissimilarity))
            .fold(0.0, f64::max)
    }
}

pub(crate) fn relative_gap(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}
