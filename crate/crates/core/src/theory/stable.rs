//! Stable cluster trees: exhaustive checker and a separated-line generator.

use rand::Rng;

use crate::dendrogram::Dendrogram;
use crate::error::{Error, Result};
use crate::graph::DissimilarityGraph;
use crate::io::{Metric, PointSet};
use crate::linkage::{direct_linkage, ClusterId, Linkage};
use crate::rng;

/// Size cap for [`is_stable_tree`]; subsets are enumerated as bitmasks.
pub const MAX_STABLE_POINTS: usize = 16;

struct MaskWeights {
    n: usize,
    w: Vec<Option<f64>>,
}

impl MaskWeights {
    fn new(g: &DissimilarityGraph) -> Self {
        let n = g.num_nodes();
        let mut w = vec![None; n * n];
        for (a, b, x) in g.edges() {
            w[a as usize * n + b as usize] = Some(x);
            w[b as usize * n + a as usize] = Some(x);
        }
        MaskWeights { n, w }
    }

    fn link(&self, linkage: Linkage, a: u32, b: u32) -> Option<f64> {
        let mut acc: Option<f64> = None;
        let mut count = 0u32;
        for i in bits(a) {
            for j in bits(b) {
                let Some(w) = self.w[i * self.n + j] else { continue };
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
            Linkage::Average => acc.map(|s| s / count as f64),
            _ => acc,
        }
    }
}

fn bits(mask: u32) -> impl Iterator<Item = usize> {
    (0..32).filter(move |i| mask >> i & 1 == 1)
}

/// Non-empty submasks of `mask`.
fn submasks(mask: u32) -> impl Iterator<Item = u32> {
    let mut next = Some(mask);
    std::iter::from_fn(move || {
        let cur = next?;
        next = if cur == 0 { None } else { Some((cur - 1) & mask) };
        Some(cur)
    })
    .filter(|&m| m != 0)
}

fn tree_nodes(tree: &Dendrogram) -> Vec<u32> {
    let mut nodes: Vec<u32> = (0..tree.n_points()).map(|i| 1u32 << i).collect();
    for m in tree.canonical() {
        nodes.push(m.lo.iter().chain(&m.hi).fold(0, |acc, &p| acc | 1 << p));
    }
    nodes.sort_unstable();
    nodes.dedup();
    nodes
}

/// Whether every pair of non-overlapping tree nodes `X`, `Y` satisfies
/// `d(A, X \ A) < d(A, B)` for all proper non-empty `A ⊂ X` and non-empty
/// `B ⊆ Y`, with `d` the direct linkage value.
///
/// A missing `d(A, B)` places no constraint; a missing `d(A, X \ A)` next to
/// a present `d(A, B)` fails.
pub fn is_stable_tree(g: &DissimilarityGraph, tree: &Dendrogram, linkage: Linkage) -> Result<bool> {
    let n = g.num_nodes();
    if n > MAX_STABLE_POINTS {
        return Err(Error::TooLarge(format!(
            "stability check enumerates subsets; at most {MAX_STABLE_POINTS} points, got {n}"
        )));
    }
    if tree.n_points() != n {
        return Err(Error::contract(format!(
            "tree has {} points, graph has {n}",
            tree.n_points()
        )));
    }
    let w = MaskWeights::new(g);
    let nodes = tree_nodes(tree);
    for &x in nodes.iter().filter(|x| x.count_ones() >= 2) {
        for a in submasks(x).filter(|&a| a != x) {
            let inside = w.link(linkage, a, x ^ a);
            for &y in nodes.iter().filter(|&&y| y & x == 0) {
                for b in submasks(y) {
                    let Some(across) = w.link(linkage, a, b) else { continue };
                    match inside {
                        Some(d) if d < across => {}
                        _ => return Ok(false),
                    }
                }
            }
        }
    }
    Ok(true)
}

/// Points on a line with the intended balanced binary tree.
#[derive(Clone, Debug)]
pub struct StableInstance {
    pub points: PointSet,
    pub tree: Dendrogram,
    pub depth: u32,
}

impl StableInstance {
    pub fn graph(&self) -> Result<DissimilarityGraph> {
        let p = &self.points;
        DissimilarityGraph::complete(p.len(), |a, b| p.distance(a as usize, b as usize))
    }
}

/// Balanced binary hierarchy of `2^depth` points on a line.
///
/// Sibling leaves sit 1 to 1.5 apart; two sibling groups are separated by
/// `separation` (up to 10% more) times the larger group diameter. The
/// jitter comes from `seed` and keeps all distances distinct.
pub fn gen_stable_instance(branching: u32, depth: u32, separation: f64, seed: u64) -> Result<StableInstance> {
    if branching != 2 {
        return Err(Error::contract(format!(
            "only binary trees are generated, got branching {branching}"
        )));
    }
    if !(1..=16).contains(&depth) {
        return Err(Error::contract(format!("depth must be in 1..=16, got {depth}")));
    }
    if separation.is_nan() || separation < 3.0 {
        return Err(Error::contract(format!(
            "separation must be at least 3, got {separation}"
        )));
    }
    let mut rng = rng::stream(seed, "stable", 0);
    fn build(depth: u32, separation: f64, rng: &mut impl Rng) -> Vec<f64> {
        if depth == 0 {
            return vec![0.0];
        }
        let left = build(depth - 1, separation, rng);
        let right = build(depth - 1, separation, rng);
        let diam = left.last().unwrap().max(*right.last().unwrap());
        let gap = if depth == 1 {
            1.0 + 0.5 * rng.random::<f64>()
        } else {
            separation * diam * (1.0 + 0.1 * rng.random::<f64>())
        };
        let offset = left.last().unwrap() + gap;
        left.iter().copied().chain(right.iter().map(|x| x + offset)).collect()
    }
    let xs = build(depth, separation, &mut rng);
    let points = PointSet::line(&xs, Metric::L2)?;

    let mut tree = Dendrogram::new(xs.len());
    let weights = DissimilarityGraph::complete(xs.len(), |a, b| points.distance(a as usize, b as usize))?;
    for level in 1..=depth {
        let block = 1usize << level;
        let half = block / 2;
        for start in (0..xs.len()).step_by(block) {
            let lo: Vec<ClusterId> = (start..start + half).map(|i| i as ClusterId).collect();
            let hi: Vec<ClusterId> = (start + half..start + block).map(|i| i as ClusterId).collect();
            let w = direct_linkage(Linkage::Average, &lo, &hi, &weights)?.expect("complete graph");
            tree.push(level, lo[0], hi[0], w, block as u64);
        }
    }
    Ok(StableInstance { points, tree, depth })
}
