//! Text formats and graph construction from point sets.

use std::fmt::{self, Write as _};
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dendrogram::{Dendrogram, MergeEvent};
use crate::error::{Error, Result};
use crate::graph::DissimilarityGraph;
use crate::linkage::ClusterId;
use crate::rac::RoundStats;

const DENDROGRAM_HEADER: &str = "#rac-dendrogram v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    L2,
    Cosine,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::L2 => "l2",
            Metric::Cosine => "cosine",
        })
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l2" => Ok(Metric::L2),
            "cosine" => Ok(Metric::Cosine),
            _ => Err(Error::contract(format!("unknown metric {s:?} (expected l2 or cosine)"))),
        }
    }
}

/// Dense vectors stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
    norms: Vec<f64>,
    metric: Metric,
}

impl PointSet {
    pub fn new(vectors: Vec<Vec<f64>>, metric: Metric) -> Result<Self> {
        let dim = vectors.first().map_or(0, Vec::len);
        let mut coords = Vec::with_capacity(vectors.len() * dim);
        for (i, v) in vectors.iter().enumerate() {
            if v.len() != dim {
                return Err(Error::contract(format!(
                    "point {i} has {} coordinates, expected {dim}",
                    v.len()
                )));
            }
            if let Some(c) = v.iter().find(|c| !c.is_finite()) {
                return Err(Error::contract(format!("point {i} has non-finite coordinate {c}")));
            }
            coords.extend_from_slice(v);
        }
        let norms: Vec<f64> = coords
            .chunks(dim.max(1))
            .take(vectors.len())
            .map(|v| v.iter().map(|c| c * c).sum::<f64>().sqrt())
            .collect();
        if metric == Metric::Cosine {
            if let Some(i) = norms.iter().position(|&n| n == 0.0) {
                return Err(Error::contract(format!(
                    "point {i} is a zero vector under the cosine metric"
                )));
            }
        }
        Ok(PointSet {
            dim,
            coords,
            norms,
            metric,
        })
    }

    /// One-dimensional points.
    pub fn line(xs: &[f64], metric: Metric) -> Result<Self> {
        PointSet::new(xs.iter().map(|&x| vec![x]).collect(), metric)
    }

    pub fn len(&self) -> usize {
        self.norms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.norms.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    /// Metric distance. Symmetric bit for bit.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let (i, j) = (i.min(j), i.max(j));
        match self.metric {
            Metric::L2 => self.squared_l2(i, j).sqrt(),
            Metric::Cosine => {
                let dot: f64 = self.point(i).iter().zip(self.point(j)).map(|(a, b)| a * b).sum();
                (1.0 - dot / (self.norms[i] * self.norms[j])).clamp(0.0, 2.0)
            }
        }
    }

    fn squared_l2(&self, i: usize, j: usize) -> f64 {
        self.point(i)
            .iter()
            .zip(self.point(j))
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    /// The `k` nearest other points of `i`, ordered by (distance, id).
    fn nearest(&self, i: usize, k: usize) -> Vec<(f64, usize)> {
        let mut best: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
        // For l2, candidates whose squared distance clearly exceeds the
        // current k-th are skipped without a square root.
        let mut cutoff_sq = f64::INFINITY;
        for j in 0..self.len() {
            if j == i {
                continue;
            }
            if self.metric == Metric::L2 {
                let (a, b) = (i.min(j), i.max(j));
                if self.squared_l2(a, b) > cutoff_sq {
                    continue;
                }
            }
            if offer(&mut best, k, (self.distance(i, j), j)) {
                let d = best[k - 1].0;
                cutoff_sq = d * d * (1.0 + 8.0 * f64::EPSILON);
            }
        }
        best
    }

    /// Same result as [`Self::nearest`] for l2, scanning outward from `i`
    /// in `order` (points sorted by first coordinate) and stopping once the
    /// coordinate gap alone exceeds the current k-th distance.
    fn nearest_sweep(&self, i: usize, k: usize, order: &[usize], pos: &[usize]) -> Vec<(f64, usize)> {
        let x = self.point(i)[0];
        let mut best: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
        let (mut down, mut up) = (pos[i], pos[i] + 1);
        let (mut down_open, mut up_open) = (down > 0, up < order.len());
        while down_open || up_open {
            for (open, next, step) in [(&mut down_open, &mut down, -1isize), (&mut up_open, &mut up, 1)] {
                if !*open {
                    continue;
                }
                let j = if step < 0 { order[*next - 1] } else { order[*next] };
                // dist >= |dx| (1 - 2 eps) after rounding, so this never
                // drops a point that could tie the k-th.
                if best.len() == k && (self.point(j)[0] - x).abs() > best[k - 1].0 * (1.0 + 4.0 * f64::EPSILON) {
                    *open = false;
                    continue;
                }
                let far = best.len() == k && {
                    let d = best[k - 1].0;
                    self.squared_l2(i.min(j), i.max(j)) > d * d * (1.0 + 8.0 * f64::EPSILON)
                };
                if !far {
                    offer(&mut best, k, (self.distance(i, j), j));
                }
                if step < 0 {
                    *next -= 1;
                    *open = *next > 0;
                } else {
                    *next += 1;
                    *open = *next < order.len();
                }
            }
        }
        best
    }
}

/// Inserts `cand` into the sorted top-`k` list; true when the list is full
/// afterwards and `cand` was kept.
fn offer(best: &mut Vec<(f64, usize)>, k: usize, cand: (f64, usize)) -> bool {
    if best.len() == k && cand >= best[k - 1] {
        return false;
    }
    let at = best.partition_point(|e| *e < cand);
    best.insert(at, cand);
    best.truncate(k);
    best.len() == k
}

/// Exact k-nearest-neighbor graph, symmetrized by union.
pub fn build_knn_graph(points: &PointSet, k: usize) -> Result<DissimilarityGraph> {
    let n = points.len();
    if k == 0 || k >= n {
        return Err(Error::contract(format!("k = {k} must satisfy 0 < k < n = {n}")));
    }
    let lists: Vec<Vec<(f64, usize)>> = if points.metric == Metric::L2 && points.dim > 0 {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| points.point(a)[0].total_cmp(&points.point(b)[0]).then(a.cmp(&b)));
        let mut pos = vec![0; n];
        for (p, &i) in order.iter().enumerate() {
            pos[i] = p;
        }
        (0..n)
            .into_par_iter()
            .map(|i| points.nearest_sweep(i, k, &order, &pos))
            .collect()
    } else {
        (0..n).into_par_iter().map(|i| points.nearest(i, k)).collect()
    };
    let mut g = DissimilarityGraph::new(n);
    for (i, list) in lists.into_iter().enumerate() {
        for (d, j) in list {
            g.add_edge(i as ClusterId, j as ClusterId, d)?;
        }
    }
    Ok(g)
}

/// Edge for every pair within distance `eps`.
pub fn build_epsilon_graph(points: &PointSet, eps: f64) -> Result<DissimilarityGraph> {
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::contract(format!("eps = {eps} must be positive")));
    }
    let n = points.len();
    let rows: Vec<Vec<(usize, f64)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (i + 1..n)
                .map(|j| (j, points.distance(i, j)))
                .filter(|&(_, d)| d <= eps)
                .collect()
        })
        .collect();
    let mut g = DissimilarityGraph::new(n);
    for (i, row) in rows.into_iter().enumerate() {
        for (j, d) in row {
            g.add_edge(i as ClusterId, j as ClusterId, d)?;
        }
    }
    Ok(g)
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
}

fn parse_field<T: FromStr>(path: &Path, line: usize, name: &str, s: Option<&str>) -> Result<T> {
    let s = s.ok_or_else(|| parse_error(path, line, format!("missing {name}")))?;
    s.trim()
        .parse()
        .map_err(|_| parse_error(path, line, format!("bad {name} {s:?}")))
}

/// Parses `u<TAB>v<TAB>w` lines. `path` is only used in messages.
pub fn parse_edge_list(text: &str, path: &Path) -> Result<DissimilarityGraph> {
    let mut edges = Vec::new();
    for (line, l) in data_lines(text) {
        let mut f = l.split('\t');
        let u: ClusterId = parse_field(path, line, "source id", f.next())?;
        let v: ClusterId = parse_field(path, line, "target id", f.next())?;
        let w: f64 = parse_field(path, line, "weight", f.next())?;
        if f.next().is_some() {
            return Err(parse_error(path, line, "expected 3 tab-separated fields"));
        }
        edges.push((line, u, v, w));
    }
    let n = edges.iter().map(|e| e.1.max(e.2) as usize + 1).max().unwrap_or(0);
    let mut g = DissimilarityGraph::new(n);
    for (line, u, v, w) in edges {
        g.add_edge(u, v, w).map_err(|e| match e {
            Error::Contract(m) => parse_error(path, line, m),
            other => other,
        })?;
    }
    Ok(g)
}

/// Reads an edge list; nodes are `0..=max id`.
pub fn load_edge_list(path: impl AsRef<Path>) -> Result<DissimilarityGraph> {
    let path = path.as_ref();
    parse_edge_list(&read_text(path)?, path)
}

pub fn edge_list_to_string(g: &DissimilarityGraph) -> String {
    let mut out = String::with_capacity(g.num_edges() * 24);
    for (u, v, w) in g.edges() {
        writeln!(out, "{u}\t{v}\t{w:?}").unwrap();
    }
    out
}

pub fn write_edge_list(g: &DissimilarityGraph, path: impl AsRef<Path>) -> Result<()> {
    write_text(path.as_ref(), &edge_list_to_string(g))
}

/// Parses `id<TAB>c1,c2,...` lines; ids must cover `0..n` exactly once.
pub fn parse_vectors(text: &str, path: &Path, metric: Metric) -> Result<PointSet> {
    let mut rows: Vec<(usize, usize, Vec<f64>)> = Vec::new();
    for (line, l) in data_lines(text) {
        let (id, coords) = l
            .split_once('\t')
            .ok_or_else(|| parse_error(path, line, "expected id<TAB>coordinates"))?;
        let id: usize = parse_field(path, line, "id", Some(id))?;
        let v = coords
            .split(',')
            .map(|c| parse_field(path, line, "coordinate", Some(c)))
            .collect::<Result<Vec<f64>>>()?;
        rows.push((id, line, v));
    }
    let n = rows.len();
    let mut slots: Vec<Option<Vec<f64>>> = vec![None; n];
    for (id, line, v) in rows {
        if id >= n {
            return Err(parse_error(path, line, format!("id {id} out of range for {n} vectors")));
        }
        if slots[id].is_some() {
            return Err(parse_error(path, line, format!("duplicate id {id}")));
        }
        slots[id] = Some(v);
    }
    PointSet::new(slots.into_iter().map(Option::unwrap).collect(), metric)
}

pub fn load_vectors(path: impl AsRef<Path>, metric: Metric) -> Result<PointSet> {
    let path = path.as_ref();
    parse_vectors(&read_text(path)?, path, metric)
}

pub fn vectors_to_string(p: &PointSet) -> String {
    let mut out = String::new();
    for i in 0..p.len() {
        write!(out, "{i}\t").unwrap();
        for (j, c) in p.point(i).iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            write!(out, "{c:?}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn write_vectors(p: &PointSet, path: impl AsRef<Path>) -> Result<()> {
    write_text(path.as_ref(), &vectors_to_string(p))
}

pub fn dendrogram_to_string(d: &Dendrogram) -> String {
    let mut out = format!("{DENDROGRAM_HEADER} n={}\n", d.n_points());
    for m in d.merges() {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{:.16e}\t{}",
            m.seq, m.round, m.left, m.right, m.result, m.dissimilarity, m.size
        )
        .unwrap();
    }
    out
}

pub fn parse_dendrogram(text: &str, path: &Path) -> Result<Dendrogram> {
    let header = text.lines().next().unwrap_or("");
    let n: usize = header
        .strip_prefix(DENDROGRAM_HEADER)
        .and_then(|rest| rest.trim().strip_prefix("n="))
        .and_then(|n| n.parse().ok())
        .ok_or_else(|| parse_error(path, 1, format!("expected header \"{DENDROGRAM_HEADER} n=<n>\"")))?;
    let mut merges = Vec::new();
    for (line, l) in data_lines(text) {
        let mut f = l.split('\t');
        merges.push(MergeEvent {
            seq: parse_field(path, line, "merge_seq", f.next())?,
            round: parse_field(path, line, "round", f.next())?,
            left: parse_field(path, line, "left", f.next())?,
            right: parse_field(path, line, "right", f.next())?,
            result: parse_field(path, line, "result", f.next())?,
            dissimilarity: parse_field(path, line, "dissimilarity", f.next())?,
            size: parse_field(path, line, "size", f.next())?,
        });
        if f.next().is_some() {
            return Err(parse_error(path, line, "expected 7 tab-separated fields"));
        }
    }
    Dendrogram::from_merges(n, merges)
}

pub fn write_dendrogram(d: &Dendrogram, path: impl AsRef<Path>) -> Result<()> {
    write_text(path.as_ref(), &dendrogram_to_string(d))
}

pub fn read_dendrogram(path: impl AsRef<Path>) -> Result<Dendrogram> {
    let path = path.as_ref();
    parse_dendrogram(&read_text(path)?, path)
}

/// The run-independent part of [`RoundStats`].
#[derive(Serialize)]
struct StatsLine {
    round: u32,
    clusters_before: usize,
    merges: usize,
    alpha: f64,
    nn_updates: usize,
    beta_per_merge: f64,
}

/// One JSON object per round. Wall times are left out so that equal inputs
/// give byte-identical files; see [`stats_with_timings_to_string`].
pub fn stats_to_string(rounds: &[RoundStats]) -> String {
    let mut out = String::new();
    for r in rounds {
        let line = StatsLine {
            round: r.round,
            clusters_before: r.clusters_before,
            merges: r.merges,
            alpha: r.alpha,
            nn_updates: r.nn_updates,
            beta_per_merge: r.beta_per_merge,
        };
        out.push_str(&serde_json::to_string(&line).expect("plain struct serializes"));
        out.push('\n');
    }
    out
}

/// Every [`RoundStats`] field, including phase wall times.
pub fn stats_with_timings_to_string(rounds: &[RoundStats]) -> String {
    let mut out = String::new();
    for r in rounds {
        out.push_str(&serde_json::to_string(r).expect("plain struct serializes"));
        out.push('\n');
    }
    out
}

pub fn write_stats(rounds: &[RoundStats], path: impl AsRef<Path>) -> Result<()> {
    write_text(path.as_ref(), &stats_to_string(rounds))
}

/// Reads round records; lines with a `"summary"` key are skipped.
pub fn parse_stats(text: &str, path: &Path) -> Result<Vec<RoundStats>> {
    let mut out = Vec::new();
    for (line, l) in data_lines(text) {
        let value: serde_json::Value = serde_json::from_str(l).map_err(|e| parse_error(path, line, e.to_string()))?;
        if value.get("summary").is_some() {
            continue;
        }
        out.push(serde_json::from_value(value).map_err(|e| parse_error(path, line, e.to_string()))?);
    }
    Ok(out)
}

pub fn read_stats(path: impl AsRef<Path>) -> Result<Vec<RoundStats>> {
    let path = path.as_ref();
    parse_stats(&read_text(path)?, path)
}

/// Writes `text` to `path`, for callers that build their own records.
pub fn write_file(path: impl AsRef<Path>, text: &str) -> Result<()> {
    write_text(path.as_ref(), text)
}

pub fn read_file(path: impl AsRef<Path>) -> Result<String> {
    read_text(path.as_ref())
}
