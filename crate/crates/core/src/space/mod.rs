//! Finite metric measure spaces.
//!
//! A [`MetricMeasureSpace`] is a point set `0..n` together with a metric and
//! a strictly positive measure. The metric is either stored densely (an
//! `n × n` array) or backed by a weighted graph whose shortest-path distance
//! is the metric; both answer the same queries. Balls are closed throughout:
//! a point at distance exactly `r` belongs to `B(x, r)`.

mod chain;
pub mod io;
mod subset;

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use chain::{ChainMetric, Geodesicity, GeodesicityEntry};
pub use subset::Subset;

/// Relative slack used when comparing a distance against a radius, so that
/// round-off in summed path lengths never moves a point across a sphere.
pub const DIST_EPS: f64 = 1e-9;

/// Default number of points above which dense metrics are refused.
pub const DEFAULT_DENSE_LIMIT: usize = 2048;

/// Default number of points up to which the triangle inequality is checked.
pub const DEFAULT_TRIANGLE_LIMIT: usize = 300;

#[inline]
pub fn within(d: f64, r: f64) -> bool {
    d <= r + DIST_EPS * r.abs().max(1.0)
}

#[derive(Clone, Copy, Debug)]
pub struct SpaceOptions {
    /// Largest point count stored as a dense matrix.
    pub dense_limit: usize,
    /// Run the O(N³) triangle check; `None` means "only when N ≤ 300".
    pub check_triangle: Option<bool>,
}

impl Default for SpaceOptions {
    fn default() -> Self {
        SpaceOptions {
            dense_limit: DEFAULT_DENSE_LIMIT,
            check_triangle: None,
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) enum Metric {
    Dense { n: usize, d: Vec<f64> },
    Graph { adj: Vec<Vec<(usize, f64)>> },
}

#[derive(Clone, Debug)]
pub struct MetricMeasureSpace {
    name: String,
    measure: Vec<f64>,
    metric: Metric,
    coords: Option<Vec<Vec<i64>>>,
    disconnected: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoublingReport {
    pub scale: f64,
    pub constant: f64,
    pub worst_point: usize,
}

impl MetricMeasureSpace {
    /// Builds a space from a dense distance matrix, validating every invariant.
    pub fn dense(name: impl Into<String>, rows: Vec<Vec<f64>>, measure: Vec<f64>) -> Result<Self> {
        Self::dense_with(name, rows, measure, SpaceOptions::default())
    }

    pub fn dense_with(
        name: impl Into<String>,
        rows: Vec<Vec<f64>>,
        measure: Vec<f64>,
        opts: SpaceOptions,
    ) -> Result<Self> {
        let n = rows.len();
        if n > opts.dense_limit {
            return Err(Error::TooLarge {
                n,
                limit: opts.dense_limit,
            });
        }
        let mut d = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidMetric(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            d.extend_from_slice(row);
        }
        Self::from_flat(name.into(), n, d, measure, opts)
    }

    pub(crate) fn from_flat(
        name: String,
        n: usize,
        d: Vec<f64>,
        measure: Vec<f64>,
        opts: SpaceOptions,
    ) -> Result<Self> {
        check_measure(&measure, n)?;
        for i in 0..n {
            for j in 0..n {
                let v = d[i * n + j];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidMetric(format!(
                        "d[{i}][{j}] = {v} is not a finite nonnegative number"
                    )));
                }
                if i == j && v != 0.0 {
                    return Err(Error::InvalidMetric(format!("d[{i}][{i}] = {v} is not zero")));
                }
                if i != j && v == 0.0 {
                    return Err(Error::InvalidMetric(format!(
                        "d[{i}][{j}] = 0 for distinct points"
                    )));
                }
                if j > i && (v - d[j * n + i]).abs() > DIST_EPS * v.max(1.0) {
                    return Err(Error::InvalidMetric(format!(
                        "d[{i}][{j}] = {v} but d[{j}][{i}] = {}",
                        d[j * n + i]
                    )));
                }
            }
        }
        let check = opts
            .check_triangle
            .unwrap_or(n <= DEFAULT_TRIANGLE_LIMIT);
        if check {
            if let Some((i, j, k)) = triangle_violation(n, &d) {
                return Err(Error::InvalidMetric(format!(
                    "triangle inequality fails: d[{i}][{k}] = {} > d[{i}][{j}] + d[{j}][{k}] = {}",
                    d[i * n + k],
                    d[i * n + j] + d[j * n + k]
                )));
            }
        }
        Ok(MetricMeasureSpace {
            name,
            measure,
            metric: Metric::Dense { n, d },
            coords: None,
            disconnected: false,
        })
    }

    /// Builds a space whose metric is the shortest-path distance of a
    /// weighted undirected graph. Small graphs are materialized densely.
    pub fn from_graph(
        name: impl Into<String>,
        n: usize,
        edges: &[(usize, usize, f64)],
        measure: Vec<f64>,
    ) -> Result<Self> {
        Self::from_graph_with(name, n, edges, measure, SpaceOptions::default())
    }

    pub fn from_graph_with(
        name: impl Into<String>,
        n: usize,
        edges: &[(usize, usize, f64)],
        measure: Vec<f64>,
        opts: SpaceOptions,
    ) -> Result<Self> {
        check_measure(&measure, n)?;
        let mut adj = vec![Vec::new(); n];
        for &(i, j, w) in edges {
            if i >= n || j >= n {
                return Err(Error::InvalidMetric(format!(
                    "edge ({i}, {j}) references a point outside 0..{n}"
                )));
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::InvalidMetric(format!(
                    "edge ({i}, {j}) has weight {w}; weights must be finite and positive"
                )));
            }
            if i == j {
                continue;
            }
            adj[i].push((j, w));
            adj[j].push((i, w));
        }
        let components = component_count(&adj);
        if components > 1 {
            return Err(Error::InvalidMetric(format!(
                "graph has {components} connected components; the metric would be infinite"
            )));
        }
        let space = MetricMeasureSpace {
            name: name.into(),
            measure,
            metric: Metric::Graph { adj },
            coords: None,
            disconnected: false,
        };
        if n <= opts.dense_limit {
            Ok(space.densified())
        } else {
            Ok(space)
        }
    }

    /// Returns the same space with a materialized dense metric.
    fn densified(self) -> Self {
        match &self.metric {
            Metric::Dense { .. } => self,
            Metric::Graph { adj } => {
                let n = adj.len();
                let rows: Vec<Vec<f64>> = (0..n)
                    .into_par_iter()
                    .map(|x| full_dijkstra(adj, x))
                    .collect();
                let d = rows.into_iter().flatten().collect();
                MetricMeasureSpace {
                    metric: Metric::Dense { n, d },
                    ..self
                }
            }
        }
    }

    pub fn with_coords(mut self, coords: Vec<Vec<i64>>) -> Self {
        assert_eq!(coords.len(), self.len());
        self.coords = Some(coords);
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Same points and metric, new measure.
    pub fn reweighted(&self, measure: Vec<f64>) -> Result<Self> {
        check_measure(&measure, self.len())?;
        Ok(MetricMeasureSpace {
            measure,
            ..self.clone()
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.measure.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measure.is_empty()
    }

    pub fn measure(&self, x: usize) -> f64 {
        self.measure[x]
    }

    pub fn measures(&self) -> &[f64] {
        &self.measure
    }

    pub fn total_measure(&self) -> f64 {
        self.measure.iter().sum()
    }

    pub fn coords(&self) -> Option<&[Vec<i64>]> {
        self.coords.as_deref()
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.metric, Metric::Dense { .. })
    }

    /// True when some pairs are at infinite distance (only chain metrics).
    pub fn is_disconnected(&self) -> bool {
        self.disconnected
    }

    pub fn check_index(&self, x: usize) -> Result<()> {
        if x < self.len() {
            Ok(())
        } else {
            Err(Error::InvalidIndex {
                index: x,
                len: self.len(),
            })
        }
    }

    pub fn dist(&self, x: usize, y: usize) -> f64 {
        match &self.metric {
            Metric::Dense { n, d } => d[x * n + y],
            Metric::Graph { adj } => {
                if x == y {
                    return 0.0;
                }
                dijkstra_to(adj, x, y)
            }
        }
    }

    /// Distances from `x` to every point.
    pub fn distances_from(&self, x: usize) -> Vec<f64> {
        match &self.metric {
            Metric::Dense { n, d } => d[x * n..(x + 1) * n].to_vec(),
            Metric::Graph { adj } => full_dijkstra(adj, x),
        }
    }

    /// Sorted indices of the closed ball `B(x, r)`.
    pub fn ball_indices(&self, x: usize, r: f64) -> Vec<usize> {
        match &self.metric {
            Metric::Dense { n, d } => d[x * n..(x + 1) * n]
                .iter()
                .enumerate()
                .filter_map(|(y, &dy)| within(dy, r).then_some(y))
                .collect(),
            Metric::Graph { adj } => {
                let mut v: Vec<usize> = bounded_dijkstra(adj, &[x], r)
                    .into_iter()
                    .map(|(y, _)| y)
                    .collect();
                v.sort_unstable();
                v
            }
        }
    }

    /// Ball members paired with their distance to the center.
    pub fn ball_with_distances(&self, x: usize, r: f64) -> Vec<(usize, f64)> {
        match &self.metric {
            Metric::Dense { n, d } => d[x * n..(x + 1) * n]
                .iter()
                .enumerate()
                .filter_map(|(y, &dy)| within(dy, r).then_some((y, dy)))
                .collect(),
            Metric::Graph { adj } => {
                let mut v = bounded_dijkstra(adj, &[x], r);
                v.sort_unstable_by_key(|&(y, _)| y);
                v
            }
        }
    }

    pub fn ball(&self, x: usize, r: f64) -> Result<Subset> {
        self.check_index(x)?;
        if r < 0.0 {
            return Err(Error::InvalidParameter(format!("radius {r} is negative")));
        }
        Ok(Subset::from_sorted(self.ball_indices(x, r), &self.measure))
    }

    pub fn volume(&self, x: usize, r: f64) -> Result<f64> {
        Ok(self.ball(x, r)?.measure())
    }

    /// `V(x, r)` without index checks, for inner loops.
    pub(crate) fn volume_unchecked(&self, x: usize, r: f64) -> f64 {
        match &self.metric {
            Metric::Dense { n, d } => d[x * n..(x + 1) * n]
                .iter()
                .zip(&self.measure)
                .filter(|(&dy, _)| within(dy, r))
                .map(|(_, &m)| m)
                .sum(),
            Metric::Graph { adj } => bounded_dijkstra(adj, &[x], r)
                .into_iter()
                .map(|(y, _)| self.measure[y])
                .sum(),
        }
    }

    /// `V(x, r)` for every point.
    pub fn volumes(&self, r: f64) -> Vec<f64> {
        (0..self.len())
            .into_par_iter()
            .map(|x| self.volume_unchecked(x, r))
            .collect()
    }

    /// Builds a validated subset from arbitrary indices.
    pub fn subset(&self, indices: impl IntoIterator<Item = usize>) -> Result<Subset> {
        let mut v: Vec<usize> = indices.into_iter().collect();
        for &x in &v {
            self.check_index(x)?;
        }
        v.sort_unstable();
        v.dedup();
        Ok(Subset::from_sorted(v, &self.measure))
    }

    pub fn subset_from_mask(&self, mask: &[bool]) -> Subset {
        assert_eq!(mask.len(), self.len());
        Subset::from_mask(mask, &self.measure)
    }

    pub fn whole(&self) -> Subset {
        Subset::from_sorted((0..self.len()).collect(), &self.measure)
    }

    pub fn complement(&self, a: &Subset) -> Subset {
        let mask = a.mask(self.len());
        Subset::from_mask(&mask.iter().map(|m| !m).collect::<Vec<_>>(), &self.measure)
    }

    /// Distance from every point to the set `A` (infinite when `A` is empty).
    pub fn distance_to_set(&self, a: &Subset) -> Vec<f64> {
        let n = self.len();
        if a.is_empty() {
            return vec![f64::INFINITY; n];
        }
        match &self.metric {
            Metric::Dense { n, d } => (0..*n)
                .into_par_iter()
                .map(|x| {
                    a.iter()
                        .map(|y| d[x * n + y])
                        .fold(f64::INFINITY, f64::min)
                })
                .collect(),
            Metric::Graph { adj } => {
                let mut out = vec![f64::INFINITY; n];
                for (y, dy) in bounded_dijkstra(adj, a.members(), f64::INFINITY) {
                    out[y] = dy;
                }
                out
            }
        }
    }

    /// Membership mask of the closed thickening `[A]_h`.
    pub(crate) fn thicken_mask(&self, a: &[bool], h: f64) -> Vec<bool> {
        let n = self.len();
        match &self.metric {
            Metric::Dense { n, d } => (0..*n)
                .into_par_iter()
                .map(|x| {
                    a[x] || d[x * n..(x + 1) * n]
                        .iter()
                        .zip(a)
                        .any(|(&dy, &in_a)| in_a && within(dy, h))
                })
                .collect(),
            Metric::Graph { adj } => {
                let sources: Vec<usize> = (0..n).filter(|&x| a[x]).collect();
                let mut out = vec![false; n];
                for (y, _) in bounded_dijkstra(adj, &sources, h) {
                    out[y] = true;
                }
                out
            }
        }
    }

    /// `[A]_h = {x : d(x, A) ≤ h}`.
    pub fn thicken(&self, a: &Subset, h: f64) -> Result<Subset> {
        if h < 0.0 {
            return Err(Error::InvalidParameter(format!("scale {h} is negative")));
        }
        let mask = self.thicken_mask(&a.mask(self.len()), h);
        Ok(Subset::from_mask(&mask, &self.measure))
    }

    /// Boundary mask `[A]_h ∩ [Aᶜ]_h`.
    pub(crate) fn boundary_mask(&self, a: &[bool], h: f64) -> Vec<bool> {
        let inner = self.thicken_mask(a, h);
        let comp: Vec<bool> = a.iter().map(|m| !m).collect();
        let outer = self.thicken_mask(&comp, h);
        inner.iter().zip(&outer).map(|(&p, &q)| p && q).collect()
    }

    /// `∂_h A = [A]_h ∩ [Aᶜ]_h`, complements taken inside the space.
    pub fn boundary(&self, a: &Subset, h: f64) -> Result<Subset> {
        if h < 0.0 {
            return Err(Error::InvalidParameter(format!("scale {h} is negative")));
        }
        let mask = self.boundary_mask(&a.mask(self.len()), h);
        Ok(Subset::from_mask(&mask, &self.measure))
    }

    pub fn boundary_measure(&self, a: &Subset, h: f64) -> f64 {
        let mask = self.boundary_mask(&a.mask(self.len()), h);
        mask.iter()
            .zip(&self.measure)
            .filter(|(&m, _)| m)
            .map(|(_, &w)| w)
            .sum()
    }

    /// For each scale `r`, the tight local doubling constant
    /// `C_r = max_x V(x, 2r) / V(x, r)` and a point achieving it.
    pub fn doubling_profile(&self, scales: &[f64]) -> Result<Vec<DoublingReport>> {
        scales
            .iter()
            .map(|&r| {
                if !(r > 0.0) {
                    return Err(Error::InvalidParameter(format!("doubling scale {r} must be positive")));
                }
                let small = self.volumes(r);
                let large = self.volumes(2.0 * r);
                let mut best = (1.0, 0);
                for x in 0..self.len() {
                    let ratio = large[x] / small[x];
                    if ratio > best.0 {
                        best = (ratio, x);
                    }
                }
                Ok(DoublingReport {
                    scale: r,
                    constant: best.0,
                    worst_point: best.1,
                })
            })
            .collect()
    }

    pub fn diameter(&self) -> f64 {
        (0..self.len())
            .into_par_iter()
            .map(|x| {
                self.distances_from(x)
                    .into_iter()
                    .fold(0.0_f64, f64::max)
            })
            .reduce(|| 0.0, f64::max)
    }

    /// Hop counts of the graph `{(x, y) : d(x, y) ≤ h}` from the set `sources`.
    /// Unreachable points get `usize::MAX`.
    pub fn hop_distance(&self, sources: &[usize], h: f64) -> Vec<usize> {
        let n = self.len();
        let mut hops = vec![usize::MAX; n];
        let mut frontier: Vec<usize> = sources.to_vec();
        for &s in sources {
            hops[s] = 0;
        }
        let mut level = 0;
        while !frontier.is_empty() {
            level += 1;
            let mut next = Vec::new();
            for &x in &frontier {
                for y in self.ball_indices(x, h) {
                    if hops[y] == usize::MAX {
                        hops[y] = level;
                        next.push(y);
                    }
                }
            }
            frontier = next;
        }
        hops
    }
}

fn check_measure(measure: &[f64], n: usize) -> Result<()> {
    if measure.len() != n {
        return Err(Error::InvalidParameter(format!(
            "measure has {} weights for {n} points",
            measure.len()
        )));
    }
    for (index, &weight) in measure.iter().enumerate() {
        if !(weight.is_finite() && weight > 0.0) {
            return Err(Error::InvalidMeasure { index, weight });
        }
    }
    Ok(())
}

fn triangle_violation(n: usize, d: &[f64]) -> Option<(usize, usize, usize)> {
    for i in 0..n {
        for j in 0..n {
            let dij = d[i * n + j];
            for k in 0..n {
                let dik = d[i * n + k];
                if dik > (dij + d[j * n + k]) * (1.0 + DIST_EPS) + DIST_EPS {
                    return Some((i, j, k));
                }
            }
        }
    }
    None
}

pub(crate) fn component_count(adj: &[Vec<(usize, f64)>]) -> usize {
    let n = adj.len();
    let mut seen = vec![false; n];
    let mut count = 0;
    for s in 0..n {
        if seen[s] {
            continue;
        }
        count += 1;
        seen[s] = true;
        let mut stack = vec![s];
        while let Some(x) = stack.pop() {
            for &(y, _) in &adj[x] {
                if !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
    }
    count
}

#[derive(Copy, Clone, PartialEq)]
struct HeapEntry(f64, usize);

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .total_cmp(&self.0)
            .then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Multi-source Dijkstra truncated at `cutoff`; returns settled points.
pub(crate) fn bounded_dijkstra(
    adj: &[Vec<(usize, f64)>],
    sources: &[usize],
    cutoff: f64,
) -> Vec<(usize, f64)> {
    use std::collections::HashMap;
    let mut best: HashMap<usize, f64> = HashMap::new();
    let mut heap = BinaryHeap::new();
    for &s in sources {
        best.insert(s, 0.0);
        heap.push(HeapEntry(0.0, s));
    }
    let mut settled = Vec::new();
    let mut done = std::collections::HashSet::new();
    while let Some(HeapEntry(dx, x)) = heap.pop() {
        if !done.insert(x) {
            continue;
        }
        settled.push((x, dx));
        for &(y, w) in &adj[x] {
            let nd = dx + w;
            if !within(nd, cutoff) || done.contains(&y) {
                continue;
            }
            let entry = best.entry(y).or_insert(f64::INFINITY);
            if nd < *entry {
                *entry = nd;
                heap.push(HeapEntry(nd, y));
            }
        }
    }
    settled
}

pub(crate) fn full_dijkstra(adj: &[Vec<(usize, f64)>], source: usize) -> Vec<f64> {
    let n = adj.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(HeapEntry(0.0, source));
    while let Some(HeapEntry(dx, x)) = heap.pop() {
        if dx > dist[x] {
            continue;
        }
        for &(y, w) in &adj[x] {
            let nd = dx + w;
            if nd < dist[y] {
                dist[y] = nd;
                heap.push(HeapEntry(nd, y));
            }
        }
    }
    dist
}

fn dijkstra_to(adj: &[Vec<(usize, f64)>], source: usize, target: usize) -> f64 {
    let n = adj.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(HeapEntry(0.0, source));
    while let Some(HeapEntry(dx, x)) = heap.pop() {
        if x == target {
            return dx;
        }
        if dx > dist[x] {
            continue;
        }
        for &(y, w) in &adj[x] {
            let nd = dx + w;
            if nd < dist[y] {
                dist[y] = nd;
                heap.push(HeapEntry(nd, y));
            }
        }
    }
    f64::INFINITY
}
