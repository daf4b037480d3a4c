use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{component_count, MetricMeasureSpace, DIST_EPS};

/// A graph large-scale equivalent to the source, built on an `h`-net.
#[derive(Clone, Debug)]
pub struct Discretization {
    pub graph: Arc<MetricMeasureSpace>,
    /// Net points, in vertex order.
    pub centers: Vec<usize>,
    /// Source point ↦ vertex of its Voronoi cell.
    pub map: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct DiscretizationFile {
    centers: Vec<usize>,
    map: Vec<usize>,
    measures: Vec<f64>,
}

impl Discretization {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&DiscretizationFile {
            centers: self.centers.clone(),
            map: self.map.clone(),
            measures: self.graph.measures().to_vec(),
        })?)
    }
}

/// Maximal `h`-separated set, scanning points in index order.
pub fn greedy_net(space: &MetricMeasureSpace, h: f64) -> Vec<usize> {
    let mut covered = vec![false; space.len()];
    let mut net = Vec::new();
    for x in 0..space.len() {
        if covered[x] {
            continue;
        }
        net.push(x);
        for y in space.ball_indices(x, h) {
            covered[y] = true;
        }
    }
    net
}

/// Greedy `h`-net with Voronoi cell measures (ties to the lower index),
/// edges between centers within `2h`, and the unit path metric.
pub fn discretize(space: &MetricMeasureSpace, h: f64) -> Result<Discretization> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidParameter(format!("discretization scale {h} must be positive")));
    }
    if space.is_empty() {
        return Err(Error::InvalidParameter("cannot discretize an empty space".into()));
    }
    let centers = greedy_net(space, h);
    let n = space.len();
    let mut best = vec![(f64::INFINITY, 0usize); n];
    for (v, &c) in centers.iter().enumerate() {
        for (x, d) in space.distances_from(c).into_iter().enumerate() {
            // Earlier centers win ties.
            if d < best[x].0 - DIST_EPS {
                best[x] = (d, v);
            }
        }
    }
    let map: Vec<usize> = best.iter().map(|b| b.1).collect();
    let mut measures = vec![0.0; centers.len()];
    for (x, &v) in map.iter().enumerate() {
        measures[v] += space.measure(x);
    }
    let mut index = vec![usize::MAX; n];
    for (v, &c) in centers.iter().enumerate() {
        index[c] = v;
    }
    let mut edges = Vec::new();
    let mut adj = vec![Vec::new(); centers.len()];
    for (v, &c) in centers.iter().enumerate() {
        for y in space.ball_indices(c, 2.0 * h) {
            let w = index[y];
            if w != usize::MAX && w > v {
                edges.push((v, w, 1.0));
                adj[v].push((w, 1.0));
                adj[w].push((v, 1.0));
            }
        }
    }
    let components = component_count(&adj);
    if components > 1 {
        return Err(Error::Disconnected { h, components });
    }
    let graph = MetricMeasureSpace::from_graph(format!("{}/net(h={h})", space.name()), centers.len(), &edges, measures)?;
    Ok(Discretization {
        graph: Arc::new(graph),
        centers,
        map,
    })
}
