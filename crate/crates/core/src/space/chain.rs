//! Chain metrics `d_b` and geodesicity diagnostics.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{full_dijkstra, Metric, MetricMeasureSpace, DIST_EPS};
use crate::error::{Error, Result};

/// The space re-metrized by shortest `b`-chains.
///
/// Pairs in different `b`-components sit at `f64::INFINITY`; that sentinel
/// is only ever produced here, and `disconnected` is raised with it.
#[derive(Clone, Debug)]
pub struct ChainMetric {
    pub space: MetricMeasureSpace,
    pub b: f64,
    pub disconnected: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum Geodesicity {
    /// `d_b = d`.
    Geodesic,
    /// `d_b ≤ multiplicative · max(d, b)` and `d_b ≤ d + additive`.
    QuasiGeodesic { multiplicative: f64, additive: f64 },
    Disconnected { components: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeodesicityEntry {
    pub b: f64,
    pub multiplicative: f64,
    pub additive: f64,
    pub class: Geodesicity,
}

impl MetricMeasureSpace {
    /// `d_b(x, y)`: the length of the shortest chain from `x` to `y` whose
    /// steps all have length at most `b`.
    pub fn chain_metric(&self, b: f64) -> Result<ChainMetric> {
        if !(b > 0.0) {
            return Err(Error::InvalidParameter(format!("chain step {b} must be positive")));
        }
        let n = self.len();
        let adj: Vec<Vec<(usize, f64)>> = (0..n)
            .into_par_iter()
            .map(|x| {
                self.ball_with_distances(x, b)
                    .into_iter()
                    .filter(|&(y, _)| y != x)
                    .collect()
            })
            .collect();
        let components = super::component_count(&adj);
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|x| full_dijkstra(&adj, x))
            .collect();
        let d: Vec<f64> = rows.into_iter().flatten().collect();
        let space = MetricMeasureSpace {
            name: format!("{}/chain(b={b})", self.name),
            measure: self.measure.clone(),
            metric: Metric::Dense { n, d },
            coords: self.coords.clone(),
            disconnected: components > 1,
        };
        Ok(ChainMetric {
            space,
            b,
            disconnected: components > 1,
        })
    }

    /// Classifies the space at each chain step `b`.
    pub fn geodesicity_report(&self, b_grid: &[f64]) -> Result<Vec<GeodesicityEntry>> {
        if b_grid.is_empty() {
            return Err(Error::InvalidParameter("empty chain-step grid".into()));
        }
        let n = self.len();
        b_grid
            .iter()
            .map(|&b| {
                let chain = self.chain_metric(b)?;
                if chain.disconnected {
                    let adj: Vec<Vec<(usize, f64)>> = (0..n)
                        .map(|x| {
                            self.ball_indices(x, b)
                                .into_iter()
                                .map(|y| (y, 1.0))
                                .collect()
                        })
                        .collect();
                    return Ok(GeodesicityEntry {
                        b,
                        multiplicative: f64::INFINITY,
                        additive: f64::INFINITY,
                        class: Geodesicity::Disconnected {
                            components: super::component_count(&adj),
                        },
                    });
                }
                let (mult, add) = (0..n)
                    .into_par_iter()
                    .map(|x| {
                        let d = self.distances_from(x);
                        let db = chain.space.distances_from(x);
                        let mut m = 1.0_f64;
                        let mut a = 0.0_f64;
                        for y in 0..n {
                            if y == x {
                                continue;
                            }
                            m = m.max(db[y] / d[y].max(b));
                            a = a.max(db[y] - d[y]);
                        }
                        (m, a)
                    })
                    .reduce(|| (1.0, 0.0), |p, q| (p.0.max(q.0), p.1.max(q.1)));
                let scale = b.max(1.0);
                let class = if add <= DIST_EPS * scale * 10.0 {
                    Geodesicity::Geodesic
                } else {
                    Geodesicity::QuasiGeodesic {
                        multiplicative: mult,
                        additive: add,
                    }
                };
                let (mult, add) = if class == Geodesicity::Geodesic {
                    (1.0, 0.0)
                } else {
                    (mult, add)
                };
                Ok(GeodesicityEntry {
                    b,
                    multiplicative: mult,
                    additive: add,
                    class,
                })
            })
            .collect()
    }
}
