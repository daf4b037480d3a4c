//! Large-scale equivalence certificates, discretization, the pullback `ψ_h`
//! and its transfer lemmas, thick supports, rough volume preservation and
//! scale reduction.

mod discretize;
mod pullback;
mod scale;
mod thick;

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use discretize::{discretize, greedy_net, Discretization};
pub use pullback::{pullback, pullback_lemmas, LemmaCheck, PullbackReport};
pub use scale::{chain_constant, scale_reduction_check, ScaleReductionReport, SCALE_C_GRID};
pub use thick::{is_thick, rough_volume_check, thicken_support, RoughVolumeReport, ThickeningResult, VolumeClause};

use crate::error::{Error, Result};
use crate::space::{MetricMeasureSpace, DIST_EPS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axiom {
    /// Distances go to infinity together.
    Distances,
    /// Almost onto.
    Onto,
    /// Two-sided ball-volume comparison.
    Volumes,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Violation {
    pub axiom: Axiom,
    pub message: String,
    /// Offending pair or point(s) in the source.
    pub witness: Vec<usize>,
}

/// Sampled constants of a map `F: X → X'`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LseCertificate {
    pub source: String,
    pub target: String,
    pub map: Vec<usize>,
    /// Distinct positive source distances, ascending.
    pub distances: Vec<f64>,
    /// `ρ₋(s) = min {d'(Fx,Fy) : d(x,y) ≥ s}` at each source distance.
    pub rho_minus: Vec<f64>,
    /// `ρ₊(s) = max {d'(Fx,Fy) : d(x,y) ≤ s}` at each source distance.
    pub rho_plus: Vec<f64>,
    /// `max_{x'} d'(x', F(X))`
    pub onto: f64,
    /// Smallest `L ≥ 1` with `d/L − L ≤ d'(Fx,Fy) ≤ L·d + L` on all pairs.
    pub lipschitz: f64,
    pub radii: Vec<f64>,
    /// `C_r = max_x max(V'(Fx,r)/V(x,r), V(x,r)/V'(Fx,r))`.
    pub volume_constants: Vec<f64>,
    pub violations: Vec<Violation>,
    pub passes: bool,
    pub note: String,
}

const FINITE_SAMPLE_NOTE: &str = "finite-sample certificate: the distance axiom is asymptotic, only its sampled \
     moduli over the observed distance range are certified";

impl LseCertificate {
    /// `ρ₊(s)`: largest image distance over pairs at source distance `≤ s`.
    pub fn rho_plus_at(&self, s: f64) -> f64 {
        let i = self.distances.partition_point(|&d| d <= s + DIST_EPS);
        if i == 0 {
            0.0
        } else {
            self.rho_plus[i - 1]
        }
    }

    /// Largest source distance of a pair whose images are within `s`.
    pub fn source_spread(&self, s: f64) -> f64 {
        self.distances
            .iter()
            .zip(&self.rho_minus)
            .filter(|(_, &m)| m <= s + DIST_EPS)
            .map(|(&d, _)| d)
            .fold(0.0, f64::max)
    }

    pub fn max_volume_constant(&self) -> f64 {
        self.volume_constants.iter().copied().fold(1.0, f64::max)
    }
}

#[derive(Clone, Copy)]
struct Bin {
    min: f64,
    min_pair: (usize, usize),
    max: f64,
}

fn merge_bins(mut a: HashMap<i64, Bin>, b: HashMap<i64, Bin>) -> HashMap<i64, Bin> {
    for (k, v) in b {
        a.entry(k)
            .and_modify(|e| {
                if v.min < e.min || (v.min == e.min && v.min_pair < e.min_pair) {
                    e.min = v.min;
                    e.min_pair = v.min_pair;
                }
                e.max = e.max.max(v.max);
            })
            .or_insert(v);
    }
    a
}

pub(crate) fn check_map(src: &MetricMeasureSpace, dst: &MetricMeasureSpace, map: &[usize]) -> Result<()> {
    if map.len() != src.len() {
        return Err(Error::InvalidParameter(format!(
            "map has {} entries for a source of {} points",
            map.len(),
            src.len()
        )));
    }
    if let Some((index, &target)) = map.iter().enumerate().find(|(_, &t)| t >= dst.len()) {
        return Err(Error::MapOutOfRange {
            index,
            target,
            len: dst.len(),
        });
    }
    Ok(())
}

/// Image-distance extremes over all source pairs, binned by source distance.
fn distance_moduli(src: &MetricMeasureSpace, dst: &MetricMeasureSpace, map: &[usize]) -> Vec<(f64, Bin)> {
    let n = src.len();
    let bins = (0..n)
        .into_par_iter()
        .fold(HashMap::new, |mut acc: HashMap<i64, Bin>, x| {
            let ds = src.distances_from(x);
            let dt = dst.distances_from(map[x]);
            for y in x + 1..n {
                let key = (ds[y] / DIST_EPS).round() as i64;
                let d = dt[map[y]];
                acc.entry(key)
                    .and_modify(|e| {
                        if d < e.min {
                            e.min = d;
                            e.min_pair = (x, y);
                        }
                        e.max = e.max.max(d);
                    })
                    .or_insert(Bin {
                        min: d,
                        min_pair: (x, y),
                        max: d,
                    });
            }
            acc
        })
        .reduce(HashMap::new, merge_bins);
    let mut out: Vec<(f64, Bin)> = bins
        .into_iter()
        .filter(|(k, _)| *k > 0)
        .map(|(k, b)| (k as f64 * DIST_EPS, b))
        .collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// Certifies `F: X → X'` on samples: distance moduli, the onto constant and
/// volume constants on `radii`. Violations carry witnesses.
pub fn certify_lse(
    src: &MetricMeasureSpace,
    dst: &MetricMeasureSpace,
    map: &[usize],
    radii: &[f64],
) -> Result<LseCertificate> {
    check_map(src, dst, map)?;
    let bins = distance_moduli(src, dst, map);
    let distances: Vec<f64> = bins.iter().map(|b| b.0).collect();
    let mut rho_plus = Vec::with_capacity(bins.len());
    let mut running = 0.0_f64;
    for b in &bins {
        running = running.max(b.1.max);
        rho_plus.push(running);
    }
    let mut rho_minus = vec![0.0; bins.len()];
    let mut witness_pairs = vec![(0, 0); bins.len()];
    let mut running = (f64::INFINITY, (0, 0));
    for (i, b) in bins.iter().enumerate().rev() {
        if b.1.min < running.0 {
            running = (b.1.min, b.1.min_pair);
        }
        rho_minus[i] = running.0;
        witness_pairs[i] = running.1;
    }
    let lipschitz = bins.iter().fold(1.0_f64, |l, (d, b)| {
        let upper = b.max / (d + 1.0);
        let lower = (-b.min + (b.min * b.min + 4.0 * d).sqrt()) / 2.0;
        l.max(upper).max(lower)
    });
    let mut violations = Vec::new();
    if let (Some(&top), Some(&bottom)) = (rho_minus.last(), rho_plus.first()) {
        // Far pairs must land strictly farther apart than the closest pairs
        // can; a collapse to a bounded set fails this.
        let floor = if distances.len() >= 2 { bottom } else { 0.0 };
        if !(top > floor) {
            let (x, y) = *witness_pairs.last().expect("nonempty");
            violations.push(Violation {
                axiom: Axiom::Distances,
                message: format!(
                    "pair at source distance {} maps to distance {top}, not beyond ρ₊({}) = {floor}",
                    distances.last().expect("nonempty"),
                    distances[0]
                ),
                witness: vec![x, y],
            });
        }
    }
    let image = dst.subset(map.iter().copied())?;
    let to_image = dst.distance_to_set(&image);
    let (far, onto) = to_image
        .iter()
        .copied()
        .enumerate()
        .fold((0, 0.0_f64), |a, b| if b.1 > a.1 { b } else { a });
    if !onto.is_finite() {
        violations.push(Violation {
            axiom: Axiom::Onto,
            message: format!("target point {far} is not within finite distance of the image"),
            witness: vec![far],
        });
    }
    let mut volume_constants = Vec::with_capacity(radii.len());
    for &r in radii {
        let vs = src.volumes(r);
        let vt = dst.volumes(r);
        let (x, c) = (0..src.len())
            .map(|x| {
                let (a, b) = (vs[x], vt[map[x]]);
                (x, (a / b).max(b / a))
            })
            .fold((0, 1.0_f64), |a, b| if b.1 > a.1 { b } else { a });
        if !c.is_finite() {
            violations.push(Violation {
                axiom: Axiom::Volumes,
                message: format!("volume ratio at radius {r} is unbounded"),
                witness: vec![x],
            });
        }
        volume_constants.push(c);
    }
    Ok(LseCertificate {
        source: src.name().to_string(),
        target: dst.name().to_string(),
        map: map.to_vec(),
        distances,
        rho_minus,
        rho_plus,
        onto,
        lipschitz,
        radii: radii.to_vec(),
        volume_constants,
        passes: violations.is_empty(),
        violations,
        note: FINITE_SAMPLE_NOTE.into(),
    })
}

/// Two-sided ball-volume constant at a single radius.
pub(crate) fn volume_constant(src: &MetricMeasureSpace, dst: &MetricMeasureSpace, map: &[usize], r: f64) -> f64 {
    let vs = src.volumes(r);
    let vt = dst.volumes(r);
    (0..src.len())
        .map(|x| (vs[x] / vt[map[x]]).max(vt[map[x]] / vs[x]))
        .fold(1.0, f64::max)
}

#[cfg(test)]
mod tests;
