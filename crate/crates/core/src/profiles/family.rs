use std::collections::HashSet;
use std::sync::Arc;

use nalgebra::SymmetricEigen;
use rayon::prelude::*;

use super::ENUMERATION_LIMIT;
use crate::calculus::QuadraticForm;
use crate::error::{Error, Result};
use crate::registry::Registry;
use crate::space::{MetricMeasureSpace, Subset};
use crate::viewpoint::lazy_kernel;

/// Grids at or below this size get every box position; larger grids get
/// corner-anchored and centred boxes only.
pub const FULL_BOX_LIMIT: usize = 256;
/// Spectral sweeps need a dense eigensolve of the whole space.
pub const SWEEP_LIMIT: usize = 1024;
const RADIUS_CAP: usize = 64;

/// A lazily materialized subset.
#[derive(Clone, Debug, PartialEq)]
pub enum SubsetSpec {
    Ball { center: usize, radius: f64 },
    /// Inclusive coordinate box.
    Box { lo: Vec<i64>, hi: Vec<i64> },
    /// Bit `i` selects point `i`.
    Mask(u64),
    Members(Vec<usize>),
}

impl SubsetSpec {
    pub fn materialize(&self, space: &MetricMeasureSpace) -> Result<Subset> {
        match self {
            SubsetSpec::Ball { center, radius } => space.ball(*center, *radius),
            SubsetSpec::Box { lo, hi } => {
                let coords = space
                    .coords()
                    .ok_or_else(|| Error::InvalidParameter(format!("{} has no coordinates for boxes", space.name())))?;
                let inside = coords
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| c.iter().zip(lo.iter().zip(hi)).all(|(v, (l, h))| l <= v && v <= h))
                    .map(|(i, _)| i);
                Ok(Subset::from_sorted(inside.collect(), space.measures()))
            }
            SubsetSpec::Mask(bits) => {
                Ok(Subset::from_sorted((0..space.len().min(64)).filter(|i| bits >> i & 1 == 1).collect(), space.measures()))
            }
            SubsetSpec::Members(m) => space.subset(m.iter().copied()),
        }
    }
}

/// A family `𝒜` of subsets over which profiles are optimized.
pub trait SubsetFamily: Send + Sync {
    fn name(&self) -> String;

    /// Members of the family; `h` is the working scale.
    fn members(&self, space: &Arc<MetricMeasureSpace>, h: f64) -> Result<Vec<SubsetSpec>>;

    /// Whether the family is every nonempty subset.
    fn exhaustive(&self) -> bool {
        false
    }
}

/// Every nonempty subset; only for spaces of at most 18 points.
pub struct AllSubsets;

impl SubsetFamily for AllSubsets {
    fn name(&self) -> String {
        "all".into()
    }

    fn members(&self, space: &Arc<MetricMeasureSpace>, _h: f64) -> Result<Vec<SubsetSpec>> {
        if space.len() > ENUMERATION_LIMIT {
            return Err(Error::TooLarge {
                n: space.len(),
                limit: ENUMERATION_LIMIT,
            });
        }
        Ok((1..1u64 << space.len()).map(SubsetSpec::Mask).collect())
    }

    fn exhaustive(&self) -> bool {
        true
    }
}

/// Distinct pairwise distances, thinned to at most `cap` quantiles.
pub fn radius_grid(space: &MetricMeasureSpace, cap: usize) -> Vec<f64> {
    let n = space.len();
    let sources: Vec<usize> = if n <= 256 { (0..n).collect() } else { (0..n).step_by(n / 64).collect() };
    let mut all: Vec<f64> = sources
        .par_iter()
        .flat_map_iter(|&x| space.distances_from(x).into_iter().filter(|d| d.is_finite()))
        .collect();
    all.sort_by(f64::total_cmp);
    all.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * b.abs().max(1.0));
    if all.len() > cap {
        let step = (all.len() - 1) as f64 / (cap - 1) as f64;
        all = (0..cap).map(|i| all[(i as f64 * step).round() as usize]).collect();
        all.dedup();
    }
    all
}

/// Closed balls at every centre and every radius of [`radius_grid`].
pub struct Balls;

impl SubsetFamily for Balls {
    fn name(&self) -> String {
        "balls".into()
    }

    fn members(&self, space: &Arc<MetricMeasureSpace>, _h: f64) -> Result<Vec<SubsetSpec>> {
        let radii = radius_grid(space, RADIUS_CAP);
        Ok((0..space.len())
            .flat_map(|center| radii.iter().map(move |&radius| SubsetSpec::Ball { center, radius }))
            .collect())
    }
}

/// Coordinate boxes on grid spaces.
pub struct Boxes;

fn side_set(len: i64, full: bool) -> Vec<i64> {
    if full {
        return (1..=len).collect();
    }
    let mut s: Vec<i64> = (1..=len.min(8)).collect();
    let mut k = 8.0_f64;
    while (k as i64) < len {
        s.push(k.round() as i64);
        k *= 2f64.powf(0.25);
    }
    s.extend([len, len / 2, (len + 1) / 2, len / 4]);
    s.retain(|&v| v >= 1 && v <= len);
    s.sort_unstable();
    s.dedup();
    s
}

impl SubsetFamily for Boxes {
    fn name(&self) -> String {
        "boxes".into()
    }

    fn members(&self, space: &Arc<MetricMeasureSpace>, _h: f64) -> Result<Vec<SubsetSpec>> {
        let coords = space
            .coords()
            .ok_or_else(|| Error::InvalidParameter(format!("{} has no coordinates for boxes", space.name())))?;
        let d = coords.first().map_or(0, Vec::len);
        let lo: Vec<i64> = (0..d).map(|k| coords.iter().map(|c| c[k]).min().unwrap_or(0)).collect();
        let hi: Vec<i64> = (0..d).map(|k| coords.iter().map(|c| c[k]).max().unwrap_or(0)).collect();
        let full = space.len() <= FULL_BOX_LIMIT;
        // Per dimension: the admissible (start, end) intervals.
        let per_dim: Vec<Vec<(i64, i64)>> = (0..d)
            .map(|k| {
                let len = hi[k] - lo[k] + 1;
                let mut v = Vec::new();
                for s in side_set(len, full) {
                    if full {
                        v.extend((lo[k]..=hi[k] - s + 1).map(|a| (a, a + s - 1)));
                    } else {
                        let mid = lo[k] + (len - s) / 2;
                        v.push((lo[k], lo[k] + s - 1));
                        v.push((mid, mid + s - 1));
                    }
                }
                v.sort_unstable();
                v.dedup();
                v
            })
            .collect();
        let mut out: Vec<(Vec<i64>, Vec<i64>)> = vec![(Vec::new(), Vec::new())];
        for dim in &per_dim {
            out = out
                .into_iter()
                .flat_map(|(l, h)| {
                    dim.iter().map(move |&(a, b)| {
                        let (mut l, mut h) = (l.clone(), h.clone());
                        l.push(a);
                        h.push(b);
                        (l, h)
                    })
                })
                .collect();
        }
        Ok(out.into_iter().map(|(lo, hi)| SubsetSpec::Box { lo, hi }).collect())
    }
}

/// Superlevel sets of spectral fields: the second eigenfield of the lazy
/// walk on the whole space, and the lowest Dirichlet eigenfield of balls
/// around the most central point.
pub struct Sweeps;

fn prefixes(order: &[usize], out: &mut Vec<SubsetSpec>) {
    for k in 1..=order.len() {
        let mut m = order[..k].to_vec();
        m.sort_unstable();
        out.push(SubsetSpec::Members(m));
    }
}

fn sorted_by_field(members: &[usize], values: &[f64], descending: bool) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..members.len()).collect();
    idx.sort_by(|&a, &b| {
        let c = values[a].total_cmp(&values[b]);
        if descending {
            c.reverse()
        } else {
            c
        }
    });
    idx.into_iter().map(|i| members[i]).collect()
}

impl SubsetFamily for Sweeps {
    fn name(&self) -> String {
        "sweeps".into()
    }

    fn members(&self, space: &Arc<MetricMeasureSpace>, h: f64) -> Result<Vec<SubsetSpec>> {
        let n = space.len();
        let kernel = lazy_kernel(space.clone(), h)?;
        let mut out = Vec::new();
        if n <= SWEEP_LIMIT && n >= 2 {
            let q = QuadraticForm::new(&kernel, &space.whole());
            let eig = SymmetricEigen::new(q.dense());
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
            let col = eig.eigenvectors.column(order[1]);
            let mu = space.measures();
            let fiedler: Vec<f64> = (0..n).map(|x| col[x] / mu[x].sqrt()).collect();
            let members: Vec<usize> = (0..n).collect();
            prefixes(&sorted_by_field(&members, &fiedler, true), &mut out);
            prefixes(&sorted_by_field(&members, &fiedler, false), &mut out);
        }
        let center = central_point(space);
        for r in radius_grid(space, 16) {
            let ball = space.ball(center, r)?;
            if ball.len() == n || ball.len() > crate::linalg::DENSE_EIGEN_LIMIT {
                continue;
            }
            let q = QuadraticForm::new(&kernel, &ball);
            let (_, values) = q.minimize();
            prefixes(&sorted_by_field(q.members(), &values, true), &mut out);
        }
        Ok(out)
    }
}

/// A point of (approximately, above 256 points) minimal eccentricity.
pub fn central_point(space: &MetricMeasureSpace) -> usize {
    let n = space.len();
    let sources: Vec<usize> = if n <= 256 { (0..n).collect() } else { (0..n).step_by(n / 64).collect() };
    let rows: Vec<Vec<f64>> = sources.par_iter().map(|&s| space.distances_from(s)).collect();
    let ecc = |x: usize| rows.iter().map(|r| r[x]).fold(0.0, f64::max);
    (0..n).min_by(|&a, &b| ecc(a).total_cmp(&ecc(b))).unwrap_or(0)
}

/// An explicit list of subsets.
pub struct Provided(pub Vec<Subset>);

impl SubsetFamily for Provided {
    fn name(&self) -> String {
        format!("provided({})", self.0.len())
    }

    fn members(&self, _space: &Arc<MetricMeasureSpace>, _h: f64) -> Result<Vec<SubsetSpec>> {
        if self.0.is_empty() {
            return Err(Error::InvalidParameter("the provided subset family is empty".into()));
        }
        Ok(self.0.iter().map(|s| SubsetSpec::Members(s.members().to_vec())).collect())
    }
}

/// Registered parameterless families: `all`, `balls`, `boxes`, `sweeps`.
pub fn subset_families() -> Registry<dyn SubsetFamily> {
    let mut r: Registry<dyn SubsetFamily> = Registry::new("subset family");
    r.register("all", Arc::new(AllSubsets))
        .register("balls", Arc::new(Balls))
        .register("boxes", Arc::new(Boxes))
        .register("sweeps", Arc::new(Sweeps));
    r
}

/// Materialized, deduplicated, nonempty members of several families with
/// `μ(A) ≤ max_volume`, in a deterministic order.
pub fn collect_subsets(
    families: &[&dyn SubsetFamily],
    space: &Arc<MetricMeasureSpace>,
    h: f64,
    max_volume: f64,
) -> Result<Vec<Subset>> {
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let mut out = Vec::new();
    for fam in families {
        let specs = fam.members(space, h)?;
        let subsets: Vec<Subset> = specs
            .par_iter()
            .map(|s| s.materialize(space))
            .collect::<Result<Vec<_>>>()?;
        for s in subsets {
            if !s.is_empty() && s.measure() <= max_volume * (1.0 + 1e-12) && seen.insert(s.members().to_vec()) {
                out.push(s);
            }
        }
    }
    Ok(out)
}

/// The families used by the `candidates` strategy for this space.
pub fn default_families(space: &MetricMeasureSpace) -> Vec<Arc<dyn SubsetFamily>> {
    let mut v: Vec<Arc<dyn SubsetFamily>> = vec![Arc::new(Balls)];
    if space.coords().is_some() {
        v.push(Arc::new(Boxes));
    }
    v.push(Arc::new(Sweeps));
    v
}
