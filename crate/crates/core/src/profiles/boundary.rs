use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::family::{collect_subsets, AllSubsets, SubsetFamily};
use super::jp::MaskEvaluator;
use super::{Mode, ProfileCurve, Quantity, Witness, ENUMERATION_LIMIT};
use crate::calculus::SupBackend;
use crate::error::{Error, Result};
use crate::space::{MetricMeasureSpace, Subset};

/// `(μ(A), μ(∂_h A), A)` over a family; exhaustive families are evaluated
/// by bitmask.
fn boundary_table(
    space: &Arc<MetricMeasureSpace>,
    h: f64,
    family: &dyn SubsetFamily,
) -> Result<Vec<(f64, f64, Subset)>> {
    if family.exhaustive() {
        let n = space.len();
        if n > ENUMERATION_LIMIT {
            return Err(Error::TooLarge {
                n,
                limit: ENUMERATION_LIMIT,
            });
        }
        let sup = SupBackend::new(space.clone(), h);
        let everything: Vec<usize> = (0..n).collect();
        let eval = MaskEvaluator::new(&sup, &everything);
        return Ok((1..1u64 << n)
            .into_par_iter()
            .map(|m| {
                let members = (0..n).filter(|i| m >> i & 1 == 1).collect();
                (eval.volume(m), eval.gradient_l1(m), Subset::from_sorted(members, space.measures()))
            })
            .collect());
    }
    let sets = collect_subsets(&[family], space, h, f64::INFINITY)?;
    Ok(sets
        .into_par_iter()
        .map(|s| (s.measure(), space.boundary_measure(&s, h), s))
        .collect())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundaryProfiles {
    /// `I(t) = inf_{μ(A) ≥ t} μ(∂_h A)`: exact by enumeration, otherwise an
    /// upper bound over the family.
    pub full: ProfileCurve,
    /// `I↓_𝒜(t)`, infimum over members with `μ(A) ≥ t` (`+∞` when none).
    pub lower: ProfileCurve,
    /// `I↑_𝒜(t)`, supremum over members with `μ(A) ≤ t` (`−∞` when none).
    pub upper: ProfileCurve,
}

fn witness(s: &Subset) -> Option<Witness> {
    Some(Witness {
        subset: s.members().to_vec(),
        field: Vec::new(),
    })
}

fn extremes(table: &[(f64, f64, Subset)], ts: &[f64]) -> (Vec<f64>, Vec<Option<Witness>>, Vec<f64>, Vec<Option<Witness>>) {
    let eps = 1e-12;
    let mut lo = (Vec::new(), Vec::new());
    let mut hi = (Vec::new(), Vec::new());
    for &t in ts {
        let down = table
            .iter()
            .filter(|e| e.0 >= t * (1.0 - eps))
            .min_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.2.members().cmp(b.2.members())));
        lo.0.push(down.map_or(f64::INFINITY, |e| e.1));
        lo.1.push(down.and_then(|e| witness(&e.2)));
        let up = table
            .iter()
            .filter(|e| e.0 <= t * (1.0 + eps))
            .max_by(|a, b| a.1.total_cmp(&b.1).then_with(|| b.2.members().cmp(a.2.members())));
        hi.0.push(up.map_or(f64::NEG_INFINITY, |e| e.1));
        hi.1.push(up.and_then(|e| witness(&e.2)));
    }
    (lo.0, lo.1, hi.0, hi.1)
}

/// `I`, `I↓_𝒜` and `I↑_𝒜` at scale `h` on a grid of masses.
pub fn boundary_profile(
    space: &Arc<MetricMeasureSpace>,
    h: f64,
    family: &dyn SubsetFamily,
    ts: &[f64],
) -> Result<BoundaryProfiles> {
    let mut args = ts.to_vec();
    args.sort_by(f64::total_cmp);
    let table = boundary_table(space, h, family)?;
    if table.is_empty() {
        return Err(Error::InvalidParameter(format!("subset family {} is empty", family.name())));
    }
    let (lv, lw, uv, uw) = extremes(&table, &args);
    let (full_values, full_witnesses, full_mode) = if family.exhaustive() {
        (lv.clone(), lw.clone(), Mode::Exact)
    } else if space.len() <= ENUMERATION_LIMIT {
        let all = boundary_table(space, h, &AllSubsets)?;
        let (v, w, _, _) = extremes(&all, &args);
        (v, w, Mode::Exact)
    } else {
        (lv.clone(), lw.clone(), Mode::UpperBound)
    };
    let curve = |quantity, mode, values, witnesses, tag: &str| ProfileCurve {
        label: format!("{tag}[{}; h={h}]", family.name()),
        quantity,
        mode,
        args: args.clone(),
        values,
        witnesses,
    };
    Ok(BoundaryProfiles {
        full: curve(Quantity::Boundary { h }, full_mode, full_values, full_witnesses, "I"),
        lower: curve(Quantity::BoundaryLower { h }, Mode::Exact, lv, lw, "I_lower"),
        upper: curve(Quantity::BoundaryUpper { h }, Mode::Exact, uv, uw, "I_upper"),
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheegerResult {
    /// `min μ(∂_h A)/μ(A)` over members with `0 < μ(A) ≤ μ(X)/2`.
    pub constant: f64,
    pub witness: Vec<usize>,
    pub volume: f64,
    pub boundary: f64,
    pub mode: Mode,
}

/// Cheeger constant of a family at scale `h`.
pub fn cheeger(space: &Arc<MetricMeasureSpace>, h: f64, family: &dyn SubsetFamily) -> Result<CheegerResult> {
    let half = space.total_measure() / 2.0;
    let table = boundary_table(space, h, family)?;
    let best = table
        .iter()
        .filter(|e| e.0 > 0.0 && e.0 <= half * (1.0 + 1e-12))
        .map(|e| (e.1 / e.0, e))
        .min_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1 .2.members().cmp(b.1 .2.members())))
        .ok_or_else(|| {
            Error::InvalidParameter(format!("subset family {} has no member of at most half the mass", family.name()))
        })?;
    Ok(CheegerResult {
        constant: best.0,
        witness: best.1 .2.members().to_vec(),
        volume: best.1 .0,
        boundary: best.1 .1,
        mode: if family.exhaustive() { Mode::Exact } else { Mode::UpperBound },
    })
}
