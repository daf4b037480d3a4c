use serde::{Deserialize, Serialize};

use crate::calculus::sup_values;
use crate::error::{Error, Result};
use crate::space::{Geodesicity, MetricMeasureSpace};
use crate::viewpoint::ScalarField;

/// Candidate constants `C = 2^{k/4}`, `k = 0..=80`.
pub const SCALE_C_GRID: usize = 80;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScaleReductionReport {
    pub b: f64,
    pub h: f64,
    /// Set when the space is not `b`-geodesic (ℤ^d with the ℓ^∞ metric at
    /// `b < 1`, say): the reduction needs short chains.
    pub skipped: Option<String>,
    /// Smallest grid `C` with `μ({|∇f|_h > t}) ≤ C μ({|∇f|_{2b} > t/C})`
    /// for all `t`, per field (`+∞` if none).
    pub per_field: Vec<f64>,
    pub c: f64,
    /// Constant of the chain-and-covering argument.
    pub chain_constant: f64,
    pub holds: bool,
}

/// `max(2m, max_x V(x,3E)/V(x,b))` with `m = ⌈2h/b⌉` chain steps and
/// `E = h + b`.
pub fn chain_constant(space: &MetricMeasureSpace, b: f64, h: f64) -> f64 {
    let m = (2.0 * h / b).ceil();
    let e = h + b;
    let (small, big) = (space.volumes(b), space.volumes(3.0 * e));
    let d = small.iter().zip(&big).map(|(s, l)| l / s).fold(1.0, f64::max);
    (2.0 * m).max(d)
}

fn level(mu: &[f64], g: &[f64], t: f64) -> f64 {
    g.iter().zip(mu).filter(|(v, _)| **v >= t).map(|(_, m)| m).sum()
}

fn best_constant(mu: &[f64], g_h: &[f64], g_2b: &[f64]) -> f64 {
    let mut ts: Vec<f64> = g_h.iter().copied().filter(|&v| v > 0.0).collect();
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    // The left limit t ↑ v of both level sets is where the inequality is
    // tightest.
    let lhs: Vec<f64> = ts.iter().map(|&t| level(mu, g_h, t * (1.0 - 1e-12))).collect();
    (0..=SCALE_C_GRID)
        .map(|k| 2f64.powf(k as f64 / 4.0))
        .find(|&c| {
            ts.iter()
                .zip(&lhs)
                .all(|(&t, &l)| l <= c * level(mu, g_2b, t / c * (1.0 - 1e-12)) * (1.0 + 1e-12))
        })
        .unwrap_or(f64::INFINITY)
}

/// Distributional comparison of the gradients at scales `h ≥ 2b` and `2b`
/// on a `b`-geodesic space.
pub fn scale_reduction_check(
    space: &MetricMeasureSpace,
    b: f64,
    h: f64,
    fields: &[ScalarField],
) -> Result<ScaleReductionReport> {
    if !(b > 0.0 && h >= 2.0 * b) {
        return Err(Error::InvalidParameter(format!("need b > 0 and h ≥ 2b (b = {b}, h = {h})")));
    }
    let mut report = ScaleReductionReport {
        b,
        h,
        skipped: None,
        per_field: Vec::new(),
        c: f64::NAN,
        chain_constant: chain_constant(space, b, h),
        holds: false,
    };
    let geo = space.geodesicity_report(&[b])?;
    if geo[0].class != Geodesicity::Geodesic {
        report.skipped = Some(format!(
            "space is not {b}-geodesic ({:?}); scale reduction needs short chains, as the lattice \
             with steps shorter than its spacing shows",
            geo[0].class
        ));
        return Ok(report);
    }
    let mu = space.measures();
    for f in fields {
        crate::calculus::check_len(space, f.values())?;
        let g_h = sup_values(space, f.values(), h);
        let g_2b = sup_values(space, f.values(), 2.0 * b);
        report.per_field.push(best_constant(mu, &g_h, &g_2b));
    }
    report.c = report.per_field.iter().copied().fold(1.0, f64::max);
    report.holds = report.c <= report.chain_constant;
    Ok(report)
}
