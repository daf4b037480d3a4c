use serde::{Deserialize, Serialize};

use super::RateFunction;
use crate::calculus::{kernel_values, GradientBackend};
use crate::error::{Error, Result};
use crate::space::MetricMeasureSpace;
use crate::viewpoint::{norm, Kernel, ScalarField};

/// Grid for the volume dilation `C'` in `‖f‖_p ≤ C φ(C'|Ω|) ‖|∇f|‖_p`.
pub const SOBOLEV_C_PRIME: [f64; 4] = [1.0, 2.0, 4.0, 8.0];

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SobolevReport {
    pub passes: bool,
    /// Smallest `C` over the `C'` grid.
    pub c: f64,
    pub c_prime: f64,
    /// `C` for each `C'` in [`SOBOLEV_C_PRIME`].
    pub c_by_c_prime: Vec<f64>,
    /// Sample attaining `C` at the best `C'`.
    pub worst: Option<usize>,
    /// Samples with zero gradient norm but nonzero `p`-norm.
    pub unfalsifiable: Vec<usize>,
}

/// Smallest `C` (over `C' ∈ {1,2,4,8}`) for which the Sobolev inequality
/// holds on every sample. Passing is relative to the samples, and to
/// `c_max` when given.
pub fn sobolev_verify(
    backend: &dyn GradientBackend,
    p: f64,
    phi: &RateFunction,
    fields: &[ScalarField],
    c_max: Option<f64>,
) -> Result<SobolevReport> {
    crate::calculus::check_p(p)?;
    phi.validate()?;
    let space = backend.space();
    let mu = space.measures();
    let mut samples = Vec::with_capacity(fields.len());
    let mut unfalsifiable = Vec::new();
    for (i, f) in fields.iter().enumerate() {
        crate::calculus::check_len(space, f.values())?;
        let top = norm(mu, f.values(), p);
        let bottom = backend.norm(f.values(), p);
        if top > 0.0 && bottom <= top * 1e-14 {
            unfalsifiable.push(i);
        }
        samples.push((top, bottom, f.support().measure()));
    }
    let c_by_c_prime: Vec<(f64, Option<usize>)> = SOBOLEV_C_PRIME
        .iter()
        .map(|&cp| {
            samples
                .iter()
                .enumerate()
                .filter(|(_, s)| s.0 > 0.0 && s.1 > s.0 * 1e-14)
                .map(|(i, &(top, bottom, omega))| (top / (phi.eval(cp * omega) * bottom), Some(i)))
                .fold((0.0, None), |a, b| if b.0 > a.0 { b } else { a })
        })
        .collect();
    let (k, &(c, worst)) = c_by_c_prime
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .0.total_cmp(&b.1 .0))
        .expect("nonempty grid");
    let passes = unfalsifiable.is_empty() && c.is_finite() && c_max.is_none_or(|m| c <= m);
    Ok(SobolevReport {
        passes,
        c,
        c_prime: SOBOLEV_C_PRIME[k],
        c_by_c_prime: c_by_c_prime.iter().map(|e| e.0).collect(),
        worst: if unfalsifiable.is_empty() { worst } else { unfalsifiable.first().copied() },
        unfalsifiable,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NashReport {
    pub passes: bool,
    /// Smallest `C` with `‖f‖₂² ≤ C φ²(C ‖f‖₁²/‖f‖₂²) ‖|∇f|_{P²,2}‖₂²` on
    /// every sample (`+∞` if some sample has zero energy).
    pub c: f64,
    /// Per-sample smallest `C`.
    pub per_sample: Vec<f64>,
    /// Per-sample `rhs/lhs` at the common `C` (≥ 1 when the check passes).
    pub margins: Vec<f64>,
    pub worst: usize,
}

/// Smallest `C > 0` with `lhs ≤ C φ²(C a) g`, by bisection in `log C`.
fn nash_constant(phi: &RateFunction, lhs: f64, a: f64, g: f64) -> f64 {
    let holds = |c: f64| lhs <= c * phi.eval(c * a).powi(2) * g;
    if g <= 0.0 {
        return f64::INFINITY;
    }
    let (mut lo, mut hi) = (1e-12_f64, 1.0_f64);
    while !holds(hi) {
        lo = hi;
        hi *= 2.0;
        if hi > 1e300 {
            return f64::INFINITY;
        }
    }
    if holds(lo) {
        return lo;
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if holds(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi / lo < 1.0 + 1e-12 {
            break;
        }
    }
    hi
}

/// The Nash inequality for a symmetric kernel over sample fields, with the
/// volume-like argument `‖f‖₁²/‖f‖₂² ≤ μ(supp f)`.
pub fn nash_check(kernel: &Kernel, phi: &RateFunction, fields: &[ScalarField], c_max: Option<f64>) -> Result<NashReport> {
    kernel.require_symmetric()?;
    phi.validate()?;
    let space = kernel.space();
    let mu = space.measures();
    let p2 = kernel.product(kernel, 2.0 * kernel.scale())?;
    let mut rows = Vec::with_capacity(fields.len());
    for (i, f) in fields.iter().enumerate() {
        crate::calculus::check_len(space, f.values())?;
        let l1 = norm(mu, f.values(), 1.0);
        let l2sq = norm(mu, f.values(), 2.0).powi(2);
        if l1 == 0.0 {
            return Err(Error::InvalidParameter(format!("Nash sample {i} is the zero field")));
        }
        let g = kernel_values(&p2, f.values(), 2.0);
        let energy: f64 = g.iter().zip(mu).map(|(g, m)| g * g * m).sum();
        let arg = l1 * l1 / l2sq;
        rows.push((l2sq, arg, energy, nash_constant(phi, l2sq, arg, energy)));
    }
    let per_sample: Vec<f64> = rows.iter().map(|r| r.3).collect();
    let (worst, c) = per_sample
        .iter()
        .copied()
        .enumerate()
        .fold((0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
    let margins = rows
        .iter()
        .map(|&(lhs, arg, energy, _)| c * phi.eval(c * arg).powi(2) * energy / lhs)
        .collect();
    Ok(NashReport {
        passes: c.is_finite() && c_max.is_none_or(|m| c <= m),
        c,
        per_sample,
        margins,
        worst,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SinfReport {
    /// `φ` never reaches some tested radius, so `(S_φ^∞)` cannot hold.
    pub phi_bounded: bool,
    pub holds: bool,
    /// Number of failing `(x, r)` pairs.
    pub failures: usize,
    /// Points failing at some radius.
    pub failing_points: Vec<usize>,
    /// `(x, r, V(x,r), φ⁻¹(r))` minimizing `V/φ⁻¹`.
    pub worst: Option<(usize, f64, f64, f64)>,
    pub message: String,
}

/// Checks the volume lower bound `V(x,r) ≥ φ⁻¹(r)` for all `x` and the
/// radii `r ≥ h` of the grid.
pub fn sinf_volume_check(space: &MetricMeasureSpace, phi: &RateFunction, radii: &[f64], h: f64) -> Result<SinfReport> {
    phi.validate()?;
    let radii: Vec<f64> = radii.iter().copied().filter(|&r| r >= h).collect();
    if let Some(&r) = radii.iter().find(|&&r| phi.inverse(r).is_infinite()) {
        return Ok(SinfReport {
            phi_bounded: true,
            holds: false,
            failures: 0,
            failing_points: Vec::new(),
            worst: None,
            message: format!("φ bounded: φ never reaches {r}, so (S_φ^∞) cannot hold"),
        });
    }
    let mut failures = 0;
    let mut failing = vec![false; space.len()];
    let mut worst: Option<(usize, f64, f64, f64)> = None;
    for &r in &radii {
        let need = phi.inverse(r);
        let vols = space.volumes(r);
        for (x, &v) in vols.iter().enumerate() {
            if v < need * (1.0 - 1e-12) {
                failures += 1;
                failing[x] = true;
            }
            let ratio = if need > 0.0 { v / need } else { f64::INFINITY };
            if worst.is_none_or(|w| ratio < w.2 / w.3) {
                worst = Some((x, r, v, need));
            }
        }
    }
    let failing_points: Vec<usize> = (0..space.len()).filter(|&x| failing[x]).collect();
    Ok(SinfReport {
        phi_bounded: false,
        holds: failures == 0,
        message: format!("{failures} failing (x, r) pairs at {} points", failing_points.len()),
        failures,
        failing_points,
        worst,
    })
}
