use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{check_len, kernel_values, lp_values, sup_values};
use crate::error::Result;
use crate::space::MetricMeasureSpace;
use crate::viewpoint::{standard_kernel, ScalarField, Viewpoint};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub violations: usize,
    /// Most negative `right − left` over all links and points (≥ −slack when clean).
    pub worst_margin: f64,
    pub worst_point: usize,
    pub worst_link: String,
}

/// Checks, pointwise,
/// `κ(x)|∇f|_{h,q} ≤ |∇f|_{P,q} ≤ |∇f|_{P,q'} ≤ |∇f|_{A·h}` with
/// `κ(x) = (c·V(x,h))^{1/q}` for a viewpoint certified with `(A, c)`.
pub fn gradient_sandwich(vp: &Viewpoint, f: &ScalarField, q: f64, q2: f64, slack: f64) -> Result<SandwichReport> {
    let space = vp.space();
    check_len(space, f.values())?;
    super::check_p(q)?;
    super::check_p(q2)?;
    let (q, q2) = if q <= q2 { (q, q2) } else { (q2, q) };
    let h = vp.scale();
    let cert = vp.certificate();
    let v = f.values();
    let ball = lp_values(space, v, h, q);
    let pq = kernel_values(vp, v, q);
    let pq2 = kernel_values(vp, v, q2);
    let outer = sup_values(space, v, cert.a * h);
    let vols = space.volumes(h);
    let mut rep = SandwichReport {
        worst_margin: f64::INFINITY,
        ..Default::default()
    };
    for x in 0..space.len() {
        let kappa = if q.is_infinite() { 1.0 } else { (cert.c * vols[x]).powf(1.0 / q) };
        let links = [
            ("floor", kappa * ball[x], pq[x]),
            ("jensen", pq[x], pq2[x]),
            ("support", pq2[x], outer[x]),
        ];
        for (name, lo, hi) in links {
            let margin = hi - lo;
            if margin < -slack * hi.abs().max(1.0) {
                rep.violations += 1;
            }
            if margin < rep.worst_margin {
                rep.worst_margin = margin;
                rep.worst_point = x;
                rep.worst_link = name.to_string();
            }
        }
    }
    Ok(rep)
}

/// Structural constant for `|∇Pf|_h ≤ C |∇f|_{2h,1}` with `P` the
/// standard viewpoint at scale `h`:
/// `C = max_x max_{y ∈ B(x,h)} V(x,2h)/V(x,h) + V(x,2h)/V(y,h)`.
pub fn smoothing_constant(space: &MetricMeasureSpace, h: f64) -> f64 {
    let v1 = space.volumes(h);
    let v2 = space.volumes(2.0 * h);
    (0..space.len())
        .map(|x| {
            space
                .ball_indices(x, h)
                .into_iter()
                .map(|y| v2[x] / v1[x] + v2[x] / v1[y])
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothingReport {
    /// `max_x |∇Pf|_h(x) / |∇f|_{2h,1}(x)` (0 when both sides vanish).
    pub measured: f64,
    pub structural: f64,
    pub holds: bool,
}

/// Measures the smoothing ratio of the standard viewpoint at scale `h` on `f`.
pub fn smoothing_check(space: Arc<MetricMeasureSpace>, f: &ScalarField, h: f64) -> Result<SmoothingReport> {
    check_len(&space, f.values())?;
    let structural = smoothing_constant(&space, h);
    let p = standard_kernel(space.clone(), h)?;
    let pf = p.apply_values(f.values());
    let lhs = sup_values(&space, &pf, h);
    let rhs = lp_values(&space, f.values(), 2.0 * h, 1.0);
    let mut measured = 0.0_f64;
    for (l, r) in lhs.iter().zip(&rhs) {
        if *r > 0.0 {
            measured = measured.max(l / r);
        } else if *l > 1e-12 {
            measured = f64::INFINITY;
        }
    }
    Ok(SmoothingReport {
        measured,
        structural,
        holds: measured <= structural * (1.0 + 1e-12),
    })
}

/// Pointwise `|∇f|_{h'} ≥ |∇f|_h` for `h' ≥ h`; returns the largest deficit.
pub fn scale_monotonicity(space: &MetricMeasureSpace, f: &ScalarField, h: f64, h2: f64) -> Result<f64> {
    check_len(space, f.values())?;
    let (lo, hi) = if h <= h2 { (h, h2) } else { (h2, h) };
    let a = sup_values(space, f.values(), lo);
    let b = sup_values(space, f.values(), hi);
    Ok(a.iter().zip(&b).map(|(a, b)| a - b).fold(0.0, f64::max))
}
