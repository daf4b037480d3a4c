use serde::{Deserialize, Serialize};

use super::{check_map, volume_constant, LseCertificate};
use crate::calculus::sup_values;
use crate::error::{Error, Result};
use crate::space::{MetricMeasureSpace, Subset};
use crate::viewpoint::{norm, ScalarField};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ThickeningResult {
    /// `f̃`: `f·1_Ω`, or a ball indicator on the fallback branch.
    pub field: Vec<f64>,
    pub fallback: bool,
    /// `Ω = {x : B(x, h/2) ⊆ supp f}`.
    pub omega: Vec<usize>,
    /// `f·1_Ω`, computed on both branches.
    pub masked: Vec<f64>,
    /// `⋃_{x ∈ supp f̃} B(x, h/2)`: an `(h/2)`-thick set containing `supp f̃`.
    pub thick_hull: Vec<usize>,
    /// `μ(thick hull) − μ(supp f)`.
    pub measure_inflation: f64,
    /// `‖f·1_Ω‖_p^p ≥ ‖f‖_p^p − ‖|∇f|_h‖_p^p`.
    pub norm_loss_ok: bool,
    /// `max_{x ∈ Ω ∪ (supp f)ᶜ} |∇(f·1_Ω)|_{h/2} / |∇f|_h` (at most 1).
    pub gradient_ratio: f64,
    /// Same maximum over all points (at most 2).
    pub gradient_ratio_global: f64,
    /// `(‖|∇f̃|_{h/2}‖_p/‖f̃‖_p) / (‖|∇f|_h‖_p/‖f‖_p)`.
    pub quotient_ratio: f64,
}

/// Whether `a` is a union of closed `r`-balls.
pub fn is_thick(space: &MetricMeasureSpace, a: &Subset, r: f64) -> bool {
    let mask = a.mask(space.len());
    let mut covered = vec![false; space.len()];
    for x in a.iter() {
        let ball = space.ball_indices(x, r);
        if ball.iter().all(|&y| mask[y]) {
            for y in ball {
                covered[y] = true;
            }
        }
    }
    a.iter().all(|x| covered[x])
}

fn hull(space: &MetricMeasureSpace, members: impl Iterator<Item = usize>, r: f64) -> Vec<usize> {
    let mut mask = vec![false; space.len()];
    for x in members {
        for y in space.ball_indices(x, r) {
            mask[y] = true;
        }
    }
    (0..space.len()).filter(|&x| mask[x]).collect()
}

fn ratio(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else if b == 0.0 {
        f64::INFINITY
    } else {
        a / b
    }
}

/// Replaces `f` by a field with `(h/2)`-thick support and comparable
/// gradient quotient; falls back to the indicator of the ball of measure
/// closest to 1 when `‖|∇f|_h‖_p ≥ ½‖f‖_p`.
pub fn thicken_support(space: &MetricMeasureSpace, f: &ScalarField, h: f64, p: f64) -> Result<ThickeningResult> {
    crate::calculus::check_len(space, f.values())?;
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!("exponent {p} must be in [1, ∞)")));
    }
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!("scale {h} must be positive")));
    }
    let mu = space.measures();
    let fv = f.values();
    let supp = f.support();
    if supp.is_empty() {
        return Err(Error::InvalidParameter("cannot thicken the support of the zero field".into()));
    }
    let in_supp = supp.mask(space.len());
    let omega: Vec<usize> = supp
        .iter()
        .filter(|&x| space.ball_indices(x, h / 2.0).iter().all(|&y| in_supp[y]))
        .collect();
    let mut in_omega = vec![false; space.len()];
    omega.iter().for_each(|&x| in_omega[x] = true);
    let masked: Vec<f64> = (0..space.len()).map(|x| if in_omega[x] { fv[x] } else { 0.0 }).collect();

    let g = sup_values(space, fv, h);
    let g_masked = sup_values(space, &masked, h / 2.0);
    let (nf, ng) = (norm(mu, fv, p), norm(mu, &g, p));
    let norm_loss_ok = norm(mu, &masked, p).powf(p) >= (nf.powf(p) - ng.powf(p)) * (1.0 - 1e-12);
    let (mut local, mut global) = (0.0_f64, 0.0_f64);
    for x in 0..space.len() {
        let r = ratio(g_masked[x], g[x]);
        global = global.max(r);
        if in_omega[x] || !in_supp[x] {
            local = local.max(r);
        }
    }

    let fallback = ng >= 0.5 * nf;
    let field = if fallback {
        let (x, r) = closest_unit_ball(space);
        let mut ind = vec![0.0; space.len()];
        space.ball_indices(x, r).into_iter().for_each(|y| ind[y] = 1.0);
        ind
    } else {
        masked.clone()
    };
    let support = (0..space.len()).filter(|&x| field[x] != 0.0);
    let thick_hull = hull(space, support, h / 2.0);
    let hull_measure: f64 = thick_hull.iter().map(|&x| mu[x]).sum();
    let g_field = sup_values(space, &field, h / 2.0);
    let quotient_ratio = ratio(ratio(norm(mu, &g_field, p), norm(mu, &field, p)), ratio(ng, nf));
    Ok(ThickeningResult {
        field,
        fallback,
        omega,
        masked,
        thick_hull,
        measure_inflation: hull_measure - supp.measure(),
        norm_loss_ok,
        gradient_ratio: local,
        gradient_ratio_global: global,
        quotient_ratio,
    })
}

/// Ball `B(x, r)` whose measure is closest to 1 (first in `(x, r)` order).
fn closest_unit_ball(space: &MetricMeasureSpace) -> (usize, f64) {
    let mut best = (0, 0.0, f64::INFINITY);
    for x in 0..space.len() {
        let mut pts = space.ball_with_distances(x, f64::INFINITY);
        pts.sort_by(|a, b| a.1.total_cmp(&b.1));
        let mut acc = 0.0;
        let mut i = 0;
        while i < pts.len() {
            let r = pts[i].1;
            while i < pts.len() && crate::space::within(pts[i].1, r) {
                acc += space.measure(pts[i].0);
                i += 1;
            }
            let gap = (acc - 1.0).abs();
            if gap < best.2 {
                best = (x, r, gap);
            }
            if acc >= 1.0 {
                break;
            }
        }
    }
    (best.0, best.1)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VolumeClause {
    /// `[F⁻¹(A')]_u ⊆ A ⇒ μ'(A') ≤ C μ(A)`
    Preimage,
    /// `[F(A)]_u ⊆ A' ⇒ μ(A) ≤ C μ'(A')`
    Image,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClauseResult {
    pub clause: VolumeClause,
    pub ratio: f64,
    /// Covering-argument constant.
    pub bound: f64,
    /// Radius of the covering balls.
    pub cover_radius: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RoughVolumeReport {
    pub clauses: Vec<ClauseResult>,
    pub skipped: Option<String>,
}

/// `max_x V(x, big)/V(x, small)` over the given points.
fn growth(space: &MetricMeasureSpace, points: &[usize], small: f64, big: f64) -> f64 {
    let (vs, vb) = (space.volumes(small), space.volumes(big));
    points.iter().map(|&x| vb[x] / vs[x]).fold(1.0, f64::max)
}

/// Checks the rough volume-preserving clauses whose hypotheses hold for
/// `(A, A')`, against the constant of the covering argument.
pub fn rough_volume_check(
    src: &MetricMeasureSpace,
    dst: &MetricMeasureSpace,
    cert: &LseCertificate,
    a: &Subset,
    a_prime: &Subset,
    u: f64,
) -> Result<RoughVolumeReport> {
    check_map(src, dst, &cert.map)?;
    if !(u > 0.0) {
        return Err(Error::InvalidParameter(format!("inflation {u} must be positive")));
    }
    let map = &cert.map;
    let in_a = a.mask(src.len());
    let in_ap = a_prime.mask(dst.len());
    let mut clauses = Vec::new();
    let mut reasons = Vec::new();

    let pre = src.subset((0..src.len()).filter(|&x| in_ap[map[x]]))?;
    let pre_thick = src.thicken(&pre, u)?;
    let mut image = vec![false; dst.len()];
    map.iter().for_each(|&y| image[y] = true);
    let covered = a_prime.iter().all(|y| image[y]);
    if pre_thick.iter().all(|x| in_a[x]) && covered {
        let v = cert.rho_plus_at(2.0 * u);
        let all: Vec<usize> = (0..src.len()).collect();
        let bound = volume_constant(src, dst, map, v) * growth(src, &all, u, v);
        let r = ratio(a_prime.measure(), a.measure());
        clauses.push(ClauseResult {
            clause: VolumeClause::Preimage,
            ratio: r,
            bound,
            cover_radius: v,
            holds: r <= bound * (1.0 + 1e-12),
        });
    } else if !covered {
        reasons.push("A' is not inside F(X)");
    } else {
        reasons.push("[F⁻¹(A')]_u is not inside A");
    }

    let img = dst.subset(a.iter().map(|x| map[x]))?;
    let img_thick = dst.thicken(&img, u)?;
    if img_thick.iter().all(|y| in_ap[y]) {
        let w = cert.source_spread(2.0 * u);
        let mut targets: Vec<usize> = map.clone();
        targets.sort_unstable();
        targets.dedup();
        let bound = volume_constant(src, dst, map, w) * growth(dst, &targets, u, w);
        let r = ratio(a.measure(), a_prime.measure());
        clauses.push(ClauseResult {
            clause: VolumeClause::Image,
            ratio: r,
            bound,
            cover_radius: w,
            holds: r <= bound * (1.0 + 1e-12),
        });
    } else {
        reasons.push("[F(A)]_u is not inside A'");
    }
    let skipped = clauses.is_empty().then(|| format!("no clause applies: {}", reasons.join("; ")));
    Ok(RoughVolumeReport { clauses, skipped })
}
