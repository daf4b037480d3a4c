use serde::{Deserialize, Serialize};

use super::{check_map, LseCertificate};
use crate::calculus::sup_values;
use crate::error::{Error, Result};
use crate::space::MetricMeasureSpace;
use crate::viewpoint::norm;

/// `ψ_h(x) = sup_{y ∈ B(x,h)} |f(F(y))|`.
pub fn pullback(src: &MetricMeasureSpace, map: &[usize], f: &[f64], h: f64) -> Vec<f64> {
    (0..src.len())
        .map(|x| {
            src.ball_indices(x, h)
                .into_iter()
                .map(|y| f[map[y]].abs())
                .fold(0.0, f64::max)
        })
        .collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LemmaCheck {
    pub constant: f64,
    pub holds: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PullbackReport {
    pub psi: Vec<f64>,
    pub h: f64,
    /// Gradient scale on the target, `2ρ₊(2h)`.
    pub h_prime: f64,
    /// Support inflation on the target, `ρ₊(h)`.
    pub u: f64,
    /// `min_t μ({ψ_h ≥ t}) / μ'({|f| ≥ t})`
    pub l1: LemmaCheck,
    /// `max_t μ({|∇ψ_h|_h ≥ t}) / μ'({|∇f|_{h'} ≥ t·2^{−1/q}})`
    pub l2: LemmaCheck,
    /// `μ(supp ψ_h) / μ'([supp f]_u)`
    pub l3: LemmaCheck,
}

fn level_measure(mu: &[f64], g: &[f64], t: f64) -> f64 {
    g.iter().zip(mu).filter(|(v, _)| **v >= t).map(|(_, m)| m).sum()
}

fn distinct_positive(values: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|&x| x > 0.0).collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Measured constants of the three transfer lemmas for `ψ_h` of a target
/// field `f`, with exponent `q` for the gradient comparison.
pub fn pullback_lemmas(
    src: &MetricMeasureSpace,
    dst: &MetricMeasureSpace,
    cert: &LseCertificate,
    f: &[f64],
    h: f64,
    q: f64,
) -> Result<PullbackReport> {
    check_map(src, dst, &cert.map)?;
    crate::calculus::check_len(dst, f)?;
    if !(q >= 1.0 && q.is_finite()) {
        return Err(Error::InvalidParameter(format!("lemma exponent {q} must be in [1, ∞)")));
    }
    let (mu, nu) = (src.measures(), dst.measures());
    let psi = pullback(src, &cert.map, f, h);
    let abs_f: Vec<f64> = f.iter().map(|v| v.abs()).collect();

    let c1 = distinct_positive(&abs_f)
        .into_iter()
        .map(|t| level_measure(mu, &psi, t * (1.0 - 1e-12)) / level_measure(nu, &abs_f, t * (1.0 - 1e-12)))
        .fold(f64::INFINITY, f64::min);
    let (np, nf) = (norm(mu, &psi, q), norm(nu, f, q));
    let l1 = if nf == 0.0 {
        LemmaCheck {
            constant: f64::INFINITY,
            holds: true,
            detail: "f = 0".into(),
        }
    } else {
        LemmaCheck {
            constant: c1,
            holds: c1 > 0.0 && np >= c1.powf(1.0 / q) * nf * (1.0 - 1e-12),
            detail: format!("‖ψ_h‖_q/‖f‖_q = {}", np / nf),
        }
    };

    let h_prime = 2.0 * cert.rho_plus_at(2.0 * h);
    let g_psi = sup_values(src, &psi, h);
    let g_f = sup_values(dst, f, h_prime);
    let shrink = 2f64.powf(-1.0 / q);
    let c2 = distinct_positive(&g_psi)
        .into_iter()
        .map(|t| {
            let lhs = level_measure(mu, &g_psi, t * (1.0 - 1e-12));
            let rhs = level_measure(nu, &g_f, t * shrink * (1.0 - 1e-12));
            if rhs > 0.0 {
                lhs / rhs
            } else {
                f64::INFINITY
            }
        })
        .fold(0.0, f64::max);
    let (lg, rg) = (norm(mu, &g_psi, q).powf(q), norm(nu, &g_f, q).powf(q));
    let l2 = LemmaCheck {
        constant: c2,
        holds: c2.is_finite() && lg <= 2.0 * c2 * rg * (1.0 + 1e-12) + 1e-300,
        detail: format!("‖|∇ψ_h|_h‖_q^q = {lg}, ‖|∇f|_h'‖_q^q = {rg}"),
    };

    let u = cert.rho_plus_at(h);
    let supp_f = dst.subset((0..dst.len()).filter(|&y| f[y] != 0.0))?;
    let inflated = dst.thicken(&supp_f, u)?.measure();
    let supp_psi: f64 = psi.iter().zip(mu).filter(|(v, _)| **v != 0.0).map(|(_, m)| m).sum();
    let c3 = if supp_psi == 0.0 { 0.0 } else { supp_psi / inflated };
    let l3 = LemmaCheck {
        constant: c3,
        holds: c3.is_finite(),
        detail: format!("μ(supp ψ_h) = {supp_psi}, μ'([supp f]_u) = {inflated}"),
    };
    Ok(PullbackReport {
        psi,
        h,
        h_prime,
        u,
        l1,
        l2,
        l3,
    })
}
