use serde::{Deserialize, Serialize};

use super::gamma::{gamma_transform, Cutoff, GammaTransform};
use super::{sup_on_diagonal, DecayCurve};
use crate::error::{Error, Result};
use crate::profiles::RateFunction;
use crate::stats::linear_fit;
use crate::viewpoint::{norm, Kernel, ScalarField};

/// Candidate constants `c = 2^{k/4}`, `k = −80..=40`.
pub const C_GRID: (i32, i32) = (-80, 40);

/// Largest fitted growth degree of the log-derivative still accepted as
/// polynomial.
pub const DELTA_MAX_DEGREE: f64 = 16.0;

fn grid_c(k: i32) -> f64 {
    2f64.powf(k as f64 / 4.0)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecayReport {
    /// Measured `max_x p^{2n}_x(x)` over the base points.
    pub measured: DecayCurve,
    /// `γ(c·n)` on the fit window, when `γ` is defined.
    pub gamma: Option<GammaTransform>,
    /// Why the comparison was skipped (e.g. `φ²/v` not integrable at 0).
    pub skipped: Option<String>,
    /// Largest `c` with `p^{2n} ≤ γ(c n)` on the grid: `min_n I(1/p^{2n})/n`.
    pub c_exact: Option<f64>,
    /// Largest constant of [`C_GRID`] not above `c_exact`.
    pub c: Option<f64>,
    pub holds: bool,
    /// Binding time when no grid constant works.
    pub violating_n: Option<u64>,
    pub measured_slope: f64,
    pub gamma_slope: f64,
    pub fit_window: (u64, u64),
}

/// Compares measured return densities against `γ(c·n)` for the best grid
/// constant, and the log-log exponents of both over the fit window (the
/// top decade of the grid by default).
pub fn decay_vs_profile(
    kernel: &Kernel,
    phi: &RateFunction,
    n_grid: &[u64],
    points: &[usize],
    cutoff: Cutoff,
    fit_window: Option<(u64, u64)>,
) -> Result<DecayReport> {
    phi.validate()?;
    let measured = sup_on_diagonal(kernel, points, n_grid)?;
    let n_max = *measured.times.last().expect("nonempty grid");
    let window = fit_window.unwrap_or(((n_max / 10).max(1), n_max));
    let measured_slope = measured.loglog_slope(window.0 as f64, window.1 as f64);
    let mut report = DecayReport {
        measured,
        gamma: None,
        skipped: None,
        c_exact: None,
        c: None,
        holds: false,
        violating_n: None,
        measured_slope,
        gamma_slope: f64::NAN,
        fit_window: window,
    };
    let probe = match gamma_transform(phi, &[1.0], cutoff) {
        Ok(g) => g,
        Err(Error::NotIntegrable(msg)) => {
            report.skipped = Some(msg);
            return Ok(report);
        }
        Err(e) => return Err(e),
    };
    // p ≤ γ(cn) ⟺ 1/p ≥ γ⁻¹… ⟺ I(1/p) ≥ c n, since I is increasing.
    let (binding, c_exact) = report
        .measured
        .times
        .iter()
        .zip(&report.measured.values)
        .filter(|(&n, _)| n >= 1)
        .map(|(&n, &p)| (n, probe.integral(1.0 / p) / n as f64))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or_else(|| Error::InvalidParameter("time grid has no positive step count".into()))?;
    report.c_exact = Some(c_exact);
    let best = (C_GRID.0..=C_GRID.1).rev().map(grid_c).find(|&c| c <= c_exact);
    report.c = best;
    report.holds = best.is_some();
    if best.is_none() {
        report.violating_n = Some(binding);
    }
    let c = best.unwrap_or(1.0);
    let ts: Vec<f64> = report
        .measured
        .times
        .iter()
        .filter(|&&n| n >= window.0.max(1) && n <= window.1)
        .map(|&n| c * n as f64)
        .collect();
    if ts.len() >= 2 {
        let g = gamma_transform(phi, &ts, cutoff)?;
        report.gamma_slope = g.loglog_slope();
        report.gamma = Some(g);
    }
    Ok(report)
}

/// The polynomial-growth check on the log-derivative `d ln γ / dn`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DeltaCondition {
    /// `(midpoint time, finite-difference log-derivative)`.
    pub log_derivative: Vec<(f64, f64)>,
    /// Fitted `k` in `|D(t)| ≈ C (1+t)^k`.
    pub degree: f64,
    /// Envelope constant `max |D|/(1+t)^k`.
    pub constant: f64,
    pub holds: bool,
}

fn delta_condition(curve: &DecayCurve) -> DeltaCondition {
    let pts: Vec<(f64, f64)> = curve
        .times
        .iter()
        .zip(&curve.values)
        .collect::<Vec<_>>()
        .windows(2)
        .map(|w| {
            let (n0, n1) = (*w[0].0 as f64, *w[1].0 as f64);
            ((n0 + n1) / 2.0, (w[1].1.ln() - w[0].1.ln()) / (n1 - n0))
        })
        .collect();
    let nonzero: Vec<(f64, f64)> = pts
        .iter()
        .filter(|p| p.1 != 0.0 && p.1.is_finite())
        .map(|p| ((1.0 + p.0).ln(), p.1.abs().ln()))
        .collect();
    let degree = if nonzero.len() >= 2 { linear_fit(&nonzero).1 } else { 0.0 };
    let constant = pts
        .iter()
        .map(|p| p.1.abs() / (1.0 + p.0).powf(degree))
        .fold(0.0, f64::max);
    DeltaCondition {
        holds: pts.iter().all(|p| p.1.is_finite()) && degree.is_finite() && degree <= DELTA_MAX_DEGREE,
        log_derivative: pts,
        degree,
        constant,
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NashFieldReport {
    pub index: usize,
    /// `‖f‖₂²` after normalizing `‖f‖₁ = 1`.
    pub u0: f64,
    /// `‖f‖₂² − ‖Pf‖₂²`
    pub energy: f64,
    pub best_n: Option<u64>,
    /// `min_n n/ln(‖f‖₂²/γ(n)) + 1`: the induced Nash constant.
    pub factor: f64,
    pub holds: bool,
    /// `u_n² ≤ u_{n−1}u_{n+1}` for `u_n = ‖P^n f‖₂²`.
    pub log_convex: bool,
    pub skipped: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NashFromDecayReport {
    pub delta: DeltaCondition,
    pub fields: Vec<NashFieldReport>,
    /// Largest induced constant over the evaluated fields.
    pub max_factor: f64,
    pub passes: bool,
}

/// `u_n = ‖P^n f‖₂²` for `n = 0..=n_max` and whether the sequence is
/// log-convex.
pub fn log_convexity(kernel: &Kernel, f: &[f64], n_max: usize) -> (Vec<f64>, bool) {
    let mu = kernel.space().measures();
    let mut g = f.to_vec();
    let mut u = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        if n > 0 {
            g = kernel.apply_values(&g);
        }
        u.push(norm(mu, &g, 2.0).powi(2));
    }
    let ok = u.windows(3).all(|w| w[1] * w[1] <= w[0] * w[2] * (1.0 + 1e-9) + 1e-300);
    (u, ok)
}

/// Steps of the log-convexity check per field.
const LOG_CONVEX_STEPS: usize = 32;

/// Verifies `‖f‖₂² ≤ (n/ln(‖f‖₂²/γ(n)) + 1)(‖f‖₂² − ‖Pf‖₂²)` at the best
/// grid `n`, for each field normalized to `‖f‖₁ = 1`, with `γ` the measured
/// decay curve. The curve should dominate `sup_x p^{2n}_x(x)`.
pub fn nash_from_decay(kernel: &Kernel, gamma: &DecayCurve, fields: &[ScalarField]) -> Result<NashFromDecayReport> {
    kernel.require_symmetric()?;
    let space = kernel.space();
    let mu = space.measures();
    let delta = delta_condition(gamma);
    let mut out = Vec::with_capacity(fields.len());
    for (index, f) in fields.iter().enumerate() {
        crate::calculus::check_len(space, f.values())?;
        let l1 = norm(mu, f.values(), 1.0);
        if l1 == 0.0 {
            return Err(Error::InvalidParameter(format!("field {index} is zero")));
        }
        let f: Vec<f64> = f.values().iter().map(|v| v / l1).collect();
        let (u, log_convex) = log_convexity(kernel, &f, LOG_CONVEX_STEPS);
        let (u0, u1) = (u[0], u[1]);
        let energy = u0 - u1;
        let best = gamma
            .times
            .iter()
            .zip(&gamma.values)
            .filter(|(&n, &g)| n >= 1 && g < u0)
            .map(|(&n, &g)| (n, n as f64 / (u0 / g).ln() + 1.0))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        let report = match best {
            Some((n, factor)) => NashFieldReport {
                index,
                u0,
                energy,
                best_n: Some(n),
                factor,
                holds: u0 <= factor * energy * (1.0 + 1e-9),
                log_convex,
                skipped: None,
            },
            None => NashFieldReport {
                index,
                u0,
                energy,
                best_n: None,
                factor: f64::NAN,
                holds: false,
                log_convex,
                skipped: Some(format!("γ(n) ≥ ‖f‖₂² = {u0} on the whole grid: field too spread")),
            },
        };
        out.push(report);
    }
    let evaluated: Vec<&NashFieldReport> = out.iter().filter(|r| r.skipped.is_none()).collect();
    let max_factor = evaluated.iter().map(|r| r.factor).fold(0.0, f64::max);
    Ok(NashFromDecayReport {
        passes: delta.holds && evaluated.iter().all(|r| r.holds && r.log_convex),
        delta,
        fields: out,
        max_factor,
    })
}
