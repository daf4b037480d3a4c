use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profiles::RateFunction;

/// Below this fraction of the smallest `t`, a tail below the cutoff is
/// negligible.
pub const TAIL_TOLERANCE: f64 = 1e-6;

/// Dyadic shells used to extrapolate `∫_0^{v_min}`.
const TAIL_SHELLS: usize = 60;

/// Relative accuracy of each quadrature.
const QUAD_REL: f64 = 1e-12;

/// Where to start integrating `φ²(v)/v`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "v_min", rename_all = "snake_case")]
pub enum Cutoff {
    /// Integrate from zero when the tail converges; refuse otherwise.
    Default(f64),
    /// Integrate from `v_min` regardless of the tail.
    Explicit(f64),
}

impl Cutoff {
    /// `(μ(X))⁻¹ · 10⁻³`
    pub fn for_mass(total: f64) -> Self {
        Cutoff::Default(1e-3 / total)
    }

    pub fn value(self) -> f64 {
        match self {
            Cutoff::Default(v) | Cutoff::Explicit(v) => v,
        }
    }
}

/// `γ` defined by `t = ∫_0^{1/γ(t)} φ²(v) dv/v`, tabulated on a grid.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GammaTransform {
    pub phi: RateFunction,
    pub v_min: f64,
    /// `∫_0^{v_min} φ²(v)dv/v` (`+∞` when divergent).
    pub tail: f64,
    /// Whether `tail` is part of the integral.
    pub tail_included: bool,
    pub points: Vec<(f64, f64)>,
    /// Largest relative error of `t ↦ ∫^{1/γ(t)}` over the grid.
    pub round_trip: f64,
}

/// `∫_a^b φ²(v) dv/v`, in `u = ln v`, split at the steps of a table.
fn integrate(phi: &RateFunction, a: f64, b: f64) -> f64 {
    if b == a {
        return 0.0;
    }
    if b < a {
        return -integrate(phi, b, a);
    }
    let (la, lb) = (a.ln(), b.ln());
    let mut cuts = vec![la];
    if let RateFunction::Tabulated { points } = phi {
        cuts.extend(points.iter().map(|p| p.0.ln()).filter(|&u| u > la && u < lb));
    }
    cuts.push(lb);
    let f = |u: f64| phi.eval(u.exp()).powi(2);
    cuts.windows(2)
        .map(|w| {
            if let RateFunction::Tabulated { .. } = phi {
                // Constant on each piece; evaluate at the right end.
                return f(w[1]) * (w[1] - w[0]);
            }
            let rough = quadrature::double_exponential::integrate(f, w[0], w[1], 1e-6).integral;
            let target = (rough.abs() * QUAD_REL).max(f64::MIN_POSITIVE);
            quadrature::double_exponential::integrate(f, w[0], w[1], target).integral
        })
        .sum()
}

/// `∫_0^{v_min} φ²(v)dv/v` by geometric extrapolation of dyadic shells;
/// `+∞` when the shells stop shrinking.
fn tail_estimate(phi: &RateFunction, v_min: f64) -> f64 {
    let mut sum = 0.0;
    let mut shells = Vec::with_capacity(TAIL_SHELLS);
    let mut hi = v_min;
    for _ in 0..TAIL_SHELLS {
        let s = integrate(phi, hi / 2.0, hi);
        sum += s;
        shells.push(s);
        hi /= 2.0;
    }
    let last = shells[TAIL_SHELLS - 1];
    if last == 0.0 {
        return sum;
    }
    let r = last / shells[TAIL_SHELLS - 2];
    if r < 1.0 - 1e-6 {
        sum + last * r / (1.0 - r)
    } else {
        f64::INFINITY
    }
}

impl GammaTransform {
    /// `M ↦ ∫ φ²(v) dv/v` up to `M`, from 0 or from the cutoff.
    pub fn integral(&self, m: f64) -> f64 {
        let body = integrate(&self.phi, self.v_min, m);
        if self.tail_included {
            self.tail + body
        } else {
            body
        }
    }

    /// `1/γ(t)`: the `M` with `integral(M) = t`, by bisection in `ln M`.
    pub fn solve_mass(&self, t: f64) -> Result<f64> {
        let floor = if self.tail_included { 0.0 } else { self.v_min };
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidParameter(format!("γ-transform time {t} must be positive and finite")));
        }
        let mut lo = self.v_min;
        let mut hi = self.v_min;
        if self.integral(hi) < t {
            while self.integral(hi) < t {
                lo = hi;
                hi *= 2.0;
                if hi > 1e300 {
                    return Err(Error::InvalidParameter(format!("γ-transform: ∫φ²/v never reaches {t}")));
                }
            }
        } else {
            // Only reachable with the tail included, where the integral → 0.
            while self.integral(lo) >= t {
                hi = lo;
                lo /= 2.0;
                if lo <= floor || lo < 1e-300 {
                    return Err(Error::InvalidParameter(format!("time {t} lies below the range of the integral")));
                }
            }
        }
        for _ in 0..200 {
            let mid = (lo * hi).sqrt();
            if self.integral(mid) < t {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi / lo - 1.0 < 1e-15 {
                break;
            }
        }
        Ok((lo * hi).sqrt())
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        Ok(1.0 / self.solve_mass(t)?)
    }

    pub fn is_strictly_decreasing(&self) -> bool {
        self.points.windows(2).all(|w| w[1].1 < w[0].1)
    }

    pub fn loglog_slope(&self) -> f64 {
        let (xs, ys): (Vec<f64>, Vec<f64>) = self.points.iter().copied().unzip();
        crate::stats::loglog_slope(&xs, &ys)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,gamma\n");
        for (t, g) in &self.points {
            out.push_str(&format!("{t},{g}\n"));
        }
        out
    }
}

/// Builds `γ` on `ts`. With a default cutoff the integral runs from zero
/// and a divergent tail is an error; an explicit cutoff integrates from
/// `v_min` and only reports the tail.
pub fn gamma_transform(phi: &RateFunction, ts: &[f64], cutoff: Cutoff) -> Result<GammaTransform> {
    phi.validate()?;
    let v_min = cutoff.value();
    if !(v_min > 0.0 && v_min.is_finite()) {
        return Err(Error::InvalidParameter(format!("cutoff {v_min} must be positive")));
    }
    let mut ts = ts.to_vec();
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    let t_min = ts.first().copied().unwrap_or(f64::NAN);
    if !(t_min > 0.0) {
        return Err(Error::InvalidParameter("γ-transform times must be positive".into()));
    }
    let tail = tail_estimate(phi, v_min);
    let tail_included = match cutoff {
        Cutoff::Default(_) if tail.is_infinite() => {
            return Err(Error::NotIntegrable(format!(
                "∫_0 φ²(v)dv/v diverges for φ = {phi}; pass an explicit cutoff"
            )))
        }
        Cutoff::Default(_) => true,
        Cutoff::Explicit(_) => {
            if tail > TAIL_TOLERANCE * t_min {
                log::info!("γ-transform ignores a tail of {tail:e} below the cutoff {v_min:e}");
            }
            false
        }
    };
    let mut g = GammaTransform {
        phi: phi.clone(),
        v_min,
        tail,
        tail_included,
        points: Vec::with_capacity(ts.len()),
        round_trip: 0.0,
    };
    for &t in &ts {
        let m = g.solve_mass(t)?;
        g.round_trip = g.round_trip.max((g.integral(m) - t).abs() / t);
        g.points.push((t, 1.0 / m));
    }
    Ok(g)
}
