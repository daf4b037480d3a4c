use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An increasing positive rate function `φ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RateFunction {
    /// `v^alpha`
    Power { alpha: f64 },
    /// `v^alpha · ln(e + v)^beta`
    LogPower { alpha: f64, beta: f64 },
    /// The constant `value` (bounded, so never a valid volume rate at infinity).
    Const { value: f64 },
    /// Upper step function through `(v_i, φ_i)`: `φ(v) = φ_i` for
    /// `v ∈ (v_{i−1}, v_i]`, and the last value beyond the table. This is
    /// the right reading of a profile curve `j(v) = sup_{μ(A) ≤ v} J(A)`
    /// sampled on a grid.
    Tabulated { points: Vec<(f64, f64)> },
}

impl RateFunction {
    pub fn power(alpha: f64) -> Result<Self> {
        let r = RateFunction::Power { alpha };
        r.validate()?;
        Ok(r)
    }

    pub fn tabulated(points: Vec<(f64, f64)>) -> Result<Self> {
        let r = RateFunction::Tabulated { points };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        match self {
            RateFunction::Power { alpha } if !(*alpha > 0.0 && alpha.is_finite()) => {
                bad(format!("power exponent {alpha} must be positive"))
            }
            RateFunction::LogPower { alpha, beta }
                if !(*alpha >= 0.0 && *beta >= 0.0 && alpha + beta > 0.0 && (alpha + beta).is_finite()) =>
            {
                bad(format!("log-power exponents ({alpha}, {beta}) must be nonnegative and not both zero"))
            }
            RateFunction::Const { value } if !(*value > 0.0 && value.is_finite()) => {
                bad(format!("constant rate {value} must be positive"))
            }
            RateFunction::Tabulated { points } => {
                if points.is_empty() {
                    return bad("tabulated rate function is empty".into());
                }
                for w in points.windows(2) {
                    if !(w[1].0 > w[0].0) || w[1].1 < w[0].1 {
                        return bad(format!(
                            "tabulated rate function must be increasing: ({}, {}) then ({}, {})",
                            w[0].0, w[0].1, w[1].0, w[1].1
                        ));
                    }
                }
                if let Some(p) = points.iter().find(|p| !(p.0 > 0.0 && p.1 > 0.0 && p.1.is_finite())) {
                    return bad(format!("tabulated point ({}, {}) must be positive and finite", p.0, p.1));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, v: f64) -> f64 {
        match self {
            RateFunction::Power { alpha } => v.max(0.0).powf(*alpha),
            RateFunction::LogPower { alpha, beta } => {
                let v = v.max(0.0);
                v.powf(*alpha) * (std::f64::consts::E + v).ln().powf(*beta)
            }
            RateFunction::Const { value } => *value,
            RateFunction::Tabulated { points } => {
                let i = points.partition_point(|p| p.0 < v);
                points[i.min(points.len() - 1)].1
            }
        }
    }

    /// `sup φ`, infinite for unbounded families.
    pub fn supremum(&self) -> f64 {
        match self {
            RateFunction::Power { .. } | RateFunction::LogPower { .. } => f64::INFINITY,
            RateFunction::Const { value } => *value,
            RateFunction::Tabulated { points } => points.last().map_or(0.0, |p| p.1),
        }
    }

    /// Generalized inverse `φ⁻¹(r) = inf {v ≥ 0 : φ(v) ≥ r}`; infinite when
    /// `φ` never reaches `r`.
    pub fn inverse(&self, r: f64) -> f64 {
        if r <= self.eval(0.0) {
            return 0.0;
        }
        match self {
            RateFunction::Power { alpha } => r.powf(1.0 / alpha),
            RateFunction::Const { .. } => f64::INFINITY,
            RateFunction::Tabulated { points } => match points.iter().position(|p| p.1 >= r) {
                Some(0) => 0.0,
                Some(i) => points[i - 1].0,
                None => f64::INFINITY,
            },
            RateFunction::LogPower { .. } => {
                let mut hi = 1.0;
                while self.eval(hi) < r {
                    hi *= 2.0;
                    if hi > 1e300 {
                        return f64::INFINITY;
                    }
                }
                let mut lo = 0.0;
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if self.eval(mid) >= r {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                hi
            }
        }
    }
}

impl FromStr for RateFunction {
    type Err = Error;

    /// `pow:a`, `logpow:a:b`, `log:b`, `const:k`, `table:v=φ,v=φ,...`.
    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.splitn(2, ':');
        let kind = parts.next().unwrap_or_default();
        let rest = parts.next().unwrap_or_default();
        let num = |t: &str| -> Result<f64> {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("bad number `{t}` in rate function `{s}`")))
        };
        let r = match kind {
            "pow" => RateFunction::Power { alpha: num(rest)? },
            "log" => RateFunction::LogPower {
                alpha: 0.0,
                beta: num(rest)?,
            },
            "logpow" => {
                let (a, b) = rest
                    .split_once(':')
                    .ok_or_else(|| Error::InvalidParameter(format!("`{s}`: expected logpow:alpha:beta")))?;
                RateFunction::LogPower {
                    alpha: num(a)?,
                    beta: num(b)?,
                }
            }
            "const" => RateFunction::Const { value: num(rest)? },
            "table" => RateFunction::Tabulated {
                points: rest
                    .split(',')
                    .map(|kv| {
                        let (k, v) = kv
                            .split_once('=')
                            .ok_or_else(|| Error::InvalidParameter(format!("`{kv}`: expected v=phi")))?;
                        Ok((num(k)?, num(v)?))
                    })
                    .collect::<Result<_>>()?,
            },
            other => {
                return Err(Error::Unknown {
                    kind: "rate function",
                    name: other.to_string(),
                })
            }
        };
        r.validate()?;
        Ok(r)
    }
}

impl fmt::Display for RateFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RateFunction::Power { alpha } => write!(f, "pow:{alpha}"),
            RateFunction::LogPower { alpha, beta } => write!(f, "logpow:{alpha}:{beta}"),
            RateFunction::Const { value } => write!(f, "const:{value}"),
            RateFunction::Tabulated { points } => {
                let body: Vec<String> = points.iter().map(|(v, p)| format!("{v}={p}")).collect();
                write!(f, "table:{}", body.join(","))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_evaluate() {
        let r: RateFunction = "pow:0.5".parse().unwrap();
        assert_eq!(r.eval(16.0), 4.0);
        assert_eq!(r.inverse(3.0), 9.0);
        assert_eq!(r.to_string().parse::<RateFunction>().unwrap(), r);
        let c: RateFunction = "const:2".parse().unwrap();
        assert_eq!(c.inverse(3.0), f64::INFINITY);
        assert_eq!(c.inverse(1.0), 0.0);
        assert!("pow:-1".parse::<RateFunction>().is_err());
        assert!("sin:1".parse::<RateFunction>().is_err());
        let l: RateFunction = "log:1".parse().unwrap();
        let v = l.inverse(3.0);
        assert!((l.eval(v) - 3.0).abs() < 1e-9);
    }

    #[test]
    fn tabulated_upper_step() {
        let t: RateFunction = "table:1=1,4=2,16=4".parse().unwrap();
        assert_eq!(t.eval(0.5), 1.0);
        assert_eq!(t.eval(1.0), 1.0);
        assert_eq!(t.eval(1.5), 2.0);
        assert_eq!(t.eval(16.0), 4.0);
        assert_eq!(t.eval(100.0), 4.0);
        assert_eq!(t.inverse(2.0), 1.0);
        assert_eq!(t.inverse(5.0), f64::INFINITY);
        assert!("table:4=2,1=1".parse::<RateFunction>().is_err());
    }
}
