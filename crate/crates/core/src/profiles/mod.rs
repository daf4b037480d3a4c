//! Isoperimetric and boundary profiles, Sobolev, Nash and volume checks,
//! and Cheeger constants.

mod boundary;
mod family;
mod inequalities;
mod jp;
mod rate;
mod strategy;

use serde::{Deserialize, Serialize};

pub use boundary::{boundary_profile, cheeger, BoundaryProfiles, CheegerResult};
pub use family::{
    central_point, collect_subsets, default_families, radius_grid, subset_families, AllSubsets, Balls, Boxes,
    Provided, SubsetFamily, SubsetSpec, Sweeps,
};
pub use inequalities::{
    nash_check, sinf_volume_check, sobolev_verify, NashReport, SinfReport, SobolevReport, SOBOLEV_C_PRIME,
};
pub use jp::{indicator_ratio, indicator_ratio_cached, jp_subset, quotient, JpResult, StencilCache};
pub use rate::RateFunction;
pub use strategy::{isoperimetric_profile, profile_in_balls, profile_strategies, ProfileStrategy};

use crate::calculus::GradientBackend;
use crate::error::Result;
use crate::stats::loglog_slope;

/// Largest set enumerated exhaustively.
pub const ENUMERATION_LIMIT: usize = 18;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Exact,
    LowerBound,
    UpperBound,
}

impl Mode {
    /// The weaker of two modes (exact only if both are).
    pub fn meet(self, other: Mode) -> Mode {
        if self == other {
            self
        } else if self == Mode::Exact {
            other
        } else if other == Mode::Exact {
            self
        } else {
            // Mixed bounds carry no guarantee either way; keep the first.
            self
        }
    }
}

/// What a curve measures.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Quantity {
    /// `j_{X,p}(v)`, indexed by mass.
    Isoperimetric { p: f64 },
    /// `J^b_{X,p}(t)`, indexed by radius.
    InBalls { p: f64 },
    /// `I(t)`
    Boundary { h: f64 },
    /// `I↓_𝒜(t)`
    BoundaryLower { h: f64 },
    /// `I↑_𝒜(t)`
    BoundaryUpper { h: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub subset: Vec<usize>,
    /// Field values on `subset` (zero elsewhere); empty for boundary curves.
    pub field: Vec<f64>,
}

impl Witness {
    pub fn full_field(&self, n: usize) -> Vec<f64> {
        let mut f = vec![0.0; n];
        for (&x, &v) in self.subset.iter().zip(&self.field) {
            f[x] = v;
        }
        f
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProfileCurve {
    pub label: String,
    pub quantity: Quantity,
    pub mode: Mode,
    pub args: Vec<f64>,
    pub values: Vec<f64>,
    pub witnesses: Vec<Option<Witness>>,
}

impl ProfileCurve {
    pub fn is_nondecreasing(&self) -> bool {
        self.values.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-12) || w[0].is_nan())
    }

    /// The curve as a tabulated upper-step rate function, over its finite
    /// positive samples.
    pub fn as_rate(&self) -> Result<RateFunction> {
        let mut pts: Vec<(f64, f64)> = Vec::new();
        for (&a, &v) in self.args.iter().zip(&self.values) {
            if a > 0.0 && v > 0.0 && v.is_finite() {
                let v = pts.last().map_or(v, |p| v.max(p.1));
                pts.push((a, v));
            }
        }
        RateFunction::tabulated(pts)
    }

    /// Log-log slope over finite positive samples with `lo ≤ arg ≤ hi`.
    pub fn loglog_slope(&self, lo: f64, hi: f64) -> f64 {
        let (xs, ys): (Vec<f64>, Vec<f64>) = self
            .args
            .iter()
            .zip(&self.values)
            .filter(|(a, v)| **a >= lo && **a <= hi && **v > 0.0 && v.is_finite())
            .map(|(a, v)| (*a, *v))
            .unzip();
        loglog_slope(&xs, &ys)
    }

    /// `argument,value,mode,witness_id` rows; the witness id is the
    /// smallest point of the witness set.
    pub fn to_csv(&self) -> String {
        let mode = serde_json::to_value(self.mode)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default();
        let mut out = String::from("argument,value,mode,witness_id\n");
        for ((a, v), w) in self.args.iter().zip(&self.values).zip(&self.witnesses) {
            let id = w
                .as_ref()
                .and_then(|w| w.subset.first())
                .map_or(String::new(), |x| x.to_string());
            out.push_str(&format!("{a},{v},{mode},{id}\n"));
        }
        out
    }

    /// Re-evaluates every `J` witness through `backend`; returns the
    /// largest relative discrepancy.
    pub fn witness_discrepancy(&self, backend: &dyn GradientBackend) -> f64 {
        let p = match self.quantity {
            Quantity::Isoperimetric { p } | Quantity::InBalls { p } => p,
            _ => {
                let h = backend.scale();
                return self
                    .values
                    .iter()
                    .zip(&self.witnesses)
                    .filter_map(|(v, w)| w.as_ref().map(|w| (v, w)))
                    .map(|(v, w)| {
                        let s = backend.space().subset(w.subset.iter().copied());
                        let m = s.map_or(f64::NAN, |s| backend.space().boundary_measure(&s, h));
                        (m - v).abs() / v.abs().max(1.0)
                    })
                    .fold(0.0, f64::max);
            }
        };
        let n = backend.space().len();
        self.values
            .iter()
            .zip(&self.witnesses)
            .filter_map(|(v, w)| w.as_ref().map(|w| (v, w)))
            .map(|(v, w)| {
                let q = quotient(backend, &w.full_field(n), p);
                if q == *v {
                    0.0
                } else {
                    (q - v).abs() / v.abs().max(1e-300)
                }
            })
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests;
