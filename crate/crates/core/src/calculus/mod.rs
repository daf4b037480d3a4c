//! Gradients at scale `h`, Laplacians, Dirichlet eigenvalues, energy
//! identities and the co-area formula.

mod backend;
mod energy;
mod invariants;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::MetricMeasureSpace;
use crate::viewpoint::{Kernel, ScalarField};

pub use backend::{
    gradient_backends, BackendFactory, BackendParams, GradientBackend, KernelBackend, LpBackend,
    Stencil, SupBackend,
};
pub use energy::{
    dirichlet_eigenvalue, energy, p2_energy_identity, DirichletResult, Energy, EnergyIdentity,
    QuadraticForm,
};
pub use invariants::{
    gradient_sandwich, scale_monotonicity, smoothing_check, smoothing_constant, SandwichReport,
    SmoothingReport,
};

/// Relative tolerance for the energy identities.
pub const IDENTITY_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GradientKind {
    /// `|∇f|_h`
    Sup { h: f64 },
    /// `|∇f|_{h,p}`
    Lp { h: f64, p: f64 },
    /// `|∇f|_{P,p}`
    Viewpoint { h: f64, p: f64 },
    /// A row-wise reduction of a [`FiberGradient`].
    FiberReduced { h: f64, p: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientField {
    pub values: Vec<f64>,
    pub kind: GradientKind,
}

impl GradientField {
    /// `‖|∇f|‖_p` against the measure of `space`.
    pub fn norm(&self, space: &MetricMeasureSpace, p: f64) -> f64 {
        crate::viewpoint::norm(space.measures(), &self.values, p)
    }

    pub fn integral(&self, space: &MetricMeasureSpace) -> f64 {
        self.values.iter().zip(space.measures()).map(|(g, m)| g * m).sum()
    }
}

pub(crate) fn check_p(p: f64) -> Result<()> {
    if p >= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("exponent {p} must be at least 1")))
    }
}

pub(crate) fn check_len(space: &MetricMeasureSpace, f: &[f64]) -> Result<()> {
    if f.len() == space.len() {
        Ok(())
    } else {
        Err(Error::SpaceMismatch(format!(
            "field has {} values for a space of {} points",
            f.len(),
            space.len()
        )))
    }
}

pub(crate) fn sup_values(space: &MetricMeasureSpace, f: &[f64], h: f64) -> Vec<f64> {
    (0..space.len())
        .into_par_iter()
        .map(|x| {
            space
                .ball_indices(x, h)
                .into_iter()
                .map(|y| (f[y] - f[x]).abs())
                .fold(0.0, f64::max)
        })
        .collect()
}

pub(crate) fn lp_values(space: &MetricMeasureSpace, f: &[f64], h: f64, p: f64) -> Vec<f64> {
    if p.is_infinite() {
        return sup_values(space, f, h);
    }
    let mu = space.measures();
    (0..space.len())
        .into_par_iter()
        .map(|x| {
            let (mut s, mut v) = (0.0, 0.0);
            for y in space.ball_indices(x, h) {
                s += (f[y] - f[x]).abs().powf(p) * mu[y];
                v += mu[y];
            }
            (s / v).powf(1.0 / p)
        })
        .collect()
}

pub(crate) fn kernel_values(kernel: &Kernel, f: &[f64], p: f64) -> Vec<f64> {
    let mu = kernel.space().measures();
    (0..kernel.len())
        .into_par_iter()
        .map(|x| {
            let (support, density) = kernel.row(x);
            if p.is_infinite() {
                support.iter().map(|&y| (f[y] - f[x]).abs()).fold(0.0, f64::max)
            } else {
                let s: f64 = support
                    .iter()
                    .zip(density)
                    .map(|(&y, w)| (f[y] - f[x]).abs().powf(p) * w * mu[y])
                    .sum();
                s.powf(1.0 / p)
            }
        })
        .collect()
}

/// `|∇f|_h(x) = sup_{y ∈ B(x,h)} |f(y) − f(x)|`.
pub fn grad_sup(space: &MetricMeasureSpace, f: &ScalarField, h: f64) -> Result<GradientField> {
    check_len(space, f.values())?;
    if h < 0.0 {
        return Err(Error::InvalidParameter(format!("scale {h} is negative")));
    }
    Ok(GradientField {
        values: sup_values(space, f.values(), h),
        kind: GradientKind::Sup { h },
    })
}

/// `|∇f|_{h,p}(x) = ( V(x,h)⁻¹ Σ_{y ∈ B(x,h)} |f(y) − f(x)|^p μ(y) )^{1/p}`.
pub fn grad_lp(space: &MetricMeasureSpace, f: &ScalarField, h: f64, p: f64) -> Result<GradientField> {
    check_len(space, f.values())?;
    check_p(p)?;
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!("scale {h} must be positive")));
    }
    Ok(GradientField {
        values: lp_values(space, f.values(), h, p),
        kind: GradientKind::Lp { h, p },
    })
}

/// `|∇f|_{P,p}(x) = ‖f − f(x)‖_{L^p(P_x)}`; for `p = ∞` the sup over
/// `{y : p_x(y) > 0}`.
pub fn grad_viewpoint(kernel: &Kernel, f: &ScalarField, p: f64) -> Result<GradientField> {
    check_len(kernel.space(), f.values())?;
    check_p(p)?;
    Ok(GradientField {
        values: kernel_values(kernel, f.values(), p),
        kind: GradientKind::Viewpoint {
            h: kernel.scale(),
            p,
        },
    })
}

/// `∇_h f(x, y) = f(x) − f(y)` on pairs with `d(x, y) ≤ h`.
#[derive(Clone, Debug, PartialEq)]
pub struct FiberGradient {
    h: f64,
    rows: Vec<Vec<(usize, f64)>>,
}

impl FiberGradient {
    pub fn new(space: &MetricMeasureSpace, f: &ScalarField, h: f64) -> Result<Self> {
        check_len(space, f.values())?;
        let v = f.values();
        let rows = (0..space.len())
            .into_par_iter()
            .map(|x| {
                space
                    .ball_indices(x, h)
                    .into_iter()
                    .map(|y| (y, v[x] - v[y]))
                    .collect()
            })
            .collect();
        Ok(FiberGradient { h, rows })
    }

    pub fn get(&self, x: usize, y: usize) -> Option<f64> {
        let row = &self.rows[x];
        row.binary_search_by_key(&y, |e| e.0).ok().map(|i| row[i].1)
    }

    pub fn row(&self, x: usize) -> &[(usize, f64)] {
        &self.rows[x]
    }

    /// Largest `|∇f(x,y) + ∇f(y,x)|` and largest `|∇f(x,x)|`.
    pub fn antisymmetry_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for (x, row) in self.rows.iter().enumerate() {
            for &(y, v) in row {
                let back = self.get(y, x).unwrap_or(f64::NAN);
                worst = worst.max((v + back).abs());
                if x == y {
                    worst = worst.max(v.abs());
                }
            }
        }
        worst
    }

    /// Row-wise reduction: `p = ∞` gives `|∇f|_h`, finite `p` the
    /// ball-averaged `|∇f|_{h,p}`.
    pub fn reduce(&self, space: &MetricMeasureSpace, p: f64) -> Result<GradientField> {
        check_p(p)?;
        let mu = space.measures();
        let values = self
            .rows
            .iter()
            .map(|row| {
                if p.is_infinite() {
                    row.iter().map(|e| e.1.abs()).fold(0.0, f64::max)
                } else {
                    let v: f64 = row.iter().map(|e| mu[e.0]).sum();
                    let s: f64 = row.iter().map(|e| e.1.abs().powf(p) * mu[e.0]).sum();
                    (s / v).powf(1.0 / p)
                }
            })
            .collect();
        Ok(GradientField {
            values,
            kind: GradientKind::FiberReduced { h: self.h, p },
        })
    }
}

/// `Δ_{P,p} f(x) = −∫ |f(y) − f(x)|^{p−2} (f(y) − f(x)) dP_x(y)`, so that
/// `p = 2` gives `f − Pf`.
pub fn laplacian(kernel: &Kernel, f: &ScalarField, p: f64) -> Result<ScalarField> {
    check_len(kernel.space(), f.values())?;
    if !(p > 1.0) {
        return Err(Error::InvalidParameter(format!("p-Laplacian needs p > 1, got {p}")));
    }
    let v = f.values();
    let values = if p == 2.0 {
        let pf = kernel.apply_values(v);
        v.iter().zip(pf).map(|(a, b)| a - b).collect()
    } else {
        let mu = kernel.space().measures();
        (0..kernel.len())
            .into_par_iter()
            .map(|x| {
                let (support, density) = kernel.row(x);
                -support
                    .iter()
                    .zip(density)
                    .map(|(&y, w)| {
                        let d = v[y] - v[x];
                        if d == 0.0 {
                            0.0
                        } else {
                            d.abs().powf(p - 2.0) * d * w * mu[y]
                        }
                    })
                    .sum::<f64>()
            })
            .collect()
    };
    ScalarField::new(kernel.space(), values)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coarea {
    /// `½ T`
    pub lower: f64,
    /// `∫ |∇f|_h dμ`
    pub middle: f64,
    /// `T = ∫₀^∞ μ(∂_h {f ≥ t}) dt`, an exact finite sum over the values of f.
    pub upper: f64,
}

impl Coarea {
    pub fn holds(&self, slack: f64) -> bool {
        let tol = slack * self.upper.abs().max(1.0);
        self.lower <= self.middle + tol && self.middle <= self.upper + tol
    }
}

/// The three terms of the co-area sandwich at scale `h` for `f ≥ 0`.
pub fn coarea(space: &MetricMeasureSpace, f: &ScalarField, h: f64) -> Result<Coarea> {
    check_len(space, f.values())?;
    let v = f.values();
    if let Some(index) = v.iter().position(|&x| x < 0.0) {
        return Err(Error::NegativeField {
            index,
            value: v[index],
        });
    }
    let mut levels: Vec<f64> = v.iter().copied().filter(|&x| x > 0.0).collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let mut prev = 0.0;
    let terms: Vec<(f64, f64)> = levels
        .iter()
        .map(|&t| {
            let gap = t - prev;
            prev = t;
            (gap, t)
        })
        .collect();
    let upper: f64 = terms
        .par_iter()
        .map(|&(gap, t)| {
            let mask: Vec<bool> = v.iter().map(|&x| x >= t).collect();
            let b = space.boundary_mask(&mask, h);
            gap * b
                .iter()
                .zip(space.measures())
                .filter(|(&m, _)| m)
                .map(|(_, &w)| w)
                .sum::<f64>()
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum();
    let middle = grad_sup(space, f, h)?.integral(space);
    Ok(Coarea {
        lower: 0.5 * upper,
        middle,
        upper,
    })
}

#[cfg(test)]
mod tests;
