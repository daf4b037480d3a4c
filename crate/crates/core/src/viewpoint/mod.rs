//! Viewpoints at scale `h` and their Markov operators.
//!
//! A [`Kernel`] stores, for every point `x`, a finitely supported density
//! `p_x` with respect to the space measure, so the transition probability
//! from `x` to `y` is `p_x(y)·μ(y)`. Storing densities rather than
//! probabilities makes reversibility a literal symmetry `p_x(y) = p_y(x)`.
//!
//! A [`Viewpoint`] is a kernel together with a certificate `(A, c)`:
//! `supp p_x ⊆ B(x, A·h)` and `p_x ≥ c` on `B(x, h)`.

mod builders;
mod field;
pub mod io;

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::MetricMeasureSpace;

pub use builders::{
    identity_kernel, kernel_builders, lazy_kernel, srw_kernel, standard_kernel, standard_viewpoint,
    KernelBuilder,
};
pub use field::{inner, norm, ScalarField};

/// Relative tolerance for stochasticity and symmetry checks.
pub const KERNEL_TOL: f64 = 1e-12;

/// Doubling constants above this trigger a warning when composing.
pub const DOUBLING_WARN_CAP: f64 = 64.0;

/// Number of candidate scales searched by [`compose`].
pub const COMPOSE_GRID: usize = 16;

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Row {
    pub support: Vec<usize>,
    pub density: Vec<f64>,
}

impl Row {
    fn get(&self, y: usize) -> f64 {
        match self.support.binary_search(&y) {
            Ok(i) => self.density[i],
            Err(_) => 0.0,
        }
    }
}

/// A Markov kernel given by densities w.r.t. the space measure.
#[derive(Clone, Debug)]
pub struct Kernel {
    space: Arc<MetricMeasureSpace>,
    h: f64,
    rows: Vec<Row>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    /// Support radius factor: `supp p_x ⊆ B(x, a·h)`.
    pub a: f64,
    /// Density floor on `B(x, h)`.
    pub c: f64,
}

#[derive(Clone, Debug)]
pub struct Viewpoint {
    kernel: Kernel,
    certificate: Certificate,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetryReport {
    pub symmetric: bool,
    pub x: usize,
    pub y: usize,
    pub p_xy: f64,
    pub p_yx: f64,
    pub gap: f64,
}

impl Kernel {
    /// Builds a kernel from `(support, density)` rows. Zero densities are
    /// dropped; each row must integrate to one against the measure.
    pub fn from_rows(
        space: Arc<MetricMeasureSpace>,
        h: f64,
        rows: Vec<(Vec<usize>, Vec<f64>)>,
    ) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidParameter(format!("scale {h} must be positive")));
        }
        if rows.len() != space.len() {
            return Err(Error::SpaceMismatch(format!(
                "kernel has {} rows for a space of {} points",
                rows.len(),
                space.len()
            )));
        }
        let mut out = Vec::with_capacity(rows.len());
        for (x, (support, density)) in rows.into_iter().enumerate() {
            if support.len() != density.len() {
                return Err(Error::InvalidParameter(format!(
                    "row {x}: {} support points but {} densities",
                    support.len(),
                    density.len()
                )));
            }
            let mut pairs: Vec<(usize, f64)> = Vec::with_capacity(support.len());
            for (y, p) in support.into_iter().zip(density) {
                space.check_index(y)?;
                if !(p.is_finite() && p >= 0.0) {
                    return Err(Error::ViewpointViolation {
                        row: x,
                        axiom: "nonnegativity",
                        point: y,
                    });
                }
                if p > 0.0 {
                    pairs.push((y, p));
                }
            }
            pairs.sort_unstable_by_key(|&(y, _)| y);
            if pairs.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(Error::InvalidParameter(format!("row {x} lists a point twice")));
            }
            let (support, density) = pairs.into_iter().unzip();
            out.push(Row { support, density });
        }
        let kernel = Kernel { space, h, rows: out };
        kernel.check_stochastic()?;
        Ok(kernel)
    }

    pub(crate) fn from_parts(space: Arc<MetricMeasureSpace>, h: f64, rows: Vec<Row>) -> Self {
        Kernel { space, h, rows }
    }

    fn check_stochastic(&self) -> Result<()> {
        let mu = self.space.measures();
        for (x, row) in self.rows.iter().enumerate() {
            let sum: f64 = row.support.iter().zip(&row.density).map(|(&y, p)| p * mu[y]).sum();
            if (sum - 1.0).abs() > KERNEL_TOL * row.support.len().max(1) as f64 {
                return Err(Error::NotStochastic { row: x, sum });
            }
        }
        Ok(())
    }

    pub fn space(&self) -> &MetricMeasureSpace {
        &self.space
    }

    pub fn space_arc(&self) -> &Arc<MetricMeasureSpace> {
        &self.space
    }

    pub fn scale(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// `p_x(y)`.
    pub fn density(&self, x: usize, y: usize) -> f64 {
        self.rows[x].get(y)
    }

    /// Support and densities of the row at `x`.
    pub fn row(&self, x: usize) -> (&[usize], &[f64]) {
        let r = &self.rows[x];
        (&r.support, &r.density)
    }

    /// Same kernel, reinterpreted at another nominal scale.
    pub fn with_scale(&self, h: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidParameter(format!("scale {h} must be positive")));
        }
        Ok(Kernel { h, ..self.clone() })
    }

    pub(crate) fn same_space(&self, other: &MetricMeasureSpace) -> bool {
        std::ptr::eq(&*self.space, other)
            || (self.space.len() == other.len() && self.space.measures() == other.measures())
    }

    fn check_field(&self, f: &ScalarField) -> Result<()> {
        if f.len() != self.len() {
            return Err(Error::SpaceMismatch(format!(
                "field has {} values, kernel has {} rows",
                f.len(),
                self.len()
            )));
        }
        Ok(())
    }

    /// `(Pf)(x) = Σ_y f(y) p_x(y) μ(y)`.
    pub fn apply(&self, f: &ScalarField) -> Result<ScalarField> {
        self.check_field(f)?;
        ScalarField::new(&self.space, self.apply_values(f.values()))
    }

    pub fn apply_values(&self, f: &[f64]) -> Vec<f64> {
        let mu = self.space.measures();
        self.rows
            .par_iter()
            .map(|row| {
                row.support
                    .iter()
                    .zip(&row.density)
                    .map(|(&y, p)| f[y] * p * mu[y])
                    .sum()
            })
            .collect()
    }

    /// Pushes a density forward one step: `g(y) = Σ_x g(x) μ(x) p_x(y)`,
    /// i.e. the density of the law after one more transition.
    pub fn step_density(&self, g: &[f64]) -> Vec<f64> {
        let mu = self.space.measures();
        let mut out = vec![0.0; g.len()];
        for (x, row) in self.rows.iter().enumerate() {
            let w = g[x] * mu[x];
            if w == 0.0 {
                continue;
            }
            for (&y, p) in row.support.iter().zip(&row.density) {
                out[y] += w * p;
            }
        }
        out
    }

    /// Worst asymmetry `|p_x(y) − p_y(x)|` over all pairs.
    pub fn is_symmetric(&self) -> SymmetryReport {
        let worst = (0..self.len())
            .into_par_iter()
            .map(|x| {
                let row = &self.rows[x];
                let mut best = (0.0_f64, x, x, 0.0, 0.0, true);
                for (&y, &pxy) in row.support.iter().zip(&row.density) {
                    let pyx = self.rows[y].get(x);
                    let gap = (pxy - pyx).abs();
                    let ok = gap <= KERNEL_TOL * pxy.abs().max(pyx.abs());
                    if gap > best.0 || (!ok && best.5) {
                        best = (gap, x, y, pxy, pyx, ok);
                    }
                }
                best
            })
            .reduce(
                || (0.0, 0, 0, 0.0, 0.0, true),
                |a, b| {
                    // A failing pair always wins over a passing one.
                    match (a.5, b.5) {
                        (true, false) => b,
                        (false, true) => a,
                        _ => {
                            if b.0 > a.0 {
                                b
                            } else {
                                a
                            }
                        }
                    }
                },
            );
        // Entries present in only one direction appear as gaps from the
        // populated side, so scanning rows covers every pair.
        SymmetryReport {
            symmetric: worst.5,
            x: worst.1,
            y: worst.2,
            p_xy: worst.3,
            p_yx: worst.4,
            gap: worst.0,
        }
    }

    pub fn require_symmetric(&self) -> Result<()> {
        let rep = self.is_symmetric();
        if rep.symmetric {
            Ok(())
        } else {
            Err(Error::NotSymmetric {
                x: rep.x,
                y: rep.y,
                gap: rep.gap,
            })
        }
    }

    /// Kernel of `P∘Q`: `r_x(z) = Σ_y p_x(y) μ(y) q_y(z)`, tagged with
    /// scale `h`.
    pub fn product(&self, other: &Kernel, h: f64) -> Result<Kernel> {
        if !self.same_space(&other.space) {
            return Err(Error::SpaceMismatch("composed kernels live on different spaces".into()));
        }
        let n = self.len();
        let mu = self.space.measures();
        let rows: Vec<Row> = (0..n)
            .into_par_iter()
            .map_init(
                || (vec![0.0; n], vec![false; n], Vec::new()),
                |(acc, seen, touched), x| {
                    let row = &self.rows[x];
                    for (&y, &pxy) in row.support.iter().zip(&row.density) {
                        let w = pxy * mu[y];
                        let q = &other.rows[y];
                        for (&z, &qyz) in q.support.iter().zip(&q.density) {
                            if !seen[z] {
                                seen[z] = true;
                                touched.push(z);
                            }
                            acc[z] += w * qyz;
                        }
                    }
                    touched.sort_unstable();
                    let mut support = Vec::with_capacity(touched.len());
                    let mut density = Vec::with_capacity(touched.len());
                    for &z in touched.iter() {
                        if acc[z] > 0.0 {
                            support.push(z);
                            density.push(acc[z]);
                        }
                        acc[z] = 0.0;
                        seen[z] = false;
                    }
                    touched.clear();
                    Row { support, density }
                },
            )
            .collect();
        Ok(Kernel {
            space: self.space.clone(),
            h,
            rows,
        })
    }

    /// Dense matrix `M[x][y] = p_x(y)`.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.len();
        self.rows
            .iter()
            .map(|row| {
                let mut v = vec![0.0; n];
                for (&y, &p) in row.support.iter().zip(&row.density) {
                    v[y] = p;
                }
                v
            })
            .collect()
    }

    /// Smallest `A ≥ 1` with `supp p_x ⊆ B(x, A·h)` and largest `c` with
    /// `p_x ≥ c` on `B(x, h)`, or the first violated axiom.
    pub fn certify(&self) -> Result<Certificate> {
        let space = &self.space;
        let h = self.h;
        let per_row: Vec<Result<(f64, f64)>> = (0..self.len())
            .into_par_iter()
            .map(|x| {
                let row = &self.rows[x];
                let mut radius = 0.0_f64;
                for &y in &row.support {
                    radius = radius.max(space.dist(x, y));
                }
                let mut floor = f64::INFINITY;
                for y in space.ball_indices(x, h) {
                    let p = row.get(y);
                    if p <= 0.0 {
                        return Err(Error::ViewpointViolation {
                            row: x,
                            axiom: "density floor",
                            point: y,
                        });
                    }
                    floor = floor.min(p);
                }
                Ok((radius, floor))
            })
            .collect();
        let mut a = 1.0_f64;
        let mut c = f64::INFINITY;
        for r in per_row {
            let (radius, floor) = r?;
            a = a.max(radius / h);
            c = c.min(floor);
        }
        Ok(Certificate { a, c })
    }
}

impl Viewpoint {
    /// Certifies `kernel` at its own scale.
    pub fn validate(kernel: Kernel) -> Result<Self> {
        let certificate = kernel.certify()?;
        Ok(Viewpoint { kernel, certificate })
    }

    /// Certifies the same kernel at another scale.
    pub fn validate_at(kernel: &Kernel, h: f64) -> Result<Self> {
        Self::validate(kernel.with_scale(h)?)
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn into_kernel(self) -> Kernel {
        self.kernel
    }

    pub fn certificate(&self) -> Certificate {
        self.certificate
    }
}

impl std::ops::Deref for Viewpoint {
    type Target = Kernel;
    fn deref(&self) -> &Kernel {
        &self.kernel
    }
}

/// Re-expresses the standard viewpoint as densities w.r.t. `μ' = V(·, h) μ`,
/// which makes it symmetric. Returns the new viewpoint and the reweighted
/// space it lives on.
pub fn symmetrize(vp: &Viewpoint) -> Result<(Viewpoint, Arc<MetricMeasureSpace>)> {
    let space = vp.space();
    let h = vp.scale();
    let vols = space.volumes(h);
    for x in 0..space.len() {
        let (support, density) = vp.row(x);
        let ball = space.ball_indices(x, h);
        let expected = 1.0 / vols[x];
        let standard = support == ball.as_slice()
            && density
                .iter()
                .all(|&p| (p - expected).abs() <= KERNEL_TOL * expected);
        if !standard {
            return Err(Error::InvalidParameter(format!(
                "symmetrize expects the standard viewpoint; row {x} differs"
            )));
        }
    }
    let measure: Vec<f64> = vols.iter().zip(space.measures()).map(|(v, m)| v * m).collect();
    let new_space = Arc::new(
        space
            .reweighted(measure)?
            .with_name(format!("{}/sym(h={h})", space.name())),
    );
    let rows = (0..space.len())
        .map(|x| {
            let (support, density) = vp.row(x);
            Row {
                support: support.to_vec(),
                density: support.iter().zip(density).map(|(&y, p)| p / vols[y]).collect(),
            }
        })
        .collect();
    let kernel = Kernel::from_parts(new_space.clone(), h, rows);
    kernel.check_stochastic()?;
    Ok((Viewpoint::validate(kernel)?, new_space))
}

/// `P∘Q`, certified at the largest candidate scale
/// `(h_P + h_Q)·2^{−k/4}`, `k = 1..=16`, for which it is a viewpoint.
pub fn compose(p: &Kernel, q: &Kernel) -> Result<Viewpoint> {
    let total = p.scale() + q.scale();
    let product = p.product(q, total)?;
    let space = p.space();
    if let Ok(rep) = space.doubling_profile(&[p.scale().max(q.scale())]) {
        if rep[0].constant > DOUBLING_WARN_CAP {
            log::warn!(
                "doubling constant {} at scale {} exceeds {}; composed constants may degrade",
                rep[0].constant,
                rep[0].scale,
                DOUBLING_WARN_CAP
            );
        }
    }
    let mut witnesses = Vec::new();
    for k in 1..=COMPOSE_GRID {
        let s = total * 2f64.powf(-(k as f64) / 4.0);
        match Viewpoint::validate_at(&product, s) {
            Ok(vp) => return Ok(vp),
            Err(e) => witnesses.push(format!("h={s}: {e}")),
        }
    }
    Err(Error::CompositionFailed(witnesses.join("; ")))
}

#[cfg(test)]
mod tests;
