//! Iterated kernels, return densities, the γ-transform of a rate function,
//! the decay ↔ profile correspondence and spectral radii.

mod decay;
mod gamma;
mod spectral;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use decay::{
    decay_vs_profile, log_convexity, nash_from_decay, DecayReport, DeltaCondition, NashFieldReport,
    NashFromDecayReport, C_GRID, DELTA_MAX_DEGREE,
};
pub use gamma::{gamma_transform, Cutoff, GammaTransform, TAIL_TOLERANCE};
pub use spectral::{
    dirichlet_spectral_radius, exhaustion, spectral_radius, tree_radial_chain, ExhaustionEntry, RadialChain,
    SpectralRadius,
};

use crate::error::{Error, Result};
use crate::viewpoint::Kernel;

/// Relative tolerance of the direct `2n`-step cross-check.
pub const CROSS_CHECK_TOL: f64 = 1e-9;

/// Short identifier of a kernel for reports.
pub fn kernel_id(kernel: &Kernel) -> String {
    format!("{}@h={}", kernel.space().name(), kernel.scale())
}

fn point_mass(kernel: &Kernel, x0: usize) -> Result<Vec<f64>> {
    kernel.space().check_index(x0)?;
    let mut g = vec![0.0; kernel.len()];
    g[x0] = 1.0 / kernel.space().measure(x0);
    Ok(g)
}

/// Densities `p^n_{x0}(·)` w.r.t. `μ` for `n = 0..=n_max`.
pub fn iterate(kernel: &Kernel, x0: usize, n_max: usize) -> Result<Vec<Vec<f64>>> {
    if n_max == 0 {
        return Err(Error::InvalidParameter("n_max must be at least 1".into()));
    }
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(point_mass(kernel, x0)?);
    for n in 0..n_max {
        let next = kernel.step_density(&out[n]);
        out.push(next);
    }
    Ok(out)
}

/// `p^{2n}_x(x)` on a grid of step counts.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecayCurve {
    pub kernel: String,
    /// Base points; the values are the maximum over them.
    pub base: Vec<usize>,
    pub times: Vec<u64>,
    pub values: Vec<f64>,
    /// Relative gap to direct `2n`-step iteration at the smallest time.
    pub cross_check: f64,
}

impl DecayCurve {
    pub fn is_nonincreasing(&self) -> bool {
        self.values.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-10))
    }

    /// Log-log slope over `lo ≤ n ≤ hi` (times `n ≥ 1` only).
    pub fn loglog_slope(&self, lo: f64, hi: f64) -> f64 {
        let (xs, ys): (Vec<f64>, Vec<f64>) = self
            .times
            .iter()
            .zip(&self.values)
            .map(|(&n, &v)| (n as f64, v))
            .filter(|&(n, _)| n >= 1.0 && n >= lo && n <= hi)
            .unzip();
        crate::stats::loglog_slope(&xs, &ys)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,value\n");
        for (n, v) in self.times.iter().zip(&self.values) {
            out.push_str(&format!("{n},{v}\n"));
        }
        out
    }
}

fn sorted_grid(n_grid: &[u64]) -> Result<Vec<u64>> {
    if n_grid.is_empty() {
        return Err(Error::InvalidParameter("empty time grid".into()));
    }
    let mut g = n_grid.to_vec();
    g.sort_unstable();
    g.dedup();
    Ok(g)
}

/// `Σ_y (p^n_x(y))² μ(y)` at each grid time, plus the relative gap to the
/// directly iterated `p^{2n_0}_x(x)`.
fn diagonal_at(kernel: &Kernel, x: usize, grid: &[u64]) -> Result<(Vec<f64>, f64)> {
    let mu = kernel.space().measures();
    let mut g = point_mass(kernel, x)?;
    let mut values: Vec<f64> = Vec::with_capacity(grid.len());
    let mut n = 0u64;
    for &target in grid {
        while n < target {
            g = kernel.step_density(&g);
            n += 1;
        }
        values.push(g.iter().zip(mu).map(|(p, m)| p * p * m).sum());
    }
    let mut direct = point_mass(kernel, x)?;
    for _ in 0..2 * grid[0] {
        direct = kernel.step_density(&direct);
    }
    let gap = (direct[x] - values[0]).abs() / values[0].abs().max(f64::MIN_POSITIVE);
    Ok((values, gap))
}

/// Return densities `p^{2n}_x(x)` of a symmetric kernel, computed as
/// `Σ_y (p^n_x(y))² μ(y)`.
pub fn on_diagonal(kernel: &Kernel, x: usize, n_grid: &[u64]) -> Result<DecayCurve> {
    sup_on_diagonal(kernel, &[x], n_grid)
}

/// `max_{x ∈ points} p^{2n}_x(x)`; over all points this is `‖P^{2n}‖_{1→∞}`.
pub fn sup_on_diagonal(kernel: &Kernel, points: &[usize], n_grid: &[u64]) -> Result<DecayCurve> {
    kernel.require_symmetric()?;
    if points.is_empty() {
        return Err(Error::InvalidParameter("no base points".into()));
    }
    let grid = sorted_grid(n_grid)?;
    let per_point = points
        .par_iter()
        .map(|&x| diagonal_at(kernel, x, &grid))
        .collect::<Result<Vec<_>>>()?;
    let values = (0..grid.len())
        .map(|i| per_point.iter().map(|(v, _)| v[i]).fold(0.0, f64::max))
        .collect();
    let cross_check = per_point.iter().map(|p| p.1).fold(0.0, f64::max);
    if cross_check > CROSS_CHECK_TOL {
        log::warn!("on-diagonal cross-check gap {cross_check:e} exceeds {CROSS_CHECK_TOL:e}");
    }
    Ok(DecayCurve {
        kernel: kernel_id(kernel),
        base: points.to_vec(),
        times: grid,
        values,
        cross_check,
    })
}

/// `0, 1, 2, 4, …` up to `n_max`, plus `n_max`, thickened to roughly
/// `per_octave` points per doubling.
pub fn geometric_times(n_max: u64, per_octave: usize) -> Vec<u64> {
    let mut out = vec![0u64];
    let mut k = 0usize;
    loop {
        let n = (2f64.powf(k as f64 / per_octave.max(1) as f64)).round() as u64;
        if n > n_max {
            break;
        }
        out.push(n);
        k += 1;
    }
    out.push(n_max);
    out.sort_unstable();
    out.dedup();
    out
}
