use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{power_iteration, EIGEN_TOL, MAX_POWER_ITERATIONS};
use crate::space::Subset;
use crate::viewpoint::Kernel;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectralRadius {
    pub rho: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Number of points the operator acts on.
    pub size: usize,
}

/// Spectral radius of `P` on `L²(μ)` restricted to `members` (killed on
/// leaving), via power iteration on `M^{1/2} P M^{−1/2}`.
fn compressed_radius(kernel: &Kernel, members: &[usize]) -> SpectralRadius {
    let n = kernel.len();
    let sqrt_mu: Vec<f64> = kernel.space().measures().iter().map(|m| m.sqrt()).collect();
    let apply = |v: &[f64]| -> Vec<f64> {
        let mut full = vec![0.0; n];
        for (&x, &vx) in members.iter().zip(v) {
            full[x] = vx / sqrt_mu[x];
        }
        let pf = kernel.apply_values(&full);
        members.iter().map(|&x| pf[x] * sqrt_mu[x]).collect()
    };
    let res = power_iteration(members.len(), apply, EIGEN_TOL, MAX_POWER_ITERATIONS);
    SpectralRadius {
        rho: res.value,
        iterations: res.iterations,
        converged: res.converged,
        size: members.len(),
    }
}

/// `ρ(P)` of a symmetric kernel on the whole (finite) space, which is 1:
/// constants are fixed. Use [`dirichlet_spectral_radius`] for a finite
/// proxy of the infinite-space quantity.
pub fn spectral_radius(kernel: &Kernel) -> Result<SpectralRadius> {
    kernel.require_symmetric()?;
    let all: Vec<usize> = (0..kernel.len()).collect();
    Ok(compressed_radius(kernel, &all))
}

/// `ρ(P_A)` of the kernel compressed to `A`.
pub fn dirichlet_spectral_radius(kernel: &Kernel, a: &Subset) -> Result<SpectralRadius> {
    kernel.require_symmetric()?;
    if a.is_empty() {
        return Err(Error::InvalidParameter("empty Dirichlet set".into()));
    }
    Ok(compressed_radius(kernel, a.members()))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExhaustionEntry {
    pub radius: f64,
    pub size: usize,
    pub rho: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// `ρ(P_{B(x,r)})` over growing balls. The full finite space always has
/// `ρ = 1`; the compressed radii are the meaningful truncation diagnostic.
pub fn exhaustion(kernel: &Kernel, center: usize, radii: &[f64]) -> Result<Vec<ExhaustionEntry>> {
    kernel.require_symmetric()?;
    let space = kernel.space();
    space.check_index(center)?;
    radii
        .iter()
        .map(|&r| {
            let ball = space.ball(center, r)?;
            let s = compressed_radius(kernel, ball.members());
            Ok(ExhaustionEntry {
                radius: r,
                size: s.size,
                rho: s.rho,
                iterations: s.iterations,
                converged: s.converged,
            })
        })
        .collect()
}

/// Birth-death chain of the distance from the root for the simple random
/// walk on the `q`-regular tree, killed beyond `depth`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RadialChain {
    pub degree: usize,
    pub depth: usize,
    /// `P(k → k+1)`; at `depth` this mass is killed.
    pub up: Vec<f64>,
    /// `P(k → k−1)`
    pub down: Vec<f64>,
}

pub fn tree_radial_chain(degree: usize, depth: usize) -> Result<RadialChain> {
    if degree < 2 {
        return Err(Error::InvalidParameter(format!("tree degree {degree} must be at least 2")));
    }
    let q = degree as f64;
    let up = (0..=depth).map(|k| if k == 0 { 1.0 } else { (q - 1.0) / q }).collect();
    let down = (0..=depth).map(|k| if k == 0 { 0.0 } else { 1.0 / q }).collect();
    Ok(RadialChain { degree, depth, up, down })
}

impl RadialChain {
    /// `2√(q−1)/q`, the spectral radius on the infinite tree.
    pub fn infinite_radius(&self) -> f64 {
        let q = self.degree as f64;
        2.0 * (q - 1.0).sqrt() / q
    }

    /// Off-diagonal of the symmetrized (tridiagonal) chain:
    /// `√(P(k→k+1) P(k+1→k))`.
    pub fn symmetric_offdiagonal(&self) -> Vec<f64> {
        (0..self.depth).map(|k| (self.up[k] * self.down[k + 1]).sqrt()).collect()
    }

    /// Dirichlet spectral radius of the ball of radius `depth`; the top
    /// eigenfunction is radial, so the quotient chain carries it.
    pub fn spectral_radius(&self) -> SpectralRadius {
        let off = self.symmetric_offdiagonal();
        let n = self.depth + 1;
        let apply = |v: &[f64]| -> Vec<f64> {
            (0..n)
                .map(|k| {
                    let l = if k > 0 { off[k - 1] * v[k - 1] } else { 0.0 };
                    let r = if k + 1 < n { off[k] * v[k + 1] } else { 0.0 };
                    l + r
                })
                .collect()
        };
        let res = power_iteration(n, apply, EIGEN_TOL, MAX_POWER_ITERATIONS);
        SpectralRadius {
            rho: res.value,
            iterations: res.iterations,
            converged: res.converged,
            size: n,
        }
    }

    /// Return probabilities `p^{2n}(root, root)` for `n = 0..=n_max` of the
    /// killed walk (exact path counting on the quotient).
    pub fn return_probabilities(&self, n_max: usize) -> Vec<f64> {
        let n = self.depth + 1;
        let mut dist = vec![0.0; n];
        dist[0] = 1.0;
        let mut out = vec![1.0];
        for step in 1..=2 * n_max {
            let mut next = vec![0.0; n];
            for k in 0..n {
                if dist[k] == 0.0 {
                    continue;
                }
                if k + 1 < n {
                    next[k + 1] += dist[k] * self.up[k];
                }
                if k > 0 {
                    next[k - 1] += dist[k] * self.down[k];
                }
            }
            dist = next;
            if step % 2 == 0 {
                out.push(dist[0]);
            }
        }
        out
    }

    /// `(p^{2n}(root,root))^{1/2n}`, which tends to the spectral radius.
    pub fn root_test(&self, n: usize) -> f64 {
        let p = self.return_probabilities(n);
        p[n].powf(1.0 / (2.0 * n as f64))
    }
}
