use std::collections::HashMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{check_len, kernel_values, IDENTITY_TOL};
use crate::error::{Error, Result};
use crate::linalg::{min_eigen_by_shift, min_eigenpair, DENSE_EIGEN_LIMIT, EIGEN_TOL};
use crate::space::Subset;
use crate::viewpoint::{inner, Kernel, ScalarField};

/// The form `E(f) = Σ_x μ(x) Σ_y p_x(y) μ(y) (f(y) − f(x))² = ‖|∇f|_{P,2}‖₂²`
/// restricted to fields supported in a subset `A`, normalized by the
/// measure: `B = M^{−1/2} Q_AA M^{−1/2}` so that `E(f)/‖f‖₂² = gᵀBg/gᵀg`
/// with `g = M^{1/2} f`.
///
/// Values outside `A` are zero but still enter the differences, so the
/// boundary terms are kept.
pub struct QuadraticForm {
    members: Vec<usize>,
    sqrt_mu: Vec<f64>,
    diag: Vec<f64>,
    off: Vec<Vec<(usize, f64)>>,
}

impl QuadraticForm {
    pub fn new(kernel: &Kernel, a: &Subset) -> Self {
        let mu = kernel.space().measures();
        let members = a.members().to_vec();
        let pos: HashMap<usize, usize> = members.iter().enumerate().map(|(i, &x)| (x, i)).collect();
        let m = members.len();
        // Row sums are μ(x) by stochasticity; column sums need a pass.
        let mut col = vec![0.0; m];
        let mut off: Vec<HashMap<usize, f64>> = vec![HashMap::new(); m];
        for x in 0..kernel.len() {
            let (support, density) = kernel.row(x);
            let ix = pos.get(&x).copied();
            for (&y, &p) in support.iter().zip(density) {
                let w = mu[x] * p * mu[y];
                if let Some(iy) = pos.get(&y).copied() {
                    col[iy] += w;
                    if let Some(ix) = ix {
                        if ix != iy {
                            *off[ix].entry(iy).or_default() += w;
                            *off[iy].entry(ix).or_default() += w;
                        } else {
                            // Self-loops cancel in (f(y) − f(x))².
                            col[iy] -= w;
                        }
                    }
                }
            }
        }
        let diag: Vec<f64> = members
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let self_w = mu[x] * kernel.density(x, x) * mu[x];
                (mu[x] - self_w) + col[i]
            })
            .collect();
        let sqrt_mu: Vec<f64> = members.iter().map(|&x| mu[x].sqrt()).collect();
        let off = off
            .into_iter()
            .map(|row| {
                let mut v: Vec<(usize, f64)> = row.into_iter().collect();
                v.sort_unstable_by_key(|e| e.0);
                v
            })
            .collect();
        QuadraticForm {
            members,
            sqrt_mu,
            diag,
            off,
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Normalized matrix `B` in member order.
    pub fn dense(&self) -> DMatrix<f64> {
        let m = self.len();
        let mut b = DMatrix::zeros(m, m);
        for i in 0..m {
            b[(i, i)] = self.diag[i] / (self.sqrt_mu[i] * self.sqrt_mu[i]);
            for &(j, w) in &self.off[i] {
                b[(i, j)] = -w / (self.sqrt_mu[i] * self.sqrt_mu[j]);
            }
        }
        b
    }

    fn apply(&self, g: &[f64]) -> Vec<f64> {
        (0..self.len())
            .map(|i| {
                let mut s = self.diag[i] / (self.sqrt_mu[i] * self.sqrt_mu[i]) * g[i];
                for &(j, w) in &self.off[i] {
                    s -= w / (self.sqrt_mu[i] * self.sqrt_mu[j]) * g[j];
                }
                s
            })
            .collect()
    }

    fn gershgorin(&self) -> f64 {
        (0..self.len())
            .map(|i| {
                let d = self.diag[i] / (self.sqrt_mu[i] * self.sqrt_mu[i]);
                let r: f64 = self.off[i]
                    .iter()
                    .map(|&(j, w)| w / (self.sqrt_mu[i] * self.sqrt_mu[j]))
                    .sum();
                d + r
            })
            .fold(0.0, f64::max)
    }

    /// Smallest Rayleigh quotient `min E(f)/‖f‖₂²` and a minimizer given as
    /// field values on the members, normalized in `L²(μ)`.
    pub fn minimize(&self) -> (f64, Vec<f64>) {
        let m = self.len();
        let (lambda, g) = if m <= DENSE_EIGEN_LIMIT {
            min_eigenpair(self.dense())
        } else {
            let upper = self.gershgorin() * (1.0 + 1e-9);
            let (l, v, converged) = min_eigen_by_shift(m, |g| self.apply(g), upper, EIGEN_TOL);
            if !converged {
                log::warn!("Dirichlet eigen-solve on {m} points did not reach tolerance");
            }
            (l, v)
        };
        let mut f: Vec<f64> = g.iter().zip(&self.sqrt_mu).map(|(g, s)| g / s).collect();
        // Fix the sign so the minimizer is reproducible.
        let pivot = f.iter().copied().fold(0.0_f64, |a, b| if b.abs() > a.abs() { b } else { a });
        if pivot < 0.0 {
            f.iter_mut().for_each(|v| *v = -*v);
        }
        (lambda.max(0.0), f)
    }

    /// `min E(f)/‖f‖₂²` alone, skipping the eigenvector.
    pub fn min_value(&self) -> f64 {
        let m = self.len();
        let lambda = if m <= DENSE_EIGEN_LIMIT {
            self.dense().symmetric_eigenvalues().min()
        } else {
            let upper = self.gershgorin() * (1.0 + 1e-9);
            min_eigen_by_shift(m, |g| self.apply(g), upper, EIGEN_TOL).0
        };
        lambda.max(0.0)
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DirichletResult {
    /// `δ_P(A) = inf ‖|∇f|_{P,2}‖₂² / ‖f‖₂²` over fields supported in `A`.
    pub delta: f64,
    /// `δ/2`; for a symmetric kernel this is `λ_min` of `I − P` compressed to `A`.
    pub lambda: f64,
    /// Minimizer, supported in `A`, with `‖f‖₂ = 1`.
    pub field: Vec<f64>,
}

/// First Dirichlet eigenvalue `δ_P(A)` of a kernel on a subset.
pub fn dirichlet_eigenvalue(kernel: &Kernel, a: &Subset) -> Result<DirichletResult> {
    if a.is_empty() {
        return Err(Error::InvalidParameter("Dirichlet eigenvalue of an empty set".into()));
    }
    if let Some(&x) = a.members().last() {
        kernel.space().check_index(x)?;
    }
    let q = QuadraticForm::new(kernel, a);
    let (delta, values) = q.minimize();
    let mut field = vec![0.0; kernel.len()];
    for (&x, v) in q.members().iter().zip(values) {
        field[x] = v;
    }
    Ok(DirichletResult {
        delta,
        lambda: delta / 2.0,
        field,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Energy {
    /// `⟨(I − P)f, f⟩_μ`
    pub dirichlet: f64,
    /// `‖|∇f|_{P,2}‖₂²`
    pub gradient_norm_sq: f64,
}

impl Energy {
    /// Whether `dirichlet = gradient_norm_sq / 2` to `tol` relative.
    pub fn consistent(&self, tol: f64) -> bool {
        let scale = self.dirichlet.abs().max(self.gradient_norm_sq.abs() / 2.0);
        (self.dirichlet - self.gradient_norm_sq / 2.0).abs() <= tol * scale.max(f64::MIN_POSITIVE)
    }
}

/// Both sides of the energy identity for a symmetric kernel.
pub fn energy(kernel: &Kernel, f: &ScalarField) -> Result<Energy> {
    check_len(kernel.space(), f.values())?;
    kernel.require_symmetric()?;
    let mu = kernel.space().measures();
    let v = f.values();
    let pf = kernel.apply_values(v);
    let lf: Vec<f64> = v.iter().zip(&pf).map(|(a, b)| a - b).collect();
    let dirichlet = inner(mu, &lf, v);
    let g = kernel_values(kernel, v, 2.0);
    let gradient_norm_sq = g.iter().zip(mu).map(|(g, m)| g * g * m).sum();
    let e = Energy {
        dirichlet,
        gradient_norm_sq,
    };
    if !e.consistent(IDENTITY_TOL) && gradient_norm_sq > 1e-300 {
        log::warn!("energy identity off: {e:?}");
    }
    Ok(e)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyIdentity {
    /// `‖|∇f|_{P²,2}‖₂²`
    pub lhs: f64,
    /// `‖f‖₂² − ‖Pf‖₂²`
    pub rhs: f64,
}

impl EnergyIdentity {
    /// Whether `lhs = 2·rhs` to `tol` relative.
    pub fn consistent(&self, tol: f64) -> bool {
        let scale = self.lhs.abs().max(2.0 * self.rhs.abs());
        (self.lhs - 2.0 * self.rhs).abs() <= tol * scale.max(f64::MIN_POSITIVE)
    }
}

/// Both sides of the two-step identity, using the composed kernel `P∘P`.
pub fn p2_energy_identity(kernel: &Kernel, f: &ScalarField) -> Result<EnergyIdentity> {
    check_len(kernel.space(), f.values())?;
    kernel.require_symmetric()?;
    let mu = kernel.space().measures();
    let v = f.values();
    let p2 = kernel.product(kernel, 2.0 * kernel.scale())?;
    let g = kernel_values(&p2, v, 2.0);
    let lhs = g.iter().zip(mu).map(|(g, m)| g * g * m).sum();
    let pf = kernel.apply_values(v);
    let rhs = inner(mu, v, v) - inner(mu, &pf, &pf);
    Ok(EnergyIdentity { lhs, rhs })
}
