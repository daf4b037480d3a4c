//! Eigenvalue helpers: a dense symmetric solver for small problems and power
//! iteration for large sparse ones.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Largest size handed to the dense symmetric eigensolver.
pub const DENSE_EIGEN_LIMIT: usize = 2000;

/// Convergence tolerance for iterative eigen-solves.
pub const EIGEN_TOL: f64 = 1e-10;

pub const MAX_POWER_ITERATIONS: usize = 400_000;

const START_SEED: u64 = 0x5eed_1e55;

/// Smallest eigenvalue of a symmetric matrix with a unit eigenvector.
pub fn min_eigenpair(m: DMatrix<f64>) -> (f64, Vec<f64>) {
    let eig = SymmetricEigen::new(m);
    let (i, &lambda) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty matrix");
    (lambda, eig.eigenvectors.column(i).iter().copied().collect())
}

/// All eigenvalues of a symmetric matrix, ascending.
pub fn eigenvalues(m: DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Deterministic start vector with entries in `[0.5, 1.5)`.
pub fn start_vector(n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(START_SEED);
    (0..n).map(|_| rng.random_range(0.5..1.5)).collect()
}

#[derive(Clone, Debug)]
pub struct PowerIteration {
    /// Spectral radius estimate `ρ = ‖S v‖` for the final unit vector `v`.
    pub value: f64,
    pub vector: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Power iteration for the spectral radius of a symmetric operator.
///
/// Tracks the Rayleigh quotient of `S²`, so a spectrum symmetric about zero
/// (bipartite walks) still converges. Stops when the `S²` residual
/// `‖S²v − θv‖ ≤ tol·θ`.
pub fn power_iteration<F>(n: usize, apply: F, tol: f64, max_iter: usize) -> PowerIteration
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    if n == 0 {
        return PowerIteration {
            value: 0.0,
            vector: Vec::new(),
            iterations: 0,
            converged: true,
        };
    }
    let mut v = start_vector(n);
    let s = norm2(&v);
    v.iter_mut().for_each(|x| *x /= s);
    let mut w = apply(&v);
    for it in 1..=max_iter {
        let wn = norm2(&w);
        if wn == 0.0 {
            return PowerIteration {
                value: 0.0,
                vector: v,
                iterations: it,
                converged: true,
            };
        }
        let theta = wn * wn;
        let next: Vec<f64> = w.iter().map(|x| x / wn).collect();
        let w_next = apply(&next);
        // S²v = ‖w‖ · S(next)
        let residual = w_next
            .iter()
            .zip(&v)
            .map(|(a, b)| (wn * a - theta * b).powi(2))
            .sum::<f64>()
            .sqrt();
        v = next;
        w = w_next;
        if residual <= tol * theta {
            return PowerIteration {
                value: norm2(&w),
                vector: v,
                iterations: it,
                converged: true,
            };
        }
    }
    log::warn!("power iteration stopped after {max_iter} steps without converging");
    PowerIteration {
        value: norm2(&w),
        vector: v,
        iterations: max_iter,
        converged: false,
    }
}

/// Smallest eigenvalue of a symmetric operator whose spectrum lies in
/// `[·, upper]`, via power iteration on `upper·I − B` (positive semidefinite).
pub fn min_eigen_by_shift<F>(n: usize, apply: F, upper: f64, tol: f64) -> (f64, Vec<f64>, bool)
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let shifted = |v: &[f64]| -> Vec<f64> {
        let bv = apply(v);
        v.iter().zip(bv).map(|(x, b)| upper * x - b).collect()
    };
    let res = power_iteration(n, shifted, tol, MAX_POWER_ITERATIONS);
    // Recover the eigenvalue from the Rayleigh quotient of B itself.
    let bv = apply(&res.vector);
    let lambda = res.vector.iter().zip(&bv).map(|(a, b)| a * b).sum();
    (lambda, res.vector, res.converged)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_min_eigen_of_path_laplacian() {
        // Dirichlet Laplacian of a path: 2 − 2cos(π/(n+1)).
        let n = 10;
        let m = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                2.0
            } else if i.abs_diff(j) == 1 {
                -1.0
            } else {
                0.0
            }
        });
        let (l, v) = min_eigenpair(m);
        let exact = 2.0 - 2.0 * (std::f64::consts::PI / (n as f64 + 1.0)).cos();
        assert!((l - exact).abs() < 1e-12);
        assert!((norm2(&v) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn power_iteration_handles_bipartite_spectrum() {
        // Adjacency/2 of a path of 8 vertices: eigenvalues ±cos(kπ/9).
        let n = 8;
        let apply = |v: &[f64]| -> Vec<f64> {
            (0..n)
                .map(|i| {
                    let l = if i > 0 { v[i - 1] } else { 0.0 };
                    let r = if i + 1 < n { v[i + 1] } else { 0.0 };
                    (l + r) / 2.0
                })
                .collect()
        };
        let res = power_iteration(n, apply, 1e-12, 1_000_000);
        assert!(res.converged);
        let exact = (std::f64::consts::PI / 9.0).cos();
        assert!((res.value - exact).abs() < 1e-10, "{} vs {exact}", res.value);
    }

    #[test]
    fn shifted_min_eigen_matches_dense() {
        let n = 12;
        let m = DMatrix::from_fn(n, n, |i, j| if i == j { 2.0 + i as f64 * 0.1 } else if i.abs_diff(j) == 1 { -1.0 } else { 0.0 });
        let (dense, _) = min_eigenpair(m.clone());
        let apply = |v: &[f64]| -> Vec<f64> {
            let x = nalgebra::DVector::from_column_slice(v);
            (&m * x).iter().copied().collect()
        };
        let (sparse, _, ok) = min_eigen_by_shift(n, apply, 6.0, 1e-12);
        assert!(ok);
        assert!((dense - sparse).abs() < 1e-9);
    }
}
