use std::sync::Arc;

use approx::assert_relative_eq;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::space::SpaceOptions;
use crate::viewpoint::{lazy_kernel, standard_kernel, standard_viewpoint, symmetrize, Viewpoint};
use crate::zoo::{grid, random_geometric, GridMetric};

fn path(n: usize) -> Arc<MetricMeasureSpace> {
    Arc::new(grid(1, n, GridMetric::L1, SpaceOptions::default()).unwrap())
}

fn field(space: &MetricMeasureSpace, v: &[f64]) -> ScalarField {
    ScalarField::new(space, v.to_vec()).unwrap()
}

fn random_field(space: &MetricMeasureSpace, rng: &mut ChaCha8Rng) -> ScalarField {
    let v = (0..space.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    ScalarField::new(space, v).unwrap()
}

#[test]
fn sup_gradient_examples() {
    let p9 = path(9);
    let coord: Vec<f64> = (0..9).map(|i| i as f64).collect();
    let g = grad_sup(&p9, &field(&p9, &coord), 1.0).unwrap();
    assert!(g.values.iter().all(|&v| v == 1.0));
    let c = grad_sup(&p9, &ScalarField::constant(&p9, 3.0), 2.0).unwrap();
    assert!(c.values.iter().all(|&v| v == 0.0));

    let a = p9.subset([2, 3, 4]).unwrap();
    let g = grad_sup(&p9, &ScalarField::indicator(&p9, &a), 1.0).unwrap();
    let b = p9.boundary(&a, 1.0).unwrap();
    for x in 0..9 {
        assert_eq!(g.values[x], if b.contains(x) { 1.0 } else { 0.0 });
    }
    assert_eq!(g.integral(&p9), b.measure());
}

#[test]
fn lp_gradient_examples() {
    let p3 = path(3);
    let f = field(&p3, &[0.0, 1.0, 0.0]);
    let g = grad_lp(&p3, &f, 1.0, 1.0).unwrap();
    assert_relative_eq!(g.values[1], 2.0 / 3.0);
    assert!(grad_lp(&p3, &f, 1.0, 0.5).is_err());

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let s = path(15);
    let f = random_field(&s, &mut rng);
    assert_eq!(
        grad_lp(&s, &f, 2.0, f64::INFINITY).unwrap().values,
        grad_sup(&s, &f, 2.0).unwrap().values
    );
    let vp = standard_viewpoint(s.clone(), 2.0).unwrap();
    for p in [1.0, 2.0, 3.5] {
        let a = grad_lp(&s, &f, 2.0, p).unwrap().values;
        let b = grad_viewpoint(&vp, &f, p).unwrap().values;
        for (x, y) in a.iter().zip(&b) {
            assert_relative_eq!(x, y, epsilon = 1e-14);
        }
    }
}

#[test]
fn viewpoint_gradient_on_symmetrized_p3() {
    let vp = standard_viewpoint(path(3), 1.0).unwrap();
    let (sym, space) = symmetrize(&vp).unwrap();
    let f = field(&space, &[0.0, 1.0, 0.0]);
    let g = grad_viewpoint(&sym, &f, 2.0).unwrap();
    assert_relative_eq!(g.values[0], 0.5f64.sqrt(), epsilon = 1e-15);
    let z = grad_viewpoint(&sym, &ScalarField::constant(&space, 2.0), 1.0).unwrap();
    assert!(z.values.iter().all(|&v| v == 0.0));
}

#[test]
fn fiber_gradient_reductions() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let s = Arc::new(random_geometric(40, 9, SpaceOptions::default()).unwrap());
    let f = random_field(&s, &mut rng);
    let fib = FiberGradient::new(&s, &f, 0.3).unwrap();
    assert_eq!(fib.antisymmetry_defect(), 0.0);
    assert_eq!(fib.reduce(&s, f64::INFINITY).unwrap().values, grad_sup(&s, &f, 0.3).unwrap().values);
    let l2 = fib.reduce(&s, 2.0).unwrap().values;
    let direct = grad_lp(&s, &f, 0.3, 2.0).unwrap().values;
    for (a, b) in l2.iter().zip(&direct) {
        assert_relative_eq!(a, b, epsilon = 1e-14);
    }
}

#[test]
fn laplacian_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let s = path(12);
    let vp = standard_viewpoint(s.clone(), 2.0).unwrap();
    let zero = laplacian(&vp, &ScalarField::constant(&s, 4.0), 3.0).unwrap();
    assert!(zero.values().iter().all(|&v| v.abs() < 1e-14));
    let f = random_field(&s, &mut rng);
    let l = laplacian(&vp, &f, 2.0).unwrap();
    let pf = vp.apply(&f).unwrap();
    for x in 0..12 {
        assert_relative_eq!(l.get(x), f.get(x) - pf.get(x), epsilon = 1e-15);
    }
    for p in [1.5, 2.0, 3.0] {
        let neg = field(&s, &f.values().iter().map(|v| -v).collect::<Vec<_>>());
        let a = laplacian(&vp, &f, p).unwrap();
        let b = laplacian(&vp, &neg, p).unwrap();
        for x in 0..12 {
            assert_relative_eq!(a.get(x), -b.get(x), epsilon = 1e-14);
        }
    }
    // General p at p = 2 matches f − Pf.
    let l2 = laplacian(&vp, &f, 2.0 + 1e-300).unwrap();
    for x in 0..12 {
        assert_relative_eq!(l2.get(x), l.get(x), epsilon = 1e-12);
    }
    assert!(laplacian(&vp, &f, 1.0).is_err());
}

#[test]
fn dirichlet_whole_space_and_monotonicity() {
    let s = path(10);
    let k = lazy_kernel(s.clone(), 1.0).unwrap();
    let d = dirichlet_eigenvalue(&k, &s.whole()).unwrap();
    assert!(d.delta.abs() < 1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..10 {
        let big: Vec<usize> = (0..10).filter(|_| rng.random_bool(0.7)).collect();
        if big.is_empty() {
            continue;
        }
        let small: Vec<usize> = big.iter().copied().filter(|_| rng.random_bool(0.6)).collect();
        if small.is_empty() {
            continue;
        }
        let db = dirichlet_eigenvalue(&k, &s.subset(big).unwrap()).unwrap().delta;
        let ds = dirichlet_eigenvalue(&k, &s.subset(small).unwrap()).unwrap().delta;
        assert!(ds >= db - 1e-12);
    }
}

#[test]
fn dirichlet_singleton_matches_closed_form() {
    // Standard viewpoint on P9, A = {4}: f = δ_4, E(f) = Σ_x μ_x p_x(4)μ_4 (f_4 − f_x)²
    // over x ≠ 4 plus the row at 4: 2·(1/3) + 2·(1/3) = 4/3 with ‖f‖² = 1.
    let s = path(9);
    let k = standard_kernel(s.clone(), 1.0).unwrap();
    let d = dirichlet_eigenvalue(&k, &s.subset([4]).unwrap()).unwrap();
    assert_relative_eq!(d.delta, 4.0 / 3.0, epsilon = 1e-14);
    assert_relative_eq!(d.field[4], 1.0, epsilon = 1e-14);
}

#[test]
fn dirichlet_matches_rayleigh_quotient_of_minimizer() {
    let s = Arc::new(random_geometric(30, 2, SpaceOptions::default()).unwrap());
    let k = standard_kernel(s.clone(), 0.35).unwrap();
    let a = s.subset(0..20).unwrap();
    let d = dirichlet_eigenvalue(&k, &a).unwrap();
    let f = ScalarField::new(&s, d.field.clone()).unwrap();
    let g = grad_viewpoint(&k, &f, 2.0).unwrap();
    let num: f64 = g.values.iter().zip(s.measures()).map(|(g, m)| g * g * m).sum();
    assert_relative_eq!(num / f.norm(&s, 2.0).powi(2), d.delta, epsilon = 1e-10);
    assert!(d.field.iter().enumerate().all(|(x, &v)| a.contains(x) || v == 0.0));
}

#[test]
fn dirichlet_scaling_on_window() {
    let s = path(101);
    let k = lazy_kernel(s.clone(), 1.0).unwrap();
    let ls = [4usize, 8, 16, 32];
    let pts: Vec<(f64, f64)> = ls
        .iter()
        .map(|&l| {
            let a = s.subset(50 - l..=50 + l).unwrap();
            let d = dirichlet_eigenvalue(&k, &a).unwrap().delta;
            ((l as f64).ln(), d.ln())
        })
        .collect();
    let slope = crate::stats::slope(&pts);
    assert!((slope + 2.0).abs() <= 0.2, "slope {slope}");
}

#[test]
fn energy_examples() {
    let two = Arc::new(MetricMeasureSpace::dense("two", vec![vec![0.0, 1.0], vec![1.0, 0.0]], vec![1.0; 2]).unwrap());
    let q = 0.3;
    let k = Kernel::from_rows(two.clone(), 1.0, vec![(vec![0, 1], vec![1.0 - q, q]), (vec![0, 1], vec![q, 1.0 - q])]).unwrap();
    let e = energy(&k, &field(&two, &[1.0, 0.0])).unwrap();
    assert_relative_eq!(e.dirichlet, q, epsilon = 1e-15);
    assert_relative_eq!(e.gradient_norm_sq, 2.0 * q, epsilon = 1e-15);
    let z = energy(&k, &ScalarField::constant(&two, 1.0)).unwrap();
    assert_eq!((z.dirichlet.abs() < 1e-15, z.gradient_norm_sq), (true, 0.0));

    let vp = standard_viewpoint(path(3), 1.0).unwrap();
    assert!(energy(&vp, &ScalarField::constant(vp.space(), 1.0)).is_err());
}

#[test]
fn energy_identities_on_random_fields() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let vp = standard_viewpoint(path(3), 1.0).unwrap();
    let (sym, space) = symmetrize(&vp).unwrap();
    for _ in 0..20 {
        let f = random_field(&space, &mut rng);
        assert!(energy(&sym, &f).unwrap().consistent(IDENTITY_TOL));
        let id = p2_energy_identity(&sym, &f).unwrap();
        assert!(id.consistent(IDENTITY_TOL), "{id:?}");
        // Independent double sum over the composed kernel.
        let m = sym.to_dense();
        let mu = space.measures();
        let v = f.values();
        let mut lhs = 0.0;
        for x in 0..3 {
            for z in 0..3 {
                let p2: f64 = (0..3).map(|y| m[x][y] * mu[y] * m[y][z]).sum();
                lhs += mu[x] * p2 * mu[z] * (v[z] - v[x]).powi(2);
            }
        }
        assert_relative_eq!(id.lhs, lhs, max_relative = 1e-12);
    }
}

#[test]
fn p2_identity_on_eigenfield() {
    let s = path(8);
    let k = lazy_kernel(s.clone(), 1.0).unwrap();
    let d = dirichlet_eigenvalue(&k, &s.whole()).unwrap();
    // Second eigenvector via the dense matrix (unit measure, symmetric P).
    let m = nalgebra::DMatrix::from_fn(8, 8, |i, j| k.density(i, j));
    let eig = nalgebra::SymmetricEigen::new(m);
    let mut pairs: Vec<(f64, Vec<f64>)> = (0..8)
        .map(|i| (eig.eigenvalues[i], eig.eigenvectors.column(i).iter().copied().collect()))
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let (lambda, v) = &pairs[1];
    let f = field(&s, v);
    let id = p2_energy_identity(&k, &f).unwrap();
    assert_relative_eq!(id.rhs, (1.0 - lambda * lambda) * f.norm(&s, 2.0).powi(2), epsilon = 1e-12);
    assert!(id.consistent(1e-10));
    assert!(d.delta.abs() < 1e-12);
}

#[test]
fn coarea_examples() {
    let p9 = path(9);
    let a = p9.subset([1, 2, 5]).unwrap();
    let c = coarea(&p9, &ScalarField::indicator(&p9, &a), 1.0).unwrap();
    assert_eq!(c.middle, c.upper);
    assert_eq!(c.upper, p9.boundary_measure(&a, 1.0));
    let z = coarea(&p9, &ScalarField::constant(&p9, 2.0), 1.0).unwrap();
    assert_eq!((z.lower, z.middle, z.upper), (0.0, 0.0, 0.0));
    assert!(matches!(
        coarea(&p9, &field(&p9, &[0., 0., -1., 0., 0., 0., 0., 0., 0.]), 1.0),
        Err(Error::NegativeField { index: 2, .. })
    ));

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let g = Arc::new(random_geometric(60, 4, SpaceOptions::default()).unwrap());
    for _ in 0..20 {
        let v: Vec<f64> = (0..60).map(|_| rng.random_range(0..5) as f64).collect();
        let c = coarea(&g, &field(&g, &v), 0.2).unwrap();
        assert!(c.holds(1e-12), "{c:?}");
    }
}

#[test]
fn sandwich_and_smoothing() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let s = Arc::new(random_geometric(50, 11, SpaceOptions::default()).unwrap());
    let k = standard_kernel(s.clone(), 0.3).unwrap().with_scale(0.2).unwrap();
    let vp = Viewpoint::validate(k).unwrap();
    assert!(vp.certificate().a > 1.0);
    let structural = smoothing_constant(&s, 0.2);
    for _ in 0..10 {
        let f = random_field(&s, &mut rng);
        for (q, q2) in [(1.0, 2.0), (2.0, f64::INFINITY), (1.0, f64::INFINITY)] {
            let rep = gradient_sandwich(&vp, &f, q, q2, 1e-12).unwrap();
            assert_eq!(rep.violations, 0, "{rep:?}");
        }
        let sm = smoothing_check(s.clone(), &f, 0.2).unwrap();
        assert!(sm.holds, "{sm:?}");
        assert_eq!(sm.structural, structural);
        assert!(scale_monotonicity(&s, &f, 0.1, 0.25).unwrap() <= 0.0);
    }
}

#[test]
fn backend_registry() {
    let s = path(7);
    let reg = gradient_backends();
    let params = BackendParams {
        space: s.clone(),
        h: 1.0,
        kernel: None,
    };
    let f = vec![0.0, 1.0, 3.0, 0.0, 0.0, 2.0, 0.0];
    let sup = reg.get("sup").unwrap().make(params.clone()).unwrap();
    assert_eq!(sup.gradient(&f, 1.0), grad_sup(&s, &field(&s, &f), 1.0).unwrap().values);
    let lp = reg.get("lp").unwrap().make(params.clone()).unwrap();
    assert!(lp.quadratic_kernel().is_some());
    assert!(reg.get("vp").unwrap().make(params.clone()).is_err());
    let vp = reg
        .get("vp")
        .unwrap()
        .make(BackendParams {
            kernel: Some(lazy_kernel(s.clone(), 1.0).unwrap()),
            ..params
        })
        .unwrap();
    // p-energies agree with the pointwise gradients.
    for b in [&sup, &lp, &vp] {
        for p in [1.0, 2.0, 3.0] {
            let g = b.gradient(&f, p);
            let e: f64 = g.iter().zip(s.measures()).map(|(g, m)| g.powf(p) * m).sum();
            assert_relative_eq!(b.p_energy(&f, p, None), e, max_relative = 1e-12);
        }
    }
}
