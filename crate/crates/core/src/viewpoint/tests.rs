use std::sync::Arc;

use approx::assert_relative_eq;

use super::*;
use crate::zoo::{grid, GridMetric};
use crate::space::SpaceOptions;

fn path(n: usize) -> Arc<MetricMeasureSpace> {
    Arc::new(grid(1, n, GridMetric::L1, SpaceOptions::default()).unwrap())
}

fn cycle(n: usize) -> Arc<MetricMeasureSpace> {
    let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n, 1.0)).collect();
    Arc::new(MetricMeasureSpace::from_graph("cycle", n, &edges, vec![1.0; n]).unwrap())
}

#[test]
fn standard_on_p3() {
    let vp = standard_viewpoint(path(3), 1.0).unwrap();
    let m = vp.to_dense();
    let expect = [[0.5, 0.5, 0.0], [1. / 3., 1. / 3., 1. / 3.], [0.0, 0.5, 0.5]];
    for x in 0..3 {
        for y in 0..3 {
            assert_relative_eq!(m[x][y], expect[x][y], epsilon = 1e-15);
        }
    }
    let cert = vp.certificate();
    assert_eq!(cert.a, 1.0);
    assert_relative_eq!(cert.c, 1.0 / 3.0);
}

#[test]
fn standard_single_point_and_window() {
    let pt = Arc::new(MetricMeasureSpace::dense("pt", vec![vec![0.0]], vec![2.0]).unwrap());
    let vp = standard_viewpoint(pt, 1.0).unwrap();
    assert_eq!(vp.density(0, 0), 0.5);
    assert_eq!(vp.certificate(), Certificate { a: 1.0, c: 0.5 });

    let w = standard_viewpoint(path(21), 2.0).unwrap();
    let (support, density) = w.row(10);
    assert_eq!(support, &[8, 9, 10, 11, 12]);
    assert!(density.iter().all(|&p| (p - 0.2).abs() < 1e-15));
}

#[test]
fn validate_reports_floor_violation_and_support_radius() {
    let s = path(5);
    let mut rows: Vec<(Vec<usize>, Vec<f64>)> = (0..5).map(|x| (vec![x], vec![1.0])).collect();
    rows[2] = (vec![1, 2], vec![0.5, 0.5]);
    let k = Kernel::from_rows(s.clone(), 1.0, rows).unwrap();
    match Viewpoint::validate(k) {
        Err(Error::ViewpointViolation { row, axiom, point }) => {
            assert_eq!(row, 0);
            assert_eq!(axiom, "density floor");
            assert_eq!(point, 1);
        }
        other => panic!("expected violation, got {other:?}"),
    }

    // Uniform on B(x, 2) certified at scale 1: A = 2.
    let k2 = standard_kernel(s.clone(), 2.0).unwrap().with_scale(1.0).unwrap();
    let cert = Viewpoint::validate(k2).unwrap().certificate();
    assert_eq!(cert.a, 2.0);

    let bad = Kernel::from_rows(s, 1.0, (0..5).map(|x| (vec![x], vec![0.9])).collect());
    assert!(matches!(bad, Err(Error::NotStochastic { row: 0, .. })));
}

#[test]
fn validate_at_smaller_scale_keeps_support_bound() {
    let s = path(12);
    let k = standard_kernel(s, 3.0).unwrap();
    let base = Viewpoint::validate(k.clone()).unwrap().certificate();
    for h2 in [0.5, 1.0, 2.0, 2.9] {
        let cert = Viewpoint::validate_at(&k, h2).unwrap().certificate();
        assert!(cert.a * h2 <= base.a * 3.0 + 1e-12);
        assert!(cert.c >= base.c);
    }
}

#[test]
fn symmetry_reports() {
    let vp = standard_viewpoint(path(3), 1.0).unwrap();
    let rep = vp.is_symmetric();
    assert!(!rep.symmetric);
    let pair = (rep.p_xy.min(rep.p_yx), rep.p_xy.max(rep.p_yx));
    assert_relative_eq!(pair.0, 1.0 / 3.0);
    assert_relative_eq!(pair.1, 0.5);

    assert!(standard_viewpoint(cycle(9), 2.0).unwrap().is_symmetric().symmetric);
    assert!(lazy_kernel(cycle(9), 1.0).unwrap().is_symmetric().symmetric);
    assert!(lazy_kernel(path(9), 1.0).unwrap().is_symmetric().symmetric);
    assert!(srw_kernel(path(9), 1.0).unwrap().is_symmetric().symmetric);
}

#[test]
fn lazy_is_uniform_on_regular_graph() {
    let k = lazy_kernel(cycle(7), 1.0).unwrap();
    for x in 0..7 {
        let (support, density) = k.row(x);
        assert_eq!(support.len(), 3);
        assert!(density.iter().all(|&p| (p - 1.0 / 3.0).abs() < 1e-15));
    }
    Viewpoint::validate(k).unwrap();
}

#[test]
fn symmetrize_p3() {
    let vp = standard_viewpoint(path(3), 1.0).unwrap();
    let (sym, space) = symmetrize(&vp).unwrap();
    assert_eq!(space.measures(), &[2.0, 3.0, 2.0]);
    assert_relative_eq!(sym.density(0, 1), 1.0 / 6.0, epsilon = 1e-15);
    assert_relative_eq!(sym.density(1, 0), 1.0 / 6.0, epsilon = 1e-15);
    assert!(sym.is_symmetric().symmetric);

    let cyc = standard_viewpoint(cycle(8), 1.0).unwrap();
    let (sym, sp) = symmetrize(&cyc).unwrap();
    assert!(sp.measures().iter().all(|&m| m == 3.0));
    assert_relative_eq!(sym.density(0, 1) * 3.0, cyc.density(0, 1), epsilon = 1e-15);

    let lazy = Viewpoint::validate(lazy_kernel(path(4), 1.0).unwrap()).unwrap();
    assert!(symmetrize(&lazy).is_err());
}

#[test]
fn compose_examples() {
    // Product of standard rows on P3, by hand.
    let s = path(3);
    let p = standard_kernel(s.clone(), 1.0).unwrap();
    let pp = compose(&p, &p).unwrap();
    let m = p.to_dense();
    for x in 0..3 {
        let mut sum = 0.0;
        for z in 0..3 {
            let direct: f64 = (0..3).map(|y| m[x][y] * m[y][z]).sum();
            assert_relative_eq!(pp.density(x, z), direct, epsilon = 1e-15);
            sum += pp.density(x, z);
        }
        assert_relative_eq!(sum, 1.0, epsilon = 1e-14);
    }

    // Identity on the right leaves P unchanged.
    let id = identity_kernel(s.clone(), 0.5).unwrap();
    let pid = compose(&p, &id).unwrap();
    for x in 0..3 {
        for y in 0..3 {
            assert_relative_eq!(pid.density(x, y), p.density(x, y), epsilon = 1e-15);
        }
    }

    // Two standard steps on a window: support radius 2h.
    let w = path(30);
    let q = standard_kernel(w, 2.0).unwrap();
    let qq = compose(&q, &q).unwrap();
    let cert = qq.certificate();
    assert_relative_eq!(cert.a * qq.scale(), 4.0, epsilon = 1e-12);
    assert!(qq.scale() < 4.0);
}

#[test]
fn apply_examples() {
    let s = path(3);
    let vp = standard_viewpoint(s.clone(), 1.0).unwrap();
    let one = ScalarField::constant(&s, 1.0);
    assert!(vp.apply(&one).unwrap().values().iter().all(|&v| (v - 1.0).abs() < 1e-15));
    let f = ScalarField::new(&s, vec![1.0, 0.0, 0.0]).unwrap();
    let pf = vp.apply(&f).unwrap();
    assert_relative_eq!(pf.get(0), 0.5);
    assert_relative_eq!(pf.get(1), 1.0 / 3.0);
    assert_eq!(pf.get(2), 0.0);
    assert_eq!(pf.support().members(), &[0, 1]);
}

#[test]
fn kernel_file_round_trip() {
    let s = path(5);
    let k = lazy_kernel(s.clone(), 1.0).unwrap();
    let back = Kernel::from_json(s.clone(), &k.to_json().unwrap()).unwrap();
    assert_eq!(back.to_dense(), k.to_dense());
    let missing = r#"{"h": 1.0, "rows": [{"x": 0, "support": [0], "density": [1.0]}]}"#;
    assert!(Kernel::from_json(s, missing).is_err());
}

#[test]
fn registry_builds_by_name() {
    let reg = kernel_builders();
    let s = path(6);
    for name in ["standard", "lazy", "srw", "identity"] {
        let k = reg.get(name).unwrap().build(s.clone(), 1.0).unwrap();
        assert_eq!(k.len(), 6);
    }
    assert!(reg.get("heat").is_err());
}
