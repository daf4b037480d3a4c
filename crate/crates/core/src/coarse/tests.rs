use approx::assert_relative_eq;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::error::Error;
use crate::space::{MetricMeasureSpace, SpaceOptions};
use crate::viewpoint::ScalarField;
use crate::zoo::{grid, random_geometric, GridMetric};

fn path(n: usize) -> MetricMeasureSpace {
    let rows = (0..n)
        .map(|i| (0..n).map(|j| (i as f64 - j as f64).abs()).collect())
        .collect();
    MetricMeasureSpace::dense("path", rows, vec![1.0; n]).unwrap()
}

fn box2(side: usize, metric: GridMetric) -> MetricMeasureSpace {
    grid(2, side, metric, SpaceOptions::default()).unwrap()
}

fn identity(n: usize) -> Vec<usize> {
    (0..n).collect()
}

fn random_fields(space: &MetricMeasureSpace, count: usize, seed: u64) -> Vec<ScalarField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let values = (0..space.len())
                .map(|_| if rng.random_bool(0.3) { rng.random_range(-2.0..2.0) } else { 0.0 })
                .collect();
            ScalarField::new(space, values).unwrap()
        })
        .collect()
}

#[test]
fn identity_certificate() {
    let z = box2(6, GridMetric::L1);
    let cert = certify_lse(&z, &z, &identity(z.len()), &[1.0, 2.0]).unwrap();
    assert!(cert.passes, "{:?}", cert.violations);
    for ((d, lo), hi) in cert.distances.iter().zip(&cert.rho_minus).zip(&cert.rho_plus) {
        assert_relative_eq!(lo, d, epsilon = 1e-12);
        assert_relative_eq!(hi, d, epsilon = 1e-12);
    }
    assert_eq!(cert.onto, 0.0);
    assert_eq!(cert.lipschitz, 1.0);
    assert!(cert.volume_constants.iter().all(|&c| c == 1.0));
    assert!(!cert.note.is_empty());
}

#[test]
fn l1_to_linf_moduli() {
    let a = box2(9, GridMetric::L1);
    let b = box2(9, GridMetric::Linf);
    let cert = certify_lse(&a, &b, &identity(a.len()), &[1.0, 2.0, 4.0]).unwrap();
    assert!(cert.passes);
    for ((t, lo), hi) in cert.distances.iter().zip(&cert.rho_minus).zip(&cert.rho_plus) {
        assert!(*lo >= t / 2.0 - 1e-12, "ρ₋({t}) = {lo}");
        assert!(*hi <= t + 1e-12, "ρ₊({t}) = {hi}");
    }
    assert_eq!(cert.rho_plus_at(0.5), 0.0);
    assert_eq!(cert.rho_plus_at(1.0), 1.0);
    assert!(cert.max_volume_constant() < 5.0);
    // d/2 ≤ d' ≤ d, so L = 2 is admissible and the fit is no larger.
    assert!(cert.lipschitz > 1.0 && cert.lipschitz <= 2.0, "{}", cert.lipschitz);
}

#[test]
fn constant_map_violates_distance_axiom() {
    let a = path(7);
    let cert = certify_lse(&a, &a, &[3; 7], &[1.0]).unwrap();
    assert!(!cert.passes);
    let v = cert.violations.iter().find(|v| v.axiom == Axiom::Distances).unwrap();
    assert_eq!(v.witness.len(), 2);
    assert_eq!(cert.onto, 3.0);
}

#[test]
fn map_errors() {
    let a = path(4);
    assert!(matches!(certify_lse(&a, &a, &[0, 1, 2, 9], &[1.0]), Err(Error::MapOutOfRange { index: 3, .. })));
    assert!(certify_lse(&a, &a, &[0, 1], &[1.0]).is_err());
}

#[test]
fn path_net_at_unit_scale() {
    let p = path(9);
    assert_eq!(greedy_net(&p, 1.0), vec![0, 2, 4, 6, 8]);
    let d = discretize(&p, 1.0).unwrap();
    assert_eq!(d.centers, vec![0, 2, 4, 6, 8]);
    assert_eq!(d.graph.measures(), &[2.0, 2.0, 2.0, 2.0, 1.0]);
    assert_eq!(d.map, vec![0, 0, 1, 1, 2, 2, 3, 3, 4]);
    assert_eq!(d.graph.dist(0, 4), 4.0);
    assert_relative_eq!(d.graph.total_measure(), p.total_measure());
    let cert = certify_lse(&p, &d.graph, &d.map, &[2.0, 4.0]).unwrap();
    assert!(cert.passes);
    assert!(d.to_json().unwrap().contains("centers"));
}

#[test]
fn single_point_discretization() {
    let p = path(1);
    let d = discretize(&p, 1.0).unwrap();
    assert_eq!(d.centers, vec![0]);
    assert_eq!(d.graph.len(), 1);
    let cert = certify_lse(&p, &d.graph, &d.map, &[1.0]).unwrap();
    assert!(cert.passes);
    assert!(cert.distances.is_empty());
}

#[test]
fn discretize_rejects_gaps() {
    let rows = vec![vec![0.0, 10.0], vec![10.0, 0.0]];
    let s = MetricMeasureSpace::dense("gap", rows, vec![1.0, 1.0]).unwrap();
    assert!(matches!(discretize(&s, 1.0), Err(Error::Disconnected { components: 2, .. })));
    assert!(discretize(&s, 0.0).is_err());
}

#[test]
fn euclidean_box_net_volume_constants() {
    let z = box2(16, GridMetric::Euclidean);
    let d = discretize(&z, 1.25).unwrap();
    let cert = certify_lse(&z, &d.graph, &d.map, &[3.0, 5.0]).unwrap();
    for &c in &cert.volume_constants {
        assert!((1.0..=8.0).contains(&c), "C_r = {c}");
    }
    assert!(cert.passes);
}

#[test]
fn pullback_of_indicator_is_thickened_indicator() {
    let z = box2(7, GridMetric::L1);
    let a = z.subset([10, 24, 25]).unwrap();
    let f = ScalarField::indicator(&z, &a);
    let psi = pullback(&z, &identity(z.len()), f.values(), 2.0);
    let thick = z.thicken(&a, 2.0).unwrap().mask(z.len());
    for x in 0..z.len() {
        assert_eq!(psi[x], if thick[x] { 1.0 } else { 0.0 });
    }
    let c = pullback(&z, &identity(z.len()), &vec![-1.5; z.len()], 1.0);
    assert!(c.iter().all(|&v| v == 1.5));
}

#[test]
fn pullback_lemmas_on_norm_change() {
    let a = box2(9, GridMetric::L1);
    let b = box2(9, GridMetric::Linf);
    let cert = certify_lse(&a, &b, &identity(a.len()), &[1.0]).unwrap();
    for f in random_fields(&b, 6, 11) {
        let r = pullback_lemmas(&a, &b, &cert, f.values(), 1.0, 2.0).unwrap();
        assert_eq!(r.h_prime, 4.0);
        assert_eq!(r.u, 1.0);
        assert!(r.l1.holds && r.l1.constant >= 1.0 - 1e-12, "{:?}", r.l1);
        assert!(r.l2.holds, "{:?}", r.l2);
        assert!(r.l3.holds && r.l3.constant <= 1.0 + 1e-12, "{:?}", r.l3);
    }
    assert!(pullback_lemmas(&a, &b, &cert, &[1.0], 1.0, 2.0).is_err());
}

fn window() -> (MetricMeasureSpace, ScalarField) {
    // Points −3..=8 of ℤ; f = 1 on 0..=5.
    let p = path(12);
    let f = ScalarField::new(&p, (0..12).map(|i| if (3..=8).contains(&i) { 1.0 } else { 0.0 }).collect()).unwrap();
    (p, f)
}

#[test]
fn thicken_interval() {
    let (p, f) = window();
    let t = thicken_support(&p, &f, 2.0, 1.0).unwrap();
    // Ω = {1..4} in ℤ coordinates.
    assert_eq!(t.omega, vec![4, 5, 6, 7]);
    let want: Vec<f64> = (0..12).map(|i| if (4..=7).contains(&i) { 1.0 } else { 0.0 }).collect();
    assert_eq!(t.masked, want);
    // Six boundary points against eight gradient points: fallback.
    assert!(t.fallback);
    assert!(t.norm_loss_ok);
    assert!(t.gradient_ratio <= 1.0);
}

#[test]
fn thicken_long_interval() {
    let p = path(100);
    let f = ScalarField::new(&p, (0..100).map(|i| if (10..90).contains(&i) { 1.0 } else { 0.0 }).collect()).unwrap();
    let t = thicken_support(&p, &f, 2.0, 1.0).unwrap();
    assert!(!t.fallback);
    assert_eq!(t.field, t.masked);
    assert_eq!(t.omega.first(), Some(&11));
    assert_eq!(t.omega.last(), Some(&88));
    let hull = p.subset(t.thick_hull.iter().copied()).unwrap();
    assert!(is_thick(&p, &hull, 1.0));
    assert!(hull.is_subset_of(f.support()));
    assert!(t.measure_inflation <= 0.0);
    assert!(t.norm_loss_ok);
}

#[test]
fn thicken_random_fields() {
    let s = random_geometric(40, 5, SpaceOptions::default()).unwrap();
    for (i, f) in random_fields(&s, 20, 8).into_iter().enumerate() {
        if f.support().is_empty() {
            continue;
        }
        let t = thicken_support(&s, &f, 0.3, 1.0 + (i % 3) as f64).unwrap();
        assert!(t.norm_loss_ok);
        assert!(t.gradient_ratio <= 1.0 + 1e-12, "{}", t.gradient_ratio);
        assert!(t.gradient_ratio_global <= 2.0 + 1e-12);
        let hull = s.subset(t.thick_hull.iter().copied()).unwrap();
        assert!(is_thick(&s, &hull, 0.15));
        let supp = s.subset((0..s.len()).filter(|&x| t.field[x] != 0.0)).unwrap();
        assert!(supp.is_subset_of(&hull));
        if !t.fallback {
            assert!(hull.is_subset_of(f.support()));
        }
    }
    let zero = ScalarField::constant(&s, 0.0);
    assert!(thicken_support(&s, &zero, 0.3, 1.0).is_err());
}

#[test]
fn thickness_predicate() {
    let p = path(10);
    assert!(is_thick(&p, &p.subset(2..=6).unwrap(), 1.0));
    assert!(!is_thick(&p, &p.subset([2, 3, 5, 6]).unwrap(), 1.0));
    assert!(is_thick(&p, &p.subset(0..=1).unwrap(), 1.0));
}

#[test]
fn rough_volume_identity() {
    let z = box2(9, GridMetric::L1);
    let cert = certify_lse(&z, &z, &identity(z.len()), &[1.0]).unwrap();
    let ap = z.subset([30, 31, 40]).unwrap();
    let a = z.thicken(&ap, 1.0).unwrap();
    let r = rough_volume_check(&z, &z, &cert, &a, &ap, 1.0).unwrap();
    assert!(r.skipped.is_none());
    let pre = r.clauses.iter().find(|c| c.clause == VolumeClause::Preimage).unwrap();
    assert!(pre.holds && pre.ratio <= 1.0);
    assert_eq!(pre.cover_radius, 2.0);

    let r = rough_volume_check(&z, &z, &cert, &ap, &a, 1.0).unwrap();
    let img = r.clauses.iter().find(|c| c.clause == VolumeClause::Image).unwrap();
    assert!(img.holds && img.ratio <= 1.0);

    let r = rough_volume_check(&z, &z, &cert, &ap, &ap, 1.0).unwrap();
    assert!(r.clauses.is_empty());
    assert!(r.skipped.is_some());
}

#[test]
fn rough_volume_norm_change() {
    let a = box2(9, GridMetric::L1);
    let b = box2(9, GridMetric::Linf);
    let cert = certify_lse(&a, &b, &identity(a.len()), &[1.0]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..10 {
        let seed = a.subset((0..a.len()).filter(|_| rng.random_bool(0.1))).unwrap();
        let big = b.thicken(&seed, 1.0).unwrap();
        let r = rough_volume_check(&a, &b, &cert, &seed, &big, 1.0).unwrap();
        assert!(r.clauses.iter().all(|c| c.holds), "{r:?}");
        let big = a.thicken(&seed, 2.0).unwrap();
        let r = rough_volume_check(&a, &b, &cert, &big, &seed, 1.0).unwrap();
        assert!(r.clauses.iter().all(|c| c.holds), "{r:?}");
    }
}

#[test]
fn rough_volume_requires_covered_target() {
    let p = path(5);
    let q = path(7);
    let cert = certify_lse(&p, &q, &[0, 1, 2, 3, 4], &[1.0]).unwrap();
    let ap = q.subset([6]).unwrap();
    let a = p.subset([0]).unwrap();
    let r = rough_volume_check(&p, &q, &cert, &a, &ap, 1.0).unwrap();
    assert!(r.skipped.unwrap().contains("F(X)"));
}

#[test]
fn scale_reduction_at_twice_the_step() {
    let z = box2(10, GridMetric::L1);
    let fields = random_fields(&z, 5, 2);
    let r = scale_reduction_check(&z, 1.0, 2.0, &fields).unwrap();
    assert!(r.skipped.is_none());
    assert!(r.per_field.iter().all(|&c| c == 1.0));
    assert!(r.holds);
}

#[test]
fn scale_reduction_on_lattice() {
    let z = box2(12, GridMetric::L1);
    let fields = random_fields(&z, 20, 4);
    let r = scale_reduction_check(&z, 1.0, 3.0, &fields).unwrap();
    assert!(r.skipped.is_none());
    assert!(r.c.is_finite() && r.c >= 1.0);
    assert!(r.chain_constant >= 12.0);
    assert!(r.holds, "C = {} vs {}", r.c, r.chain_constant);
}

#[test]
fn scale_reduction_needs_short_chains() {
    let z = box2(6, GridMetric::Euclidean);
    let r = scale_reduction_check(&z, 0.5, 2.0, &random_fields(&z, 2, 1)).unwrap();
    assert!(r.skipped.is_some());
    assert!(r.per_field.is_empty());
    assert!(scale_reduction_check(&z, 1.0, 1.5, &[]).is_err());
}
