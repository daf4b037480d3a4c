use std::sync::Arc;

use approx::assert_relative_eq;
use nalgebra::{DMatrix, SymmetricEigen};

use super::*;
use crate::calculus::{GradientBackend, KernelBackend, LpBackend, SupBackend};
use crate::space::{MetricMeasureSpace, SpaceOptions, Subset};
use crate::viewpoint::{lazy_kernel, standard_kernel, ScalarField};
use crate::zoo::{free_group, grid, random_geometric, regular_tree, GridMetric};

fn path(n: usize) -> Arc<MetricMeasureSpace> {
    Arc::new(grid(1, n, GridMetric::L1, SpaceOptions::default()).unwrap())
}

fn square(side: usize) -> Arc<MetricMeasureSpace> {
    Arc::new(grid(2, side, GridMetric::L1, SpaceOptions::default()).unwrap())
}

fn interval(space: &MetricMeasureSpace, lo: usize, len: usize) -> Subset {
    space.subset(lo..lo + len).unwrap()
}

fn sub_box(space: &MetricMeasureSpace, side: usize, x0: usize, y0: usize, w: usize, h: usize) -> Subset {
    space
        .subset((0..w).flat_map(|i| (0..h).map(move |j| (x0 + i) * side + y0 + j)))
        .unwrap()
}

#[test]
fn singleton_on_p9_matches_direct_quotient() {
    let p9 = path(9);
    let lp = LpBackend::new(p9.clone(), 1.0).unwrap();
    let a = p9.subset([4]).unwrap();
    let r = jp_subset(&lp, &a, 2.0).unwrap();
    assert_eq!(r.mode, Mode::Exact);
    // f = δ_4: each of the points 3, 4, 5 averages (Δf)² over a 3-point ball.
    let mut energy = 0.0_f64;
    for x in 0..9usize {
        let ball: Vec<usize> = (x.saturating_sub(1)..=(x + 1).min(8)).collect();
        let f = |y: usize| if y == 4 { 1.0_f64 } else { 0.0 };
        let s: f64 = ball.iter().map(|&y| (f(y) - f(x)).powi(2)).sum();
        energy += s / ball.len() as f64;
    }
    assert_relative_eq!(energy, 4.0 / 3.0, epsilon = 1e-15);
    assert_relative_eq!(r.value, energy.powf(-0.5), max_relative = 1e-10);
}

#[test]
fn j_is_monotone_under_inclusion() {
    let p = path(15);
    let sup = SupBackend::new(p.clone(), 1.0);
    let lp = LpBackend::new(p.clone(), 1.0).unwrap();
    let small = interval(&p, 5, 3);
    let large = interval(&p, 3, 8);
    for backend in [&sup as &dyn GradientBackend, &lp] {
        for q in [1.0, 2.0, f64::INFINITY] {
            let a = jp_subset(backend, &small, q).unwrap().value;
            let b = jp_subset(backend, &large, q).unwrap().value;
            assert!(a <= b * (1.0 + 1e-12), "{} p={q}: {a} > {b}", backend.label());
        }
    }
}

#[test]
fn interval_j2_grows_linearly_under_lazy_walk() {
    let window = path(101);
    let kernel = lazy_kernel(window.clone(), 1.0).unwrap();
    let dense = kernel.to_dense();
    let backend = KernelBackend::new(kernel, "lazy");
    let (mut ls, mut js) = (Vec::new(), Vec::new());
    for len in [4usize, 8, 16, 32] {
        let lo = 50 - len / 2;
        let a = interval(&window, lo, len);
        let j = jp_subset(&backend, &a, 2.0).unwrap().value;
        // Oracle: δ = 2 λ_min(I − P) compressed to A, unit weights.
        let m = DMatrix::from_fn(len, len, |i, k| {
            let d = if i == k { 1.0 } else { 0.0 };
            d - dense[lo + i][lo + k]
        });
        let lam = SymmetricEigen::new(m).eigenvalues.min();
        assert_relative_eq!(j, (2.0 * lam).powf(-0.5), max_relative = 1e-8);
        ls.push(len as f64);
        js.push(j);
    }
    let slope = crate::stats::loglog_slope(&ls, &js);
    assert!((slope - 1.0).abs() <= 0.1, "slope {slope}");
}

#[test]
fn candidates_match_exact_on_a_14_point_window() {
    let w = path(14);
    let vols: Vec<f64> = (1..=14).map(f64::from).collect();
    let strategies = profile_strategies();
    for backend in [
        Box::new(SupBackend::new(w.clone(), 1.0)) as Box<dyn GradientBackend>,
        Box::new(LpBackend::new(w.clone(), 1.0).unwrap()),
    ] {
        let exact = isoperimetric_profile(backend.as_ref(), 1.0, &vols, strategies.get("exact").unwrap().as_ref()).unwrap();
        let cand =
            isoperimetric_profile(backend.as_ref(), 1.0, &vols, strategies.get("candidates").unwrap().as_ref()).unwrap();
        assert_eq!(exact.mode, Mode::Exact);
        assert_eq!(cand.mode, Mode::LowerBound);
        for (e, c) in exact.values.iter().zip(&cand.values) {
            assert!(c <= e, "{c} > {e}");
            assert_relative_eq!(c, e, max_relative = 1e-12);
        }
        assert!(exact.is_nondecreasing());
        assert!(exact.witness_discrepancy(backend.as_ref()) < 1e-12);
        assert!(cand.witness_discrepancy(backend.as_ref()) < 1e-12);
    }
}

#[test]
fn exact_profiles_round_trip_their_witnesses() {
    let space = Arc::new(random_geometric(11, 7, SpaceOptions::default()).unwrap());
    let lp = LpBackend::new(space.clone(), 0.35).unwrap();
    let exact = profile_strategies().get("exact").unwrap();
    let vols = [1.0, 2.0, 3.0, 5.0, 8.0];
    for p in [1.0, 2.0, f64::INFINITY] {
        let c = isoperimetric_profile(&lp, p, &vols, exact.as_ref()).unwrap();
        assert!(c.is_nondecreasing(), "p={p}: {:?}", c.values);
        assert!(c.witness_discrepancy(&lp) < 1e-8, "p={p}");
        for (w, &v) in c.witnesses.iter().zip(&c.args) {
            let w = w.as_ref().unwrap();
            assert!(w.subset.len() as f64 <= v);
        }
    }
    let general = jp_subset(&lp, &space.subset([0, 1, 2, 3]).unwrap(), 3.0).unwrap();
    assert_eq!(general.mode, Mode::LowerBound);
    assert!(general.value.is_finite() && general.value > 0.0);
    let q = quotient(&lp, &general.field, 3.0);
    assert_relative_eq!(q, general.value, max_relative = 1e-9);
}

#[test]
fn z2_box_l1_profile_has_exponent_one_half() {
    let b = square(32);
    let sup = SupBackend::new(b.clone(), 1.0);
    let vols = [16.0, 32.0, 64.0, 128.0, 256.0];
    let c = isoperimetric_profile(&sup, 1.0, &vols, profile_strategies().get("candidates").unwrap().as_ref()).unwrap();
    let slope = c.loglog_slope(0.0, f64::INFINITY);
    assert!((slope - 0.5).abs() <= 0.1, "slope {slope}: {:?}", c.values);
    assert!(c.is_nondecreasing());
}

#[test]
fn ball_profile_basics() {
    let p = path(12);
    let lp = LpBackend::new(p.clone(), 1.0).unwrap();
    let radii = [1.0, 2.0, 3.0, 5.0, 20.0];
    let c = profile_in_balls(&lp, 1.0, &radii, None).unwrap();
    assert!(c.is_nondecreasing());
    assert_eq!(c.mode, Mode::Exact);
    let whole = jp_subset(&lp, &p.whole(), 1.0).unwrap().value;
    assert_eq!(*c.values.last().unwrap(), whole);
    assert!(c.witness_discrepancy(&lp) < 1e-12);
}

#[test]
fn free_group_ball_profile_stays_bounded() {
    let g = Arc::new(free_group(2, 8, SpaceOptions::default()).unwrap());
    let lp = LpBackend::new(g.clone(), 1.0).unwrap();
    let radii: Vec<f64> = (2..=6).map(f64::from).collect();
    let c = profile_in_balls(&lp, 2.0, &radii, Some(&[0])).unwrap();
    assert_eq!(c.mode, Mode::LowerBound);
    let max = c.values.iter().copied().fold(0.0, f64::max);
    let min = c.values.iter().copied().fold(f64::INFINITY, f64::min);
    assert!(max / min <= 1.5, "{:?}", c.values);
    // Contrast: on ℤ² the same profile grows roughly linearly.
    let b = square(25);
    let lpz = LpBackend::new(b.clone(), 1.0).unwrap();
    let cz = profile_in_balls(&lpz, 2.0, &[2.0, 4.0, 8.0], Some(&[12 * 25 + 12])).unwrap();
    assert!(cz.loglog_slope(0.0, f64::INFINITY) > 0.7, "{:?}", cz.values);
}

#[test]
fn boundary_profiles() {
    let w = path(21);
    let whole = Provided(vec![w.whole()]);
    let ts = [1.0, 5.0, 21.0];
    let bp = boundary_profile(&w, 1.0, &whole, &ts).unwrap();
    assert!(bp.lower.values.iter().all(|&v| v == 0.0));

    // Intervals of length ≥ 2 away from the ends have two inner and two
    // outer boundary points.
    let inner: Vec<Subset> = (2..=10).map(|k| interval(&w, 5, k)).collect();
    let bp = boundary_profile(&w, 1.0, &Provided(inner), &[2.0, 4.0, 10.0, 11.0]).unwrap();
    assert_eq!(&bp.lower.values[..3], &[4.0, 4.0, 4.0]);
    assert_eq!(bp.lower.values[3], f64::INFINITY);
    assert_eq!(bp.lower.mode, Mode::Exact);
    assert_eq!(bp.full.mode, Mode::UpperBound);
    let sup = SupBackend::new(w.clone(), 1.0);
    assert!(bp.lower.witness_discrepancy(&sup) == 0.0);

    let p14 = path(14);
    let ts: Vec<f64> = (1..=14).map(f64::from).collect();
    let exact = boundary_profile(&p14, 1.0, &AllSubsets, &ts).unwrap();
    let balls = boundary_profile(&p14, 1.0, &Balls, &ts).unwrap();
    assert_eq!(exact.full.mode, Mode::Exact);
    assert_eq!(exact.lower.values, balls.lower.values);
    assert_eq!(balls.full.values, exact.full.values);
}

#[test]
fn cheeger_constants() {
    let two = Arc::new(MetricMeasureSpace::dense("two", vec![vec![0.0, 1.0], vec![1.0, 0.0]], vec![1.0, 1.0]).unwrap());
    let c = cheeger(&two, 1.0, &AllSubsets).unwrap();
    assert_eq!(c.constant, 2.0);
    assert_eq!(c.mode, Mode::Exact);

    let b = square(16);
    let c = cheeger(&b, 1.0, &Boxes).unwrap();
    assert!(c.constant <= 0.25 + 1e-12, "{}", c.constant);
    let c8 = cheeger(&square(8), 1.0, &Boxes).unwrap();
    assert!(c8.constant > c.constant);

    // Balls around the root of a 4-regular tree: the outer shell dominates.
    let t = Arc::new(regular_tree(4, 7, SpaceOptions::default()).unwrap());
    let balls = Provided((0..7).map(|r| t.ball(0, f64::from(r)).unwrap()).collect());
    let c = cheeger(&t, 1.0, &balls).unwrap();
    assert!(c.constant >= 0.5, "{}", c.constant);
    // Shell oracle: ∂B(o,k) is the spheres k and k+1, of sizes 4·3^{k−1}.
    let sphere = |k: u32| if k == 0 { 1.0 } else { 4.0 * 3f64.powi(k as i32 - 1) };
    let k = (0..7u32)
        .map(|k| ((sphere(k) + sphere(k + 1)) / (0..=k).map(sphere).sum::<f64>(), k))
        .filter(|&(_, k)| (0..=k).map(sphere).sum::<f64>() <= t.total_measure() / 2.0)
        .fold(f64::INFINITY, |a, (r, _)| a.min(r));
    assert_relative_eq!(c.constant, k, max_relative = 1e-12);
}

#[test]
fn sobolev_with_the_profile_itself() {
    let w = path(12);
    let lp = LpBackend::new(w.clone(), 1.0).unwrap();
    let vols: Vec<f64> = (1..=6).map(f64::from).collect();
    for p in [1.0, 2.0] {
        let curve = isoperimetric_profile(&lp, p, &vols, profile_strategies().get("exact").unwrap().as_ref()).unwrap();
        let phi = curve.as_rate().unwrap();
        let fields: Vec<ScalarField> = curve
            .witnesses
            .iter()
            .map(|wt| ScalarField::new(&w, wt.as_ref().unwrap().full_field(w.len())).unwrap())
            .collect();
        let rep = sobolev_verify(&lp, p, &phi, &fields, Some(1.0 + 1e-9)).unwrap();
        assert!(rep.passes, "p={p}: {rep:?}");
        assert_eq!(SOBOLEV_C_PRIME[0], 1.0);
        assert!(rep.c_by_c_prime[0] <= 1.0 + 1e-9, "p={p}: {rep:?}");
    }
}

fn box_indicators(b: &MetricMeasureSpace, side: usize) -> Vec<ScalarField> {
    let mut out = Vec::new();
    for w in [1, 2, 3, 5, side / 2] {
        for h in [1, 2, 4, side / 2] {
            for (x0, y0) in [(0, 0), (side / 4, side / 3), (side - w, side - h)] {
                out.push(ScalarField::indicator(b, &sub_box(b, side, x0, y0, w, h)));
            }
        }
    }
    out
}

#[test]
fn sobolev_on_z2_boxes() {
    let phi: RateFunction = "pow:0.5".parse().unwrap();
    let b = square(16);
    let sup = SupBackend::new(b.clone(), 1.0);
    let rep = sobolev_verify(&sup, 1.0, &phi, &box_indicators(&b, 16), None).unwrap();
    assert!(rep.passes && rep.c < 1.0, "{rep:?}");

    // A bounded φ needs a constant that grows with the box.
    let bounded: RateFunction = "const:1".parse().unwrap();
    let cs: Vec<f64> = [8usize, 16, 32]
        .iter()
        .map(|&s| {
            let b = square(s);
            let sup = SupBackend::new(b.clone(), 1.0);
            let half = ScalarField::indicator(&b, &sub_box(&b, s, 0, 0, s, s / 2));
            sobolev_verify(&sup, 1.0, &bounded, &[half], None).unwrap().c
        })
        .collect();
    assert!(cs.windows(2).all(|w| w[1] > 1.5 * w[0]), "{cs:?}");

    let flat = ScalarField::constant(&b, 1.0);
    let rep = sobolev_verify(&sup, 1.0, &phi, &[flat], None).unwrap();
    assert!(!rep.passes);
    assert_eq!(rep.unfalsifiable, vec![0]);
}

#[test]
fn nash_checks() {
    let b = square(12);
    let k = lazy_kernel(b.clone(), 1.0).unwrap();
    let phi: RateFunction = "pow:0.5".parse().unwrap();
    let fields = box_indicators(&b, 12);
    let rep = nash_check(&k, &phi, &fields, Some(100.0)).unwrap();
    assert!(rep.passes, "{rep:?}");
    assert!(rep.margins.iter().all(|&m| m >= 1.0 - 1e-9));
    let doubled: Vec<ScalarField> = fields
        .iter()
        .map(|f| ScalarField::new(&b, f.values().iter().map(|v| 2.0 * v).collect()).unwrap())
        .collect();
    let rep2 = nash_check(&k, &phi, &doubled, None).unwrap();
    for (a, b) in rep.per_sample.iter().zip(&rep2.per_sample) {
        assert_relative_eq!(a, b, max_relative = 1e-9);
    }
    assert!(nash_check(&k, &phi, &[ScalarField::constant(&b, 0.0)], None).is_err());
    // The standard kernel on a box with a boundary is not symmetric.
    let s = standard_kernel(b.clone(), 1.0).unwrap();
    assert!(nash_check(&s, &phi, &fields, None).is_err());
}

#[test]
fn volume_lower_bounds() {
    let p = path(30);
    let lin: RateFunction = "pow:1".parse().unwrap();
    let radii: Vec<f64> = (1..=29).map(f64::from).collect();
    let rep = sinf_volume_check(&p, &lin, &radii, 1.0).unwrap();
    assert!(rep.holds, "{rep:?}");

    let rep = sinf_volume_check(&p, &"const:2".parse().unwrap(), &radii, 1.0).unwrap();
    assert!(rep.phi_bounded && !rep.holds);

    let side = 12;
    let b = square(side);
    let sqrt: RateFunction = "pow:0.5".parse().unwrap();
    let rep = sinf_volume_check(&b, &sqrt, &[1.0, 2.0, 3.0, 4.0, 5.0], 1.0).unwrap();
    assert!(!rep.holds);
    assert!(rep.failing_points.contains(&0));
    let centre = 6 * side + 6;
    assert!(!rep.failing_points.contains(&centre));
    // Enumeration oracle: corner ball of radius r has (r+1)(r+2)/2 points.
    let expected: Vec<usize> = (0..side * side)
        .filter(|&x| (1..=5).any(|r| (b.volume(x, f64::from(r)).unwrap()) < f64::from(r * r)))
        .collect();
    assert_eq!(rep.failing_points, expected);
    assert_eq!(b.volume(0, 4.0).unwrap(), 15.0);
}

#[test]
fn registries_resolve_by_name() {
    assert_eq!(subset_families().names().collect::<Vec<_>>(), vec!["all", "balls", "boxes", "sweeps"]);
    assert!(profile_strategies().get("greedy").is_err());
    let w = path(9);
    let fam = subset_families().get("sweeps").unwrap();
    let specs = fam.members(&w, 1.0).unwrap();
    assert!(!specs.is_empty());
    let first = specs[0].materialize(&w).unwrap();
    assert_eq!(first.len(), 1);
    assert_eq!(central_point(&w), 4);
}
