//! Property tests of the inequalities and identities, through the public API.

use std::sync::Arc;

use approx::assert_relative_eq;
use proptest::prelude::*;
use scalecalc::calculus::{coarea, energy, grad_sup, gradient_sandwich, p2_energy_identity};
use scalecalc::coarse::certify_lse;
use scalecalc::profiles::RateFunction;
use scalecalc::randomwalk::log_convexity;
use scalecalc::viewpoint::{lazy_kernel, srw_kernel, standard_viewpoint};
use scalecalc::zoo::{grid, random_geometric, GridMetric};
use scalecalc::{Kernel, MetricMeasureSpace, ScalarField, SpaceOptions};

const METRICS: [GridMetric; 3] = [GridMetric::L1, GridMetric::Linf, GridMetric::Euclidean];

fn space() -> impl Strategy<Value = Arc<MetricMeasureSpace>> {
    prop_oneof![
        (3usize..7, 0usize..3).prop_map(|(side, m)| Arc::new(grid(2, side, METRICS[m], SpaceOptions::default()).unwrap())),
        (8usize..40, any::<u64>()).prop_map(|(n, seed)| Arc::new(random_geometric(n, seed, SpaceOptions::default()).unwrap())),
    ]
}

/// A space with a field on it; the raw values are recycled to its length.
fn space_and_field(nonnegative: bool) -> impl Strategy<Value = (Arc<MetricMeasureSpace>, ScalarField)> {
    let lo = if nonnegative { 0.0 } else { -3.0 };
    (space(), prop::collection::vec(prop_oneof![Just(0.0), lo..3.0f64], 1..50)).prop_map(|(s, raw)| {
        let values = (0..s.len()).map(|i| raw[i % raw.len()]).collect();
        let f = ScalarField::new(&s, values).unwrap();
        (s, f)
    })
}

/// A working scale comparable to the point spacing.
fn scale(space: &MetricMeasureSpace) -> f64 {
    if space.coords().is_some() {
        1.5
    } else {
        0.3
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn coarea_sandwich((s, f) in space_and_field(true)) {
        let c = coarea(&s, &f, scale(&s)).unwrap();
        prop_assert!(c.holds(1e-12), "{c:?}");
    }

    #[test]
    fn energy_identities_for_symmetric_walks((s, f) in space_and_field(false), lazy in any::<bool>()) {
        let h = scale(&s);
        let k: Kernel = if lazy { lazy_kernel(s.clone(), h).unwrap() } else { srw_kernel(s.clone(), h).unwrap() };
        prop_assert!(energy(&k, &f).unwrap().consistent(1e-10));
        prop_assert!(p2_energy_identity(&k, &f).unwrap().consistent(1e-10));
    }

    #[test]
    fn sup_gradient_grows_with_scale((s, f) in space_and_field(false), factor in 1.0..3.0f64) {
        let h = scale(&s);
        let small = grad_sup(&s, &f, h).unwrap();
        let large = grad_sup(&s, &f, h * factor).unwrap();
        for (a, b) in small.values.iter().zip(&large.values) {
            prop_assert!(a <= b);
        }
    }

    #[test]
    fn standard_viewpoint_sandwich((s, f) in space_and_field(false)) {
        let vp = standard_viewpoint(s.clone(), scale(&s)).unwrap();
        for (q, q2) in [(1.0, 2.0), (2.0, f64::INFINITY)] {
            let r = gradient_sandwich(&vp, &f, q, q2, 1e-12).unwrap();
            prop_assert_eq!(r.violations, 0, "{:?}", r);
        }
    }

    #[test]
    fn semigroup_norms_are_log_convex((s, f) in space_and_field(false)) {
        let k = lazy_kernel(s.clone(), scale(&s)).unwrap();
        let (_, ok) = log_convexity(&k, f.values(), 12);
        prop_assert!(ok);
    }

    #[test]
    fn power_rate_evaluates_and_inverts(alpha in 0.1..3.0f64, v in 0.01..1e4f64) {
        let phi: RateFunction = format!("pow:{alpha}").parse().unwrap();
        assert_relative_eq!(phi.eval(v), v.powf(alpha), max_relative = 1e-12);
        assert_relative_eq!(phi.inverse(phi.eval(v)), v, max_relative = 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn space_files_round_trip(s in space()) {
        let back = MetricMeasureSpace::from_json(&s.to_json().unwrap()).unwrap();
        prop_assert_eq!(back.len(), s.len());
        for x in 0..s.len() {
            prop_assert_eq!(back.measure(x), s.measure(x));
            for y in 0..s.len() {
                prop_assert_eq!(back.dist(x, y), s.dist(x, y));
            }
        }
    }

    #[test]
    fn kernel_files_round_trip(s in space()) {
        let k = lazy_kernel(s.clone(), scale(&s)).unwrap();
        let back = Kernel::from_json(s.clone(), &k.to_json().unwrap()).unwrap();
        prop_assert_eq!(back.scale(), k.scale());
        for x in 0..s.len() {
            for y in 0..s.len() {
                prop_assert_eq!(back.density(x, y), k.density(x, y));
            }
        }
    }

    #[test]
    fn identity_map_certifies_with_unit_constants(s in space()) {
        let id: Vec<usize> = (0..s.len()).collect();
        let cert = certify_lse(&s, &s, &id, &[1.0, 2.0]).unwrap();
        prop_assert!(cert.passes);
        prop_assert_eq!(cert.lipschitz, 1.0);
        prop_assert!(cert.volume_constants.iter().all(|&c| c == 1.0));
    }
}
