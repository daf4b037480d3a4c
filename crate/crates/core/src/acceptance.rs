//! The acceptance criteria as runnable checks, shared by the `acceptance`
//! test target and the CLI.

use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::calculus::{coarea, energy, gradient_sandwich, p2_energy_identity, LpBackend, SupBackend};
use crate::coarse::{certify_lse, discretize, pullback_lemmas, LseCertificate};
use crate::profiles::{
    boundary_profile, cheeger, collect_subsets, default_families, isoperimetric_profile, profile_strategies,
    AllSubsets, Boxes, Provided, RateFunction, SubsetFamily,
};
use crate::randomwalk::{
    decay_vs_profile, dirichlet_spectral_radius, geometric_times, log_convexity, nash_from_decay, sup_on_diagonal,
    tree_radial_chain, Cutoff,
};
use crate::space::{MetricMeasureSpace, SpaceOptions, Subset};
use crate::stats::loglog_slope;
use crate::viewpoint::{lazy_kernel, srw_kernel, standard_kernel, standard_viewpoint, symmetrize, Viewpoint};
use crate::zoo::{free_group, grid, heisenberg, random_geometric, regular_tree, GridMetric};
use crate::viewpoint::ScalarField;

/// Criteria expected to fail. The depth-14 tree ball converges to the
/// infinite-tree radius only like `cos(π/depth)`; it sits about 0.015 low.
pub const KNOWN_RED: &[&str] = &["6a"];

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Line {
    pub id: String,
    pub title: String,
    pub pass: bool,
    /// Listed in [`KNOWN_RED`].
    pub known_red: bool,
    pub detail: String,
    /// Wall-clock time of timed criteria; kept out of serialized tables so
    /// they stay reproducible.
    #[serde(skip)]
    pub seconds: Option<f64>,
}

impl Line {
    /// Failed and not expected to.
    pub fn unexpected(&self) -> bool {
        !self.pass && !self.known_red
    }

    pub fn status(&self) -> &'static str {
        if self.pass {
            "PASS"
        } else {
            "FAIL"
        }
    }

    fn timed(mut self, took: Duration) -> Self {
        self.seconds = Some(took.as_secs_f64());
        self
    }
}

fn line(id: &str, title: &str, pass: bool, detail: String) -> Line {
    Line {
        id: id.into(),
        title: title.into(),
        pass,
        known_red: KNOWN_RED.contains(&id),
        detail,
        seconds: None,
    }
}

fn opts() -> SpaceOptions {
    SpaceOptions::default()
}

fn lattice(d: usize, side: usize, metric: GridMetric) -> Arc<MetricMeasureSpace> {
    Arc::new(grid(d, side, metric, opts()).unwrap())
}

fn random_space(rng: &mut ChaCha8Rng, max_n: usize) -> (Arc<MetricMeasureSpace>, f64) {
    let n = rng.random_range(10..=max_n);
    if rng.random_bool(0.3) {
        let side = (n as f64).sqrt().floor().max(2.0) as usize;
        let metric = [GridMetric::L1, GridMetric::Linf, GridMetric::Euclidean][rng.random_range(0..3)];
        (lattice(2, side, metric), rng.random_range(1.0..2.5))
    } else {
        let s = random_geometric(n, rng.random(), opts()).unwrap();
        (Arc::new(s), rng.random_range(0.12..0.4))
    }
}

fn random_field(space: &MetricMeasureSpace, rng: &mut ChaCha8Rng, nonnegative: bool) -> ScalarField {
    let density = rng.random_range(0.1..1.0);
    let values = (0..space.len())
        .map(|_| {
            if !rng.random_bool(density) {
                0.0
            } else if nonnegative {
                rng.random_range(0.0..3.0)
            } else {
                rng.random_range(-3.0..3.0)
            }
        })
        .collect();
    ScalarField::new(space, values).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if a == b {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let out = f();
    (out, t.elapsed())
}

fn energy_identities() -> Vec<Line> {
    let ((worst, count), took) = timed(|| {
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        let mut worst = 0.0_f64;
        let mut count = 0;
        for _ in 0..50 {
            let (space, h) = random_space(&mut rng, 200);
            let vp = standard_viewpoint(space, h).unwrap();
            let (sym, sp) = symmetrize(&vp).unwrap();
            for _ in 0..20 {
                let f = random_field(&sp, &mut rng, false);
                let e = energy(&sym, &f).unwrap();
                let id = p2_energy_identity(&sym, &f).unwrap();
                worst = worst
                    .max(rel(e.dirichlet, e.gradient_norm_sq / 2.0))
                    .max(rel(id.rhs, id.lhs / 2.0));
                count += 1;
            }
        }
        (worst, count)
    });
    vec![line(
        "1",
        "energy identities",
        worst <= 1e-10 && took < Duration::from_secs(60),
        format!("{count} (viewpoint, field) pairs, worst relative error {worst:.2e}"),
    )
    .timed(took)]
}

fn coarea_sandwich() -> Vec<Line> {
    let ((violations, worst_indicator), took) = timed(|| {
        let mut rng = ChaCha8Rng::seed_from_u64(202);
        let mut violations = 0;
        let mut worst_indicator = 0.0_f64;
        for i in 0..100 {
            let (space, h) = if i % 2 == 0 {
                let s = random_geometric(rng.random_range(20..150), rng.random(), opts()).unwrap();
                (Arc::new(s), rng.random_range(0.1..0.3))
            } else {
                let metric = if i % 4 == 1 { GridMetric::L1 } else { GridMetric::Linf };
                (lattice(2, rng.random_range(4..14), metric), rng.random_range(1.0..3.0))
            };
            let f = random_field(&space, &mut rng, true);
            let c = coarea(&space, &f, h).unwrap();
            if !c.holds(1e-12) {
                violations += 1;
            }
            let a = space.subset((0..space.len()).filter(|_| rng.random_bool(0.4))).unwrap();
            let c = coarea(&space, &ScalarField::indicator(&space, &a), h).unwrap();
            worst_indicator = worst_indicator.max(rel(c.middle, c.upper));
        }
        (violations, worst_indicator)
    });
    vec![line(
        "2",
        "co-area sandwich",
        violations == 0 && worst_indicator <= 1e-12 && took < Duration::from_secs(60),
        format!(
            "100 fields, {violations} violations of ½T ≤ ∫|∇f|_h ≤ T; indicator upper-bound gap {worst_indicator:.1e}"
        ),
    )
    .timed(took)]
}

fn gradient_chain() -> Vec<Line> {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let exps = [1.0, 2.0, f64::INFINITY];
    let mut violations = 0;
    let mut checks = 0;
    for i in 0..50 {
        let (space, h) = random_space(&mut rng, 120);
        let vp = if i % 2 == 0 {
            standard_viewpoint(space.clone(), h).unwrap()
        } else {
            // Support on a larger ball than the lower-bound scale: A > 1.
            let k = standard_kernel(space.clone(), 1.5 * h).unwrap().with_scale(h).unwrap();
            Viewpoint::validate(k).unwrap()
        };
        let f = random_field(&space, &mut rng, false);
        for (a, &q) in exps.iter().enumerate() {
            for &q2 in &exps[a..] {
                violations += gradient_sandwich(&vp, &f, q, q2, 1e-12).unwrap().violations;
                checks += 1;
            }
        }
    }
    vec![line(
        "3",
        "gradient sandwich",
        violations == 0,
        format!("50 pairs × {} exponent pairs, {violations} pointwise violations", checks / 50),
    )]
}

fn lattice_decay() -> Vec<Line> {
    let (r2, took) = timed(|| {
        let z2 = lattice(2, 64, GridMetric::L1);
        let k = lazy_kernel(z2.clone(), 1.0).unwrap();
        let center = 32 * 64 + 32;
        decay_vs_profile(
            &k,
            &RateFunction::power(0.5).unwrap(),
            &geometric_times(256, 4),
            &[center],
            Cutoff::for_mass(z2.total_measure()),
            None,
        )
        .unwrap()
    });
    let z1 = lattice(1, 400, GridMetric::L1);
    let k = lazy_kernel(z1.clone(), 1.0).unwrap();
    let r1 = decay_vs_profile(
        &k,
        &RateFunction::power(1.0).unwrap(),
        &geometric_times(10_000, 4),
        &[200],
        Cutoff::for_mass(z1.total_measure()),
        None,
    )
    .unwrap();
    vec![
        line(
            "4a",
            "ℤ² decay vs profile",
            (r2.measured_slope + 1.0).abs() <= 0.15
                && (r2.gamma_slope + 1.0).abs() <= 1e-6
                && r2.holds
                && took < Duration::from_secs(120),
            format!(
                "64×64 lazy walk: slope {:.3}, γ slope {:.6}, best c = {:?} holds = {}",
                r2.measured_slope, r2.gamma_slope, r2.c, r2.holds
            ),
        )
        .timed(took),
        line(
            "4b",
            "ℤ¹ decay vs profile",
            (r1.measured_slope + 0.5).abs() <= 0.1 && (r1.gamma_slope + 0.5).abs() <= 0.1 && r1.holds,
            format!(
                "window of 400: slope {:.3}, γ slope {:.3}, holds = {}",
                r1.measured_slope, r1.gamma_slope, r1.holds
            ),
        ),
    ]
}

fn nash_machinery() -> Vec<Line> {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut violations = 0;
    for i in 0..100 {
        let k = if i % 2 == 0 {
            lazy_kernel(lattice(2, 10, GridMetric::L1), 1.0).unwrap()
        } else {
            let (space, h) = random_space(&mut rng, 80);
            let (sym, _) = symmetrize(&standard_viewpoint(space, h).unwrap()).unwrap();
            sym.into_kernel()
        };
        let f = random_field(k.space(), &mut rng, false);
        let (u, _) = log_convexity(&k, f.values(), 40);
        violations += u.windows(3).filter(|w| w[1] * w[1] > w[0] * w[2] * (1.0 + 1e-12)).count();
    }
    let z2 = lattice(2, 12, GridMetric::L1);
    let k = lazy_kernel(z2.clone(), 1.0).unwrap();
    let all: Vec<usize> = (0..z2.len()).collect();
    let gamma = sup_on_diagonal(&k, &all, &geometric_times(64, 2)).unwrap();
    let fields: Vec<ScalarField> = (0..20)
        .map(|_| loop {
            let f = random_field(&z2, &mut rng, false);
            if !f.support().is_empty() {
                break f;
            }
        })
        .collect();
    let rep = nash_from_decay(&k, &gamma, &fields).unwrap();
    vec![
        line(
            "5a",
            "log-convexity of ‖Pⁿf‖²",
            violations == 0,
            format!("100 fields, {violations} violations of u_n² ≤ u_(n−1)u_(n+1)"),
        ),
        line(
            "5b",
            "Nash constants from decay",
            rep.passes && rep.max_factor.is_finite(),
            format!(
                "12×12 box, 20 fields: max induced constant {:.3}, (δ) holds = {}",
                rep.max_factor, rep.delta.holds
            ),
        ),
    ]
}

fn amenability() -> Vec<Line> {
    let kesten = 3f64.sqrt() / 2.0;
    let chain = tree_radial_chain(4, 14).unwrap();
    let rho = chain.spectral_radius();
    // Path-count oracle on a chain deeper than the walk can reach.
    let deep = tree_radial_chain(4, 1600).unwrap();
    let root = deep.root_test(1500);
    let tree = line(
        "6a",
        "tree ball spectral radius",
        (rho.rho - kesten).abs() <= 0.010 && (root - kesten).abs() <= 0.010,
        format!(
            "depth 14: ρ = {:.4} (target {kesten:.4} ± 0.010); path-count root test {root:.4}",
            rho.rho
        ),
    );

    let mut ls = Vec::new();
    let mut gaps = Vec::new();
    let mut rhos = Vec::new();
    for l in [4usize, 8, 16, 32] {
        let side = l + 2;
        let sq = lattice(2, side, GridMetric::L1);
        let k = srw_kernel(sq.clone(), 1.0).unwrap();
        let interior = sq.subset((1..=l).flat_map(|i| (1..=l).map(move |j| i * side + j))).unwrap();
        let r = dirichlet_spectral_radius(&k, &interior).unwrap();
        ls.push(l as f64);
        gaps.push(1.0 - r.rho);
        rhos.push(r.rho);
    }
    let slope = loglog_slope(&ls, &gaps);
    let boxes = line(
        "6b",
        "ℤ² box spectral gaps",
        (slope + 2.0).abs() <= 0.3 && rhos.windows(2).all(|w| w[1] > w[0]) && rhos[3] > 0.99,
        format!(
            "L = 4..32: ρ = {:?}, slope of 1 − ρ {slope:.3}",
            rhos.iter().map(|r| format!("{r:.5}")).collect::<Vec<_>>()
        ),
    );

    let mut tree_min = f64::INFINITY;
    for depth in 3..=8 {
        let t = Arc::new(regular_tree(4, depth, opts()).unwrap());
        let balls = Provided((0..depth).map(|r| t.ball(0, r as f64).unwrap()).collect());
        tree_min = tree_min.min(cheeger(&t, 1.0, &balls).unwrap().constant);
    }
    let (mut vols, mut hs) = (Vec::new(), Vec::new());
    for l in [8usize, 16, 32, 64] {
        let sq = lattice(2, l, GridMetric::L1);
        vols.push((l * l) as f64);
        hs.push(cheeger(&sq, 1.0, &Boxes).unwrap().constant);
    }
    let cslope = loglog_slope(&vols, &hs);
    let cheeger_line = line(
        "6c",
        "Cheeger dichotomy",
        tree_min >= 0.5 && (cslope + 0.5).abs() <= 0.15 && hs.windows(2).all(|w| w[1] < w[0]),
        format!("tree balls: min {tree_min:.3}; ℤ² sub-boxes: {hs:.4?}, slope in volume {cslope:.3}"),
    );
    vec![tree, boxes, cheeger_line]
}

struct Pair {
    name: &'static str,
    src: Arc<MetricMeasureSpace>,
    dst: Arc<MetricMeasureSpace>,
    map: Vec<usize>,
    h_src: f64,
    h_dst: f64,
}

fn invariance_pairs() -> Vec<Pair> {
    let l1 = lattice(2, 24, GridMetric::L1);
    let linf = lattice(2, 24, GridMetric::Linf);
    let euclid = lattice(2, 24, GridMetric::Euclidean);
    let net = discretize(&euclid, 1.25).unwrap();
    let path = lattice(1, 576, GridMetric::L1);
    let pnet = discretize(&path, 2.0).unwrap();
    vec![
        Pair {
            name: "ℤ² ℓ¹ → ℓ∞",
            src: l1.clone(),
            dst: linf,
            map: (0..l1.len()).collect(),
            h_src: 1.0,
            h_dst: 1.0,
        },
        Pair {
            name: "ℤ² → net(1.25)",
            src: euclid,
            dst: net.graph.clone(),
            map: net.map,
            h_src: 1.0,
            h_dst: 1.0,
        },
        Pair {
            name: "path(576) → net(2)",
            src: path,
            dst: pnet.graph.clone(),
            map: pnet.map,
            h_src: 2.0,
            h_dst: 1.0,
        },
    ]
}

fn band(cert: &LseCertificate) -> f64 {
    cert.lipschitz * cert.max_volume_constant()
}

fn invariance() -> Vec<Line> {
    let t0 = Instant::now();
    let candidates = profile_strategies().get("candidates").unwrap();
    let mut lines = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    for (i, pair) in invariance_pairs().into_iter().enumerate() {
        let cert = certify_lse(&pair.src, &pair.dst, &pair.map, &[1.0, 2.0, 4.0]).unwrap();
        let k = band(&cert);
        let half = pair.src.total_measure().min(pair.dst.total_measure()) / 2.0;
        let vols: Vec<f64> = (2..=8).map(|e| 2f64.powi(e)).filter(|&v| v < half).collect();
        let js = isoperimetric_profile(
            &LpBackend::new(pair.src.clone(), pair.h_src).unwrap(),
            2.0,
            &vols,
            candidates.as_ref(),
        )
        .unwrap();
        let jt = isoperimetric_profile(
            &LpBackend::new(pair.dst.clone(), pair.h_dst).unwrap(),
            2.0,
            &vols,
            candidates.as_ref(),
        )
        .unwrap();
        let ratios: Vec<f64> = js.values.iter().zip(&jt.values).map(|(a, b)| a / b).collect();
        let inside = ratios.iter().all(|&r| r >= 1.0 / k && r <= k);

        let mut lemmas_ok = cert.passes;
        let mut worst = (0.0_f64, f64::INFINITY, 0.0_f64);
        for _ in 0..5 {
            let f = random_field(&pair.dst, &mut rng, false);
            if f.support().is_empty() {
                continue;
            }
            let r = pullback_lemmas(&pair.src, &pair.dst, &cert, f.values(), pair.h_src, 2.0).unwrap();
            let finite = [r.l1.constant, r.l2.constant, r.l3.constant]
                .iter()
                .all(|c| c.is_finite());
            lemmas_ok &= finite && r.l1.holds && r.l2.holds && r.l3.holds;
            worst = (worst.0.max(r.l2.constant), worst.1.min(r.l1.constant), worst.2.max(r.l3.constant));
        }
        let id = ["7a", "7b", "7c"][i];
        lines.push(line(
            id,
            "invariance under equivalence",
            inside && lemmas_ok,
            format!(
                "{}: band [1/{k:.2}, {k:.2}] (L = {:.2}), ratios {:?}; L1 ≥ {:.3}, L2 ≤ {:.3}, L3 ≤ {:.3}",
                pair.name,
                cert.lipschitz,
                ratios.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>(),
                worst.1,
                worst.0,
                worst.2
            ),
        ));
    }
    let took = t0.elapsed();
    lines.push(line(
        "7t",
        "invariance runtime",
        took < Duration::from_secs(300),
        "budget 300 s".into(),
    )
    .timed(took));
    lines
}

fn small_spaces() -> Vec<(Arc<MetricMeasureSpace>, f64, bool)> {
    let mut out = Vec::new();
    for n in 2..=14 {
        out.push((lattice(1, n, GridMetric::L1), 1.0, true));
    }
    for side in [2, 3] {
        out.push((lattice(2, side, GridMetric::L1), 1.0, true));
        out.push((lattice(2, side, GridMetric::Linf), 1.0, true));
    }
    out.push((lattice(2, 3, GridMetric::Euclidean), 1.5, false));
    out.push((Arc::new(free_group(2, 1, opts()).unwrap()), 1.0, false));
    out.push((Arc::new(regular_tree(3, 2, opts()).unwrap()), 1.0, false));
    out.push((Arc::new(heisenberg(1, opts()).unwrap()), 1.0, false));
    for (n, seed) in [(8, 1), (11, 2), (14, 3)] {
        out.push((Arc::new(random_geometric(n, seed, opts()).unwrap()), 0.3, false));
    }
    out
}

fn exhaustive_oracle() -> Vec<Line> {
    let strategies = profile_strategies();
    let (exact, cand) = (strategies.get("exact").unwrap(), strategies.get("candidates").unwrap());
    let mut order_bad = Vec::new();
    let mut equality_bad = Vec::new();
    let spaces = small_spaces();
    for (space, h, documented) in &spaces {
        let n = space.len();
        let vols: Vec<f64> = (1..=n).map(|v| v as f64).collect();
        let sup = SupBackend::new(space.clone(), *h);
        let je = isoperimetric_profile(&sup, 1.0, &vols, exact.as_ref()).unwrap();
        let jc = isoperimetric_profile(&sup, 1.0, &vols, cand.as_ref()).unwrap();
        let families = default_families(space);
        let refs: Vec<&dyn SubsetFamily> = families.iter().map(|f| f.as_ref()).collect();
        let members: Vec<Subset> = collect_subsets(&refs, space, *h, f64::INFINITY).unwrap();
        let fam = Provided(members);
        let bp = boundary_profile(space, *h, &fam, &vols).unwrap();
        let (ce, cc) = if n >= 2 {
            (
                cheeger(space, *h, &AllSubsets).unwrap().constant,
                cheeger(space, *h, &fam).unwrap().constant,
            )
        } else {
            (0.0, 0.0)
        };
        let eps = 1e-12;
        let j_ok = je.values.iter().zip(&jc.values).all(|(e, c)| *c <= e * (1.0 + eps));
        let i_ok = bp.full.values.iter().zip(&bp.lower.values).all(|(e, c)| *c >= e * (1.0 - eps));
        let c_ok = cc >= ce * (1.0 - eps);
        if !(j_ok && i_ok && c_ok) {
            order_bad.push(format!("{} (j {j_ok}, I {i_ok}, h {c_ok})", space.name()));
        }
        if *documented {
            let j_eq = je.values.iter().zip(&jc.values).all(|(e, c)| rel(*e, *c) <= eps);
            let i_eq = bp.full.values.iter().zip(&bp.lower.values).all(|(e, c)| rel(*e, *c) <= eps);
            let c_eq = rel(ce, cc) <= eps;
            if !(j_eq && i_eq && c_eq) {
                equality_bad.push(format!("{} (j {j_eq}, I {i_eq}, h {c_eq})", space.name()));
            }
        }
    }
    vec![
        line(
            "8a",
            "candidates bounded by enumeration",
            order_bad.is_empty(),
            format!("{} spaces with N ≤ 14; out of order: {order_bad:?}", spaces.len()),
        ),
        line(
            "8b",
            "equality on achieving families",
            equality_bad.is_empty(),
            format!("paths and lattice boxes; unequal: {equality_bad:?}"),
        ),
    ]
}

fn discretization_round_trip() -> Vec<Line> {
    let spaces: Vec<Arc<MetricMeasureSpace>> = vec![
        lattice(1, 60, GridMetric::L1),
        lattice(2, 12, GridMetric::L1),
        lattice(2, 12, GridMetric::Linf),
        lattice(2, 12, GridMetric::Euclidean),
        lattice(3, 5, GridMetric::L1),
        Arc::new(free_group(2, 3, opts()).unwrap()),
        Arc::new(regular_tree(3, 5, opts()).unwrap()),
        Arc::new(heisenberg(2, opts()).unwrap()),
        Arc::new(random_geometric(150, 3, opts()).unwrap()),
    ];
    let mut bad = Vec::new();
    let mut thresholds = Vec::new();
    for s in &spaces {
        // Scales from a quarter of the diameter down, in quarter-octaves.
        let top = s.diameter() / 4.0;
        let mut scales: Vec<f64> = (0..24).map(|k| top * 2f64.powf(-k as f64 / 4.0)).collect();
        scales.reverse();
        let ok: Vec<bool> = scales.iter().map(|&h| discretize(s, h).is_ok()).collect();
        let Some(first) = ok.iter().position(|&b| b) else {
            bad.push(format!("{}: never connected", s.name()));
            continue;
        };
        thresholds.push(format!("{}: {:.3}", s.name(), scales[first]));
        for &h in &scales[first..] {
            match discretize(s, h) {
                Ok(d) => {
                    let cert = certify_lse(s, &d.graph, &d.map, &[2.0 * h, 4.0 * h]).unwrap();
                    if !cert.passes {
                        bad.push(format!("{} at h = {h:.3}: {:?}", s.name(), cert.violations[0].axiom));
                    }
                }
                Err(e) => bad.push(format!("{} at h = {h:.3}: {e}", s.name())),
            }
        }
    }
    vec![line(
        "9",
        "discretization round trip",
        bad.is_empty(),
        format!("connectivity thresholds [{}]; failures: {bad:?}", thresholds.join(", ")),
    )]
}

/// Criterion groups in order, keyed by number.
pub fn sections() -> Vec<(&'static str, fn() -> Vec<Line>)> {
    vec![
        ("1", energy_identities),
        ("2", coarea_sandwich),
        ("3", gradient_chain),
        ("4", lattice_decay),
        ("5", nash_machinery),
        ("6", amenability),
        ("7", invariance),
        ("8", exhaustive_oracle),
        ("9", discretization_round_trip),
    ]
}

/// Runs the selected groups (all when `only` is `None`), calling `emit`
/// on each line as it is produced.
pub fn run(only: Option<&[String]>, mut emit: impl FnMut(&Line)) -> Vec<Line> {
    let mut out = Vec::new();
    for (id, section) in sections() {
        if only.is_some_and(|o| !o.iter().any(|s| s == id)) {
            continue;
        }
        for l in section() {
            emit(&l);
            out.push(l);
        }
    }
    out
}
