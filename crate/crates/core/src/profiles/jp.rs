use std::collections::{HashMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{Mode, ENUMERATION_LIMIT};
use crate::calculus::{GradientBackend, QuadraticForm, Stencil};
use crate::error::{Error, Result};
use crate::space::Subset;
use crate::viewpoint::norm;

pub const DESCENT_RESTARTS: usize = 8;
pub const DESCENT_ITERATIONS: usize = 500;
pub const DESCENT_TOL: f64 = 1e-8;
const DESCENT_SEED: u64 = 0x5eed_1e55;
/// `δ` below this is treated as zero (`J = +∞`).
const DEGENERATE_TOL: f64 = 1e-13;

/// `J_p(A)` with the field attaining it.
#[derive(Clone, Debug)]
pub struct JpResult {
    pub value: f64,
    /// Full-length field supported in `A`.
    pub field: Vec<f64>,
    pub mode: Mode,
    /// `J = +∞`: some nonzero field in `A` has zero gradient norm.
    pub degenerate: bool,
}

/// `‖f‖_p / ‖|∇f|‖_p`, `+∞` when the gradient vanishes on a nonzero field.
pub fn quotient(backend: &dyn GradientBackend, f: &[f64], p: f64) -> f64 {
    let top = norm(backend.space().measures(), f, p);
    let bottom = backend.norm(f, p);
    if top == 0.0 {
        0.0
    } else if bottom <= top * 1e-14 {
        f64::INFINITY
    } else {
        top / bottom
    }
}

/// All gradient stencils of a backend, computed once.
pub struct StencilCache {
    stencils: Vec<Stencil>,
    symmetric: bool,
}

impl StencilCache {
    pub fn new(backend: &dyn GradientBackend) -> Self {
        StencilCache {
            stencils: (0..backend.space().len()).into_par_iter().map(|x| backend.stencil(x)).collect(),
            symmetric: backend.symmetric_stencil(),
        }
    }

    pub fn get(&self, x: usize) -> &Stencil {
        &self.stencils[x]
    }

    /// Points whose gradient can see a member of `set`.
    fn relevant(&self, set: &[usize]) -> Vec<usize> {
        if !self.symmetric {
            return (0..self.stencils.len()).collect();
        }
        let mut v: Vec<usize> = set
            .iter()
            .flat_map(|&a| self.stencils[a].points.iter().copied())
            .chain(set.iter().copied())
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// `‖|∇1_A|‖₁`.
    pub fn indicator_gradient_l1(&self, mu: &[f64], a: &Subset) -> f64 {
        self.relevant(a.members())
            .into_iter()
            .map(|x| {
                let st = &self.stencils[x];
                let ix = a.contains(x);
                let terms = st
                    .points
                    .iter()
                    .zip(&st.weights)
                    .filter(|(&y, _)| a.contains(y) != ix)
                    .map(|(_, &w)| w);
                mu[x] * if st.sup { terms.fold(0.0, f64::max) } else { terms.sum() }
            })
            .sum()
    }
}

/// Gradient stencils near a universe of at most 63 points, in local form
/// for bitmask evaluation of `‖|∇1_B|‖₁` over `B ⊆ universe`.
pub(crate) struct MaskEvaluator {
    weights: Vec<f64>,
    /// `(μ(x), local index of x, [(local index of y, w)], sup)`
    terms: Vec<(f64, Option<usize>, Vec<(Option<usize>, f64)>, bool)>,
}

impl MaskEvaluator {
    pub(crate) fn new(backend: &dyn GradientBackend, universe: &[usize]) -> Self {
        let mu = backend.space().measures();
        let local: HashMap<usize, usize> = universe.iter().enumerate().map(|(i, &x)| (x, i)).collect();
        let relevant: Vec<usize> = if backend.symmetric_stencil() {
            let mut v: Vec<usize> = universe
                .par_iter()
                .flat_map_iter(|&a| backend.stencil(a).points)
                .chain(universe.par_iter().copied())
                .collect();
            v.sort_unstable();
            v.dedup();
            v
        } else {
            (0..backend.space().len()).collect()
        };
        let terms = relevant
            .into_par_iter()
            .filter_map(|x| {
                let st = backend.stencil(x);
                let lx = local.get(&x).copied();
                let pts: Vec<(Option<usize>, f64)> = st
                    .points
                    .iter()
                    .zip(&st.weights)
                    .filter(|(&y, _)| y != x)
                    .map(|(y, &w)| (local.get(y).copied(), w))
                    .collect();
                (lx.is_some() || pts.iter().any(|(l, _)| l.is_some())).then_some((mu[x], lx, pts, st.sup))
            })
            .collect();
        MaskEvaluator {
            weights: universe.iter().map(|&x| mu[x]).collect(),
            terms,
        }
    }

    pub(crate) fn volume(&self, mask: u64) -> f64 {
        (0..self.weights.len())
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| self.weights[i])
            .sum()
    }

    /// `‖|∇1_B|‖₁` for the set coded by `mask`.
    pub(crate) fn gradient_l1(&self, mask: u64) -> f64 {
        let inside = |l: Option<usize>| l.is_some_and(|i| mask >> i & 1 == 1);
        let mut total = 0.0;
        for (m, lx, pts, sup) in &self.terms {
            let ix = inside(*lx);
            let mut acc = 0.0_f64;
            for &(ly, w) in pts {
                if inside(ly) != ix {
                    if *sup {
                        acc = acc.max(w);
                    } else {
                        acc += w;
                    }
                }
            }
            total += m * acc;
        }
        total
    }

    /// `(μ(B), ‖|∇1_B|‖₁)` for every mask `0..2^n`.
    pub(crate) fn all(&self) -> Vec<(f64, f64)> {
        let n = self.weights.len();
        (0..1u64 << n)
            .into_par_iter()
            .map(|m| (self.volume(m), self.gradient_l1(m)))
            .collect()
    }
}

fn ratio(volume: f64, grad: f64) -> f64 {
    if volume == 0.0 {
        0.0
    } else if grad <= volume * 1e-14 {
        f64::INFINITY
    } else {
        volume / grad
    }
}

/// `μ(B)/‖|∇1_B|‖₁`.
pub fn indicator_ratio(backend: &dyn GradientBackend, b: &Subset) -> f64 {
    let f = b.mask(backend.space().len()).iter().map(|&m| f64::from(u8::from(m))).collect::<Vec<_>>();
    ratio(b.measure(), backend.norm(&f, 1.0))
}

/// [`indicator_ratio`] through precomputed stencils.
pub fn indicator_ratio_cached(cache: &StencilCache, mu: &[f64], b: &Subset) -> f64 {
    ratio(b.measure(), cache.indicator_gradient_l1(mu, b))
}

fn indicator(n: usize, members: impl IntoIterator<Item = usize>) -> Vec<f64> {
    let mut f = vec![0.0; n];
    for x in members {
        f[x] = 1.0;
    }
    f
}

fn j1(backend: &dyn GradientBackend, a: &Subset) -> JpResult {
    let space = backend.space();
    let n = space.len();
    let finish = |value: f64, members: Vec<usize>, mode| JpResult {
        value,
        field: indicator(n, members),
        mode,
        degenerate: value.is_infinite(),
    };
    if a.len() <= ENUMERATION_LIMIT {
        let eval = MaskEvaluator::new(backend, a.members());
        let (best, value) = eval
            .all()
            .into_iter()
            .enumerate()
            .skip(1)
            .map(|(m, (v, g))| (m as u64, ratio(v, g)))
            .fold((0, f64::NEG_INFINITY), |acc, c| if c.1 > acc.1 { c } else { acc });
        let members = (0..a.len()).filter(|i| best >> i & 1 == 1).map(|i| a.members()[i]).collect();
        return finish(value, members, Mode::Exact);
    }
    // Candidate family inside A: A itself and its intersections with balls.
    let radii = super::family::radius_grid(space, 32);
    let mut cands: Vec<Subset> = vec![a.clone()];
    for &x in a.members() {
        for &r in &radii {
            let ball = space.ball_indices(x, r);
            let inter: Vec<usize> = ball.into_iter().filter(|&y| a.contains(y)).collect();
            if inter.len() < a.len() {
                cands.push(Subset::from_sorted(inter, space.measures()));
            }
        }
    }
    cands.sort_by(|a, b| a.members().cmp(b.members()));
    cands.dedup_by(|a, b| a.members() == b.members());
    let cache = StencilCache::new(backend);
    let (value, best) = cands
        .par_iter()
        .map(|b| (indicator_ratio_cached(&cache, space.measures(), b), b))
        .reduce_with(|x, y| if y.0 > x.0 || (y.0 == x.0 && y.1.members() < x.1.members()) { y } else { x })
        .map(|(v, b)| (v, b.members().to_vec()))
        .unwrap_or((0.0, Vec::new()));
    finish(value, best, Mode::LowerBound)
}

fn j2_quadratic(backend: &dyn GradientBackend, a: &Subset) -> Option<JpResult> {
    let kernel = backend.quadratic_kernel()?;
    let q = QuadraticForm::new(kernel, a);
    let (delta, values) = q.minimize();
    let mut field = vec![0.0; backend.space().len()];
    for (&x, v) in q.members().iter().zip(values) {
        field[x] = v;
    }
    let degenerate = delta <= DEGENERATE_TOL;
    Some(JpResult {
        value: if degenerate { f64::INFINITY } else { delta.powf(-0.5) },
        field,
        mode: Mode::Exact,
        degenerate,
    })
}

/// `J_p(A)` and its mode without the optimizing field; cheaper than
/// [`jp_subset`] when `p = 2` has a quadratic form.
pub(crate) fn jp_value(backend: &dyn GradientBackend, a: &Subset, p: f64) -> Result<(f64, Mode)> {
    if p == 2.0 && !a.is_empty() {
        if let Some(kernel) = backend.quadratic_kernel() {
            let delta = QuadraticForm::new(kernel, a).min_value();
            let value = if delta <= DEGENERATE_TOL { f64::INFINITY } else { delta.powf(-0.5) };
            return Ok((value, Mode::Exact));
        }
    }
    let r = jp_subset(backend, a, p)?;
    Ok((r.value, r.mode))
}

/// `J_∞(A)`: the largest number of gradient-stencil steps from a point of
/// `A` to the complement. The hop-count field is optimal because
/// `|∇f|_∞ ≤ 1` forces `|f(x)| ≤ hops(x)`.
fn jinf(backend: &dyn GradientBackend, a: &Subset) -> JpResult {
    let space = backend.space();
    let n = space.len();
    let mut adj: Vec<Vec<usize>> = (0..n).into_par_iter().map(|x| backend.neighbors(x)).collect();
    if !backend.symmetric_stencil() {
        let mut rev = vec![Vec::new(); n];
        for (x, row) in adj.iter().enumerate() {
            for &y in row {
                rev[y].push(x);
            }
        }
        for (row, extra) in adj.iter_mut().zip(rev) {
            row.extend(extra);
        }
    }
    let mut hops = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    for x in (0..n).filter(|&x| !a.contains(x)) {
        hops[x] = 0;
        queue.push_back(x);
    }
    while let Some(x) = queue.pop_front() {
        for &y in &adj[x] {
            if hops[y] == usize::MAX {
                hops[y] = hops[x] + 1;
                queue.push_back(y);
            }
        }
    }
    let unreachable = a.members().iter().any(|&x| hops[x] == usize::MAX);
    let field: Vec<f64> = hops
        .iter()
        .map(|&k| if k == usize::MAX { 1.0 } else { k as f64 })
        .collect();
    let value = if unreachable {
        f64::INFINITY
    } else {
        a.members().iter().map(|&x| field[x]).fold(0.0, f64::max)
    };
    JpResult {
        value,
        field,
        mode: Mode::Exact,
        degenerate: unreachable,
    }
}

/// Minimizes `R(f) = ‖|∇f|‖_p^p / ‖f‖_p^p` over fields supported in `A` by
/// normalized subgradient steps with backtracking; `J = R^{−1/p}`.
fn descent(backend: &dyn GradientBackend, a: &Subset, p: f64) -> JpResult {
    let space = backend.space();
    let mu = space.measures();
    let n = space.len();
    let members = a.members();
    let rq = |f: &[f64], grad: Option<&mut [f64]>| -> (f64, f64) {
        let mut g = grad;
        let e = backend.p_energy(f, p, g.as_deref_mut());
        let m: f64 = members.iter().map(|&x| mu[x] * f[x].abs().powf(p)).sum();
        if let Some(g) = g {
            for &x in members {
                g[x] = (g[x] - (e / m) * p * mu[x] * f[x].abs().powf(p - 1.0) * f[x].signum()) / m;
            }
        }
        (e / m, m)
    };
    let run = |restart: usize| -> (f64, Vec<f64>) {
        let mut f = vec![0.0; n];
        if restart == 0 {
            members.iter().for_each(|&x| f[x] = 1.0);
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(DESCENT_SEED + restart as u64);
            members.iter().for_each(|&x| f[x] = rng.random_range(0.0..1.0) + 1e-3);
        }
        let mut g = vec![0.0; n];
        let (mut r, _) = rq(&f, Some(&mut g));
        let mut eta = 0.1;
        for _ in 0..DESCENT_ITERATIONS {
            if r == 0.0 {
                break;
            }
            let gnorm = members.iter().map(|&x| g[x] * g[x]).sum::<f64>().sqrt();
            let fnorm = members.iter().map(|&x| f[x] * f[x]).sum::<f64>().sqrt();
            if gnorm == 0.0 {
                break;
            }
            let mut accepted = None;
            for _ in 0..40 {
                let mut trial = f.clone();
                for &x in members {
                    trial[x] -= eta * fnorm * g[x] / gnorm;
                }
                let mut tg = vec![0.0; n];
                let (tr, tm) = rq(&trial, Some(&mut tg));
                if tm > 0.0 && tr < r {
                    accepted = Some((trial, tg, tr));
                    break;
                }
                eta *= 0.5;
            }
            match accepted {
                Some((nf, ng, nr)) => {
                    let gain = r - nr;
                    f = nf;
                    g = ng;
                    r = nr;
                    eta = (eta * 1.5).min(1.0);
                    if gain <= DESCENT_TOL * r {
                        break;
                    }
                }
                None => break,
            }
        }
        (r, f)
    };
    let (r, mut f) = (0..DESCENT_RESTARTS)
        .into_par_iter()
        .map(run)
        .reduce_with(|x, y| if y.0 < x.0 { y } else { x })
        .expect("at least one restart");
    let scale = norm(mu, &f, p);
    if scale > 0.0 {
        f.iter_mut().for_each(|v| *v /= scale);
    }
    let degenerate = r <= DEGENERATE_TOL;
    JpResult {
        value: if degenerate { f64::INFINITY } else { r.powf(-1.0 / p) },
        field: f,
        mode: Mode::LowerBound,
        degenerate,
    }
}

/// `J_p(A) = sup_{supp f ⊆ A} ‖f‖_p / ‖|∇f|‖_p` for the given gradient.
///
/// `p = 1` maximizes over indicator fields (exhaustively up to
/// [`ENUMERATION_LIMIT`] points), `p = 2` is the Dirichlet eigenvalue when the
/// backend has a quadratic kernel, `p = ∞` is a hop count; other cases run
/// a restarted descent and report a lower bound.
pub fn jp_subset(backend: &dyn GradientBackend, a: &Subset, p: f64) -> Result<JpResult> {
    crate::calculus::check_p(p)?;
    if a.is_empty() {
        return Err(Error::InvalidParameter("J_p of an empty set".into()));
    }
    if let Some(&x) = a.members().last() {
        backend.space().check_index(x)?;
    }
    let out = if p == 1.0 {
        j1(backend, a)
    } else if p.is_infinite() {
        jinf(backend, a)
    } else if let Some(r) = (p == 2.0).then(|| j2_quadratic(backend, a)).flatten() {
        r
    } else {
        descent(backend, a, p)
    };
    if out.degenerate {
        log::warn!(
            "J_{p} is infinite on a set of {} points under {}: the scale is below connectivity",
            a.len(),
            backend.label()
        );
    }
    Ok(out)
}
