use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;

use super::family::{collect_subsets, default_families, AllSubsets, SubsetFamily, SubsetSpec};
use super::jp::{indicator_ratio_cached, jp_subset, jp_value, MaskEvaluator, StencilCache};
use super::{Mode, ProfileCurve, Quantity, Witness, ENUMERATION_LIMIT};
use crate::calculus::GradientBackend;
use crate::error::{Error, Result};
use crate::registry::Registry;
use crate::space::Subset;

/// Candidate sets scored by `J_p`.
pub struct Scored {
    pub volume: f64,
    pub value: f64,
    pub subset: Subset,
}

/// How the supremum over subsets in `j_{X,p}` is searched.
pub trait ProfileStrategy: Send + Sync {
    fn name(&self) -> String;

    /// Sets with `μ(A) ≤ max_volume` and their `J_p`, plus the mode of the
    /// resulting supremum.
    fn score(&self, backend: &dyn GradientBackend, p: f64, max_volume: f64) -> Result<(Vec<Scored>, Mode)>;
}

/// Every subset of a space of at most 18 points.
pub struct ExactStrategy;

/// The documented candidate families (balls, boxes on grids, spectral sweeps).
pub struct CandidateStrategy;

/// `J_p` of each set; for `p = 1` the indicator quotient, which has the same
/// supremum over all sets of measure at most `v`.
fn score_sets(backend: &dyn GradientBackend, p: f64, sets: Vec<Subset>) -> Result<(Vec<Scored>, Mode)> {
    let cache = (p == 1.0).then(|| StencilCache::new(backend));
    let mu = backend.space().measures();
    let scored: Vec<(Scored, Mode)> = sets
        .into_par_iter()
        .map(|subset| {
            let (value, mode) = if let Some(cache) = &cache {
                (indicator_ratio_cached(cache, mu, &subset), Mode::Exact)
            } else {
                jp_value(backend, &subset, p)?
            };
            Ok((
                Scored {
                    volume: subset.measure(),
                    value,
                    subset,
                },
                mode,
            ))
        })
        .collect::<Result<_>>()?;
    let mode = scored.iter().fold(Mode::Exact, |m, (_, s)| m.meet(*s));
    Ok((scored.into_iter().map(|(s, _)| s).collect(), mode))
}

impl ProfileStrategy for ExactStrategy {
    fn name(&self) -> String {
        "exact".into()
    }

    fn score(&self, backend: &dyn GradientBackend, p: f64, max_volume: f64) -> Result<(Vec<Scored>, Mode)> {
        let space = backend.space();
        let n = space.len();
        if n > ENUMERATION_LIMIT {
            return Err(Error::TooLarge {
                n,
                limit: ENUMERATION_LIMIT,
            });
        }
        let masks: Vec<u64> = (1..1u64 << n).collect();
        if p == 1.0 {
            let everything: Vec<usize> = (0..n).collect();
            let eval = MaskEvaluator::new(backend, &everything);
            let scored = masks
                .into_par_iter()
                .filter_map(|m| {
                    let volume = eval.volume(m);
                    (volume <= max_volume * (1.0 + 1e-12)).then(|| {
                        let g = eval.gradient_l1(m);
                        let subset = SubsetSpec::Mask(m).materialize(space).expect("mask within space");
                        let value = if g <= volume * 1e-14 { f64::INFINITY } else { volume / g };
                        Scored { volume, value, subset }
                    })
                })
                .collect();
            return Ok((scored, Mode::Exact));
        }
        let sets = collect_subsets(&[&AllSubsets], backend.space_arc(), backend.scale(), max_volume)?;
        score_sets(backend, p, sets)
    }
}

impl ProfileStrategy for CandidateStrategy {
    fn name(&self) -> String {
        "candidates".into()
    }

    fn score(&self, backend: &dyn GradientBackend, p: f64, max_volume: f64) -> Result<(Vec<Scored>, Mode)> {
        let space = backend.space_arc();
        let families = default_families(space);
        let refs: Vec<&dyn SubsetFamily> = families.iter().map(|f| f.as_ref()).collect();
        let sets = collect_subsets(&refs, space, backend.scale(), max_volume)?;
        let (scored, _) = score_sets(backend, p, sets)?;
        Ok((scored, Mode::LowerBound))
    }
}

/// Registered strategies: `exact`, `candidates`.
pub fn profile_strategies() -> Registry<dyn ProfileStrategy> {
    let mut r: Registry<dyn ProfileStrategy> = Registry::new("profile strategy");
    r.register("exact", Arc::new(ExactStrategy))
        .register("candidates", Arc::new(CandidateStrategy));
    r
}

fn witness_for(backend: &dyn GradientBackend, p: f64, subset: &Subset) -> Result<Witness> {
    let field = if p == 1.0 {
        vec![1.0; subset.len()]
    } else {
        let r = jp_subset(backend, subset, p)?;
        subset.members().iter().map(|&x| r.field[x]).collect()
    };
    Ok(Witness {
        subset: subset.members().to_vec(),
        field,
    })
}

/// `j_{X,p}(v) = sup_{μ(A) ≤ v} J_p(A)` on a grid of masses.
pub fn isoperimetric_profile(
    backend: &dyn GradientBackend,
    p: f64,
    volumes: &[f64],
    strategy: &dyn ProfileStrategy,
) -> Result<ProfileCurve> {
    crate::calculus::check_p(p)?;
    let mut args = volumes.to_vec();
    args.sort_by(f64::total_cmp);
    let vmax = args.last().copied().unwrap_or(0.0);
    let (mut scored, mode) = strategy.score(backend, p, vmax)?;
    scored.sort_by(|a, b| a.volume.total_cmp(&b.volume).then_with(|| a.subset.members().cmp(b.subset.members())));
    let mut values = Vec::with_capacity(args.len());
    let mut witnesses = Vec::with_capacity(args.len());
    let mut best: Option<usize> = None;
    let mut next = 0;
    for &v in &args {
        while next < scored.len() && scored[next].volume <= v * (1.0 + 1e-12) {
            if best.is_none_or(|b| scored[next].value > scored[b].value) {
                best = Some(next);
            }
            next += 1;
        }
        match best {
            Some(b) => {
                values.push(scored[b].value);
                witnesses.push(Some(witness_for(backend, p, &scored[b].subset)?));
            }
            None => {
                values.push(0.0);
                witnesses.push(None);
            }
        }
    }
    Ok(ProfileCurve {
        label: format!("j_p[{}; {}; p={p}]", strategy.name(), backend.label()),
        quantity: Quantity::Isoperimetric { p },
        mode,
        args,
        values,
        witnesses,
    })
}

/// `J^b_{X,p}(t) = max_x J_p(B(x,t))`, over all centres or the given ones
/// (the latter reported as a lower bound).
pub fn profile_in_balls(
    backend: &dyn GradientBackend,
    p: f64,
    radii: &[f64],
    centers: Option<&[usize]>,
) -> Result<ProfileCurve> {
    crate::calculus::check_p(p)?;
    let space = backend.space();
    if let Some(r) = radii.iter().find(|r| !(**r > 0.0)) {
        return Err(Error::InvalidParameter(format!("ball radius {r} must be positive")));
    }
    let all: Vec<usize>;
    let centers = match centers {
        Some(c) => {
            for &x in c {
                space.check_index(x)?;
            }
            c
        }
        None => {
            all = (0..space.len()).collect();
            &all
        }
    };
    if centers.is_empty() {
        return Err(Error::InvalidParameter("no ball centres".into()));
    }
    let restricted = centers.len() < space.len();
    let mut args = radii.to_vec();
    args.sort_by(f64::total_cmp);
    let mut cache: HashMap<Vec<usize>, (f64, Mode, Vec<f64>)> = HashMap::new();
    let mut mode = if restricted { Mode::LowerBound } else { Mode::Exact };
    let mut values = Vec::new();
    let mut witnesses = Vec::new();
    for &t in &args {
        let balls: Vec<Subset> = centers.par_iter().map(|&x| space.ball(x, t)).collect::<Result<_>>()?;
        let mut fresh: Vec<&Subset> = balls.iter().filter(|b| !cache.contains_key(b.members())).collect();
        fresh.sort_by(|a, b| a.members().cmp(b.members()));
        fresh.dedup_by(|a, b| a.members() == b.members());
        let computed: Vec<(Vec<usize>, (f64, Mode, Vec<f64>))> = fresh
            .par_iter()
            .map(|b| {
                let r = jp_subset(backend, b, p)?;
                let field = b.members().iter().map(|&x| r.field[x]).collect();
                Ok((b.members().to_vec(), (r.value, r.mode, field)))
            })
            .collect::<Result<_>>()?;
        cache.extend(computed);
        let (ball, (value, m, field)) = balls
            .iter()
            .map(|b| (b, &cache[b.members()]))
            .fold(None, |acc: Option<(&Subset, &(f64, Mode, Vec<f64>))>, c| match acc {
                Some(a) if a.1 .0 >= c.1 .0 => Some(a),
                _ => Some(c),
            })
            .expect("at least one centre");
        mode = mode.meet(*m);
        values.push(*value);
        witnesses.push(Some(Witness {
            subset: ball.members().to_vec(),
            field: field.clone(),
        }));
    }
    Ok(ProfileCurve {
        label: format!("J^b_p[{}; p={p}]", backend.label()),
        quantity: Quantity::InBalls { p },
        mode,
        args,
        values,
        witnesses,
    })
}
