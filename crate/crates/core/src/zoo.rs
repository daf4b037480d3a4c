//! Deterministic benchmark spaces.
//!
//! Every generator uses the unit counting measure. Lattice boxes carry the
//! requested metric, trees and group balls carry their word (graph) metric,
//! and random geometric clouds are `n` points drawn uniformly from the unit
//! square with a SplitMix64 stream (`x` then `y` for each point, 53-bit
//! mantissa floats) under the Euclidean metric.
//!
//! Generating sets: the free group of rank `k` uses `{a₁±, …, a_k±}`; the
//! discrete Heisenberg group uses `{x±, y±}` with
//! `(a, b, c)·(a', b', c') = (a + a', b + b', c + c' + a b')`.

use std::collections::{HashMap, VecDeque};

use rand::Rng;
use rand::SeedableRng;
use rand_xoshiro::SplitMix64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{MetricMeasureSpace, SpaceOptions};

/// Hard cap on generated point counts.
pub const MAX_POINTS: usize = 1 << 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridMetric {
    L1,
    Linf,
    #[serde(alias = "l2")]
    Euclidean,
}

impl std::str::FromStr for GridMetric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l1" => Ok(GridMetric::L1),
            "linf" => Ok(GridMetric::Linf),
            "euclidean" | "l2" => Ok(GridMetric::Euclidean),
            other => Err(Error::Unknown {
                kind: "grid metric",
                name: other.into(),
            }),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpaceSpec {
    Grid {
        d: usize,
        side: usize,
        metric: GridMetric,
    },
    FreeGroup {
        rank: usize,
        radius: usize,
    },
    RegularTree {
        degree: usize,
        depth: usize,
    },
    Heisenberg {
        radius: usize,
    },
    RandomGeometric {
        count: usize,
        seed: u64,
    },
    File {
        path: String,
    },
}

pub fn generate(spec: &SpaceSpec) -> Result<MetricMeasureSpace> {
    generate_with(spec, SpaceOptions::default())
}

pub fn generate_with(spec: &SpaceSpec, opts: SpaceOptions) -> Result<MetricMeasureSpace> {
    match *spec {
        SpaceSpec::Grid { d, side, metric } => grid(d, side, metric, opts),
        SpaceSpec::FreeGroup { rank, radius } => free_group(rank, radius, opts),
        SpaceSpec::RegularTree { degree, depth } => regular_tree(degree, depth, opts),
        SpaceSpec::Heisenberg { radius } => heisenberg(radius, opts),
        SpaceSpec::RandomGeometric { count, seed } => random_geometric(count, seed, opts),
        SpaceSpec::File { ref path } => MetricMeasureSpace::load(path),
    }
}

fn bad(msg: String) -> Error {
    Error::InvalidParameter(msg)
}

/// Lattice box `{0..side}^d`, points in row-major order.
pub fn grid(d: usize, side: usize, metric: GridMetric, opts: SpaceOptions) -> Result<MetricMeasureSpace> {
    if !(1..=4).contains(&d) {
        return Err(bad(format!("grid dimension {d} outside 1..=4")));
    }
    if side == 0 {
        return Err(bad("grid side must be positive".into()));
    }
    let n = side
        .checked_pow(d as u32)
        .filter(|&n| n <= MAX_POINTS)
        .ok_or_else(|| bad(format!("grid {side}^{d} exceeds {MAX_POINTS} points")))?;
    let coords: Vec<Vec<i64>> = (0..n)
        .map(|mut i| {
            let mut c = vec![0i64; d];
            for k in (0..d).rev() {
                c[k] = (i % side) as i64;
                i /= side;
            }
            c
        })
        .collect();
    let index = |c: &[i64]| -> usize { c.iter().fold(0usize, |acc, &v| acc * side + v as usize) };
    let name = format!("grid(d={d},L={side},{metric:?})");
    let space = match metric {
        GridMetric::Euclidean => {
            if n > opts.dense_limit {
                return Err(Error::TooLarge {
                    n,
                    limit: opts.dense_limit,
                });
            }
            let rows = coords
                .iter()
                .map(|a| {
                    coords
                        .iter()
                        .map(|b| {
                            a.iter()
                                .zip(b)
                                .map(|(p, q)| ((p - q) as f64).powi(2))
                                .sum::<f64>()
                                .sqrt()
                        })
                        .collect()
                })
                .collect();
            MetricMeasureSpace::dense_with(name, rows, vec![1.0; n], opts)?
        }
        GridMetric::L1 | GridMetric::Linf => {
            let offsets: Vec<Vec<i64>> = if metric == GridMetric::L1 {
                (0..d)
                    .map(|k| {
                        let mut o = vec![0; d];
                        o[k] = 1;
                        o
                    })
                    .collect()
            } else {
                // Half of the king moves: lexicographically positive offsets.
                (0..3usize.pow(d as u32))
                    .map(|mut t| {
                        let mut o = vec![0i64; d];
                        for v in o.iter_mut() {
                            *v = (t % 3) as i64 - 1;
                            t /= 3;
                        }
                        o
                    })
                    .filter(|o| o.iter().find(|&&v| v != 0).is_some_and(|&v| v > 0))
                    .collect()
            };
            let mut edges = Vec::new();
            for c in &coords {
                for o in &offsets {
                    let t: Vec<i64> = c.iter().zip(o).map(|(a, b)| a + b).collect();
                    if t.iter().all(|&v| (0..side as i64).contains(&v)) {
                        edges.push((index(c), index(&t), 1.0));
                    }
                }
            }
            MetricMeasureSpace::from_graph_with(name, n, &edges, vec![1.0; n], opts)?
        }
    };
    Ok(space.with_coords(coords))
}

/// Ball of radius `radius` in the Cayley graph of the free group of rank
/// `rank`; vertices in breadth-first order, root first.
pub fn free_group(rank: usize, radius: usize, opts: SpaceOptions) -> Result<MetricMeasureSpace> {
    if rank == 0 {
        return Err(bad("free group rank must be positive".into()));
    }
    let space = tree_ball(2 * rank, 2 * rank - 1, radius, opts)?;
    Ok(space.with_name(format!("free_group(rank={rank},R={radius})")))
}

/// Rooted tree in which the root has `degree` children and every other
/// vertex `degree − 1`, truncated at `depth`.
pub fn regular_tree(degree: usize, depth: usize, opts: SpaceOptions) -> Result<MetricMeasureSpace> {
    if degree < 2 {
        return Err(bad(format!("tree degree {degree} must be at least 2")));
    }
    let space = tree_ball(degree, degree - 1, depth, opts)?;
    Ok(space.with_name(format!("regular_tree(q={degree},depth={depth})")))
}

fn tree_ball(root_children: usize, children: usize, depth: usize, opts: SpaceOptions) -> Result<MetricMeasureSpace> {
    let mut count = 1usize;
    let mut level = 1usize;
    for k in 0..depth {
        level = if k == 0 { root_children } else { level * children };
        count += level;
        if count > MAX_POINTS {
            return Err(bad(format!("tree ball exceeds {MAX_POINTS} points")));
        }
    }
    let mut edges = Vec::with_capacity(count.saturating_sub(1));
    let mut next = 1usize;
    let mut frontier = vec![0usize];
    for k in 0..depth {
        let fan = if k == 0 { root_children } else { children };
        let mut new_frontier = Vec::with_capacity(frontier.len() * fan);
        for &p in &frontier {
            for _ in 0..fan {
                edges.push((p, next, 1.0));
                new_frontier.push(next);
                next += 1;
            }
        }
        frontier = new_frontier;
    }
    debug_assert_eq!(next, count);
    MetricMeasureSpace::from_graph_with("tree", count, &edges, vec![1.0; count], opts)
}

type Heis = (i64, i64, i64);

fn heis_mul(g: Heis, h: Heis) -> Heis {
    (g.0 + h.0, g.1 + h.1, g.2 + h.2 + g.0 * h.1)
}

fn heis_inv(g: Heis) -> Heis {
    (-g.0, -g.1, g.0 * g.1 - g.2)
}

/// Word-length table of the Heisenberg group up to `radius`.
fn heisenberg_lengths(radius: usize) -> (Vec<Heis>, HashMap<Heis, usize>) {
    let gens: [Heis; 4] = [(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0)];
    let mut len = HashMap::new();
    let mut order = vec![(0, 0, 0)];
    len.insert((0, 0, 0), 0usize);
    let mut queue = VecDeque::from([(0i64, 0i64, 0i64)]);
    while let Some(g) = queue.pop_front() {
        let l = len[&g];
        if l == radius {
            continue;
        }
        for s in gens {
            let h = heis_mul(g, s);
            if let std::collections::hash_map::Entry::Vacant(e) = len.entry(h) {
                e.insert(l + 1);
                order.push(h);
                queue.push_back(h);
            }
        }
    }
    (order, len)
}

/// Ball of radius `radius` in the discrete Heisenberg group with its word
/// metric `d(g, h) = |g⁻¹h|` (lengths read from a table of radius `2·radius`).
pub fn heisenberg(radius: usize, opts: SpaceOptions) -> Result<MetricMeasureSpace> {
    if radius > 5 {
        return Err(bad(format!("Heisenberg radius {radius} exceeds 5")));
    }
    let (all, len) = heisenberg_lengths(2 * radius);
    let ball: Vec<Heis> = all.into_iter().filter(|g| len[g] <= radius).collect();
    let n = ball.len();
    if n > opts.dense_limit {
        return Err(Error::TooLarge {
            n,
            limit: opts.dense_limit,
        });
    }
    let rows = ball
        .iter()
        .map(|&g| {
            let gi = heis_inv(g);
            ball.iter().map(|&h| len[&heis_mul(gi, h)] as f64).collect()
        })
        .collect();
    let space = MetricMeasureSpace::dense_with(format!("heisenberg(R={radius})"), rows, vec![1.0; n], opts)?;
    Ok(space.with_coords(ball.iter().map(|g| vec![g.0, g.1, g.2]).collect()))
}

/// `count` uniform points in the unit square under the Euclidean metric.
pub fn random_geometric(count: usize, seed: u64, opts: SpaceOptions) -> Result<MetricMeasureSpace> {
    if count == 0 {
        return Err(bad("random geometric count must be positive".into()));
    }
    if count > opts.dense_limit {
        return Err(Error::TooLarge {
            n: count,
            limit: opts.dense_limit,
        });
    }
    let mut rng = SplitMix64::seed_from_u64(seed);
    let pts: Vec<(f64, f64)> = (0..count)
        .map(|_| {
            let x: f64 = rng.random();
            let y: f64 = rng.random();
            (x, y)
        })
        .collect();
    let rows = pts
        .iter()
        .map(|a| pts.iter().map(|b| ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()).collect())
        .collect();
    MetricMeasureSpace::dense_with(
        format!("random_geometric(n={count},seed={seed})"),
        rows,
        vec![1.0; count],
        opts,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bfs_depths(space: &MetricMeasureSpace, root: usize) -> Vec<usize> {
        // Independent BFS over unit-distance neighbors.
        let n = space.len();
        let mut depth = vec![usize::MAX; n];
        depth[root] = 0;
        let mut q = VecDeque::from([root]);
        while let Some(x) = q.pop_front() {
            for y in 0..n {
                if depth[y] == usize::MAX && space.dist(x, y) == 1.0 {
                    depth[y] = depth[x] + 1;
                    q.push_back(y);
                }
            }
        }
        depth
    }

    #[test]
    fn path_from_grid() {
        let p9 = generate(&SpaceSpec::Grid {
            d: 1,
            side: 9,
            metric: GridMetric::L1,
        })
        .unwrap();
        assert_eq!(p9.len(), 9);
        assert_eq!(p9.dist(0, 8), 8.0);
        assert_eq!(p9.ball(4, 1.0).unwrap().members(), &[3, 4, 5]);
    }

    #[test]
    fn grid_volumes_match_enumeration() {
        let g = grid(2, 11, GridMetric::Linf, SpaceOptions::default()).unwrap();
        let center = 5 * 11 + 5;
        for r in 0..=5 {
            assert_eq!(g.volume(center, r as f64).unwrap(), ((2 * r + 1) * (2 * r + 1)) as f64);
        }
        let l1 = grid(2, 11, GridMetric::L1, SpaceOptions::default()).unwrap();
        assert_eq!(l1.volume(center, 1.0).unwrap(), 5.0);
    }

    #[test]
    fn tree_and_group_counts() {
        let t = regular_tree(4, 2, SpaceOptions::default()).unwrap();
        assert_eq!(t.len(), 17);
        for r in 0..=4 {
            let f = free_group(2, r, SpaceOptions::default()).unwrap();
            assert_eq!(f.len(), 2 * 3usize.pow(r as u32) - 1);
        }
        let f3 = free_group(2, 3, SpaceOptions::default()).unwrap();
        assert_eq!(f3.len(), 53);
        let depths = bfs_depths(&f3, 0);
        for y in 0..f3.len() {
            assert_eq!(f3.dist(0, y), depths[y] as f64);
        }
    }

    #[test]
    fn heisenberg_word_metric() {
        let h = heisenberg(2, SpaceOptions::default()).unwrap();
        // Sphere sizes of radius 0, 1 in the Heisenberg group: 1, 4.
        assert_eq!(h.volume(0, 1.0).unwrap(), 5.0);
        let depths = bfs_depths(&h, 0);
        for y in 0..h.len() {
            assert_eq!(h.dist(0, y), depths[y] as f64);
        }
        // [x, y] = x y x⁻¹ y⁻¹ = (0, 0, 1) has length 4.
        let (_, len) = heisenberg_lengths(4);
        assert_eq!(len[&(0, 0, 1)], 4);
    }

    #[test]
    fn random_geometric_is_reproducible() {
        let a = random_geometric(40, 7, SpaceOptions::default()).unwrap();
        let b = random_geometric(40, 7, SpaceOptions::default()).unwrap();
        let c = random_geometric(40, 8, SpaceOptions::default()).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        assert_ne!(a.to_json().unwrap(), c.to_json().unwrap());
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(grid(0, 4, GridMetric::L1, SpaceOptions::default()).is_err());
        assert!(regular_tree(1, 3, SpaceOptions::default()).is_err());
        assert!("l7".parse::<GridMetric>().is_err());
    }
}
