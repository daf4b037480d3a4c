use std::sync::Arc;

use rayon::prelude::*;

use super::{Kernel, Row, Viewpoint};
use crate::error::{Error, Result};
use crate::registry::Registry;
use crate::space::MetricMeasureSpace;

/// Constructs a Markov kernel at scale `h` on a space.
pub trait KernelBuilder: Send + Sync {
    fn build(&self, space: Arc<MetricMeasureSpace>, h: f64) -> Result<Kernel>;
    fn describe(&self) -> &'static str;
}

struct Standard;
struct Lazy;
struct Srw;
struct Identity;

impl KernelBuilder for Standard {
    fn build(&self, space: Arc<MetricMeasureSpace>, h: f64) -> Result<Kernel> {
        standard_kernel(space, h)
    }
    fn describe(&self) -> &'static str {
        "uniform density 1/V(x,h) on the closed ball B(x,h)"
    }
}

impl KernelBuilder for Lazy {
    fn build(&self, space: Arc<MetricMeasureSpace>, h: f64) -> Result<Kernel> {
        lazy_kernel(space, h)
    }
    fn describe(&self) -> &'static str {
        "symmetric lazy walk: 1/max V(·,h) to each other point of B(x,h), rest stays"
    }
}

impl KernelBuilder for Srw {
    fn build(&self, space: Arc<MetricMeasureSpace>, h: f64) -> Result<Kernel> {
        srw_kernel(space, h)
    }
    fn describe(&self) -> &'static str {
        "symmetric walk: 1/max(V(·,h)−μ) to each other point of B(x,h), rest stays"
    }
}

impl KernelBuilder for Identity {
    fn build(&self, space: Arc<MetricMeasureSpace>, h: f64) -> Result<Kernel> {
        identity_kernel(space, h)
    }
    fn describe(&self) -> &'static str {
        "point mass at x"
    }
}

/// Registered kernel builders: `standard`, `lazy`, `srw`, `identity`.
pub fn kernel_builders() -> Registry<dyn KernelBuilder> {
    let mut r: Registry<dyn KernelBuilder> = Registry::new("kernel builder");
    r.register("standard", Arc::new(Standard))
        .register("lazy", Arc::new(Lazy))
        .register("srw", Arc::new(Srw))
        .register("identity", Arc::new(Identity));
    r
}

fn check_scale(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("scale {h} must be positive")))
    }
}

/// `p_x = 1_{B(x,h)} / V(x,h)`.
pub fn standard_kernel(space: Arc<MetricMeasureSpace>, h: f64) -> Result<Kernel> {
    check_scale(h)?;
    let mu = space.measures();
    let rows = (0..space.len())
        .into_par_iter()
        .map(|x| {
            let support = space.ball_indices(x, h);
            let v: f64 = support.iter().map(|&y| mu[y]).sum();
            let density = vec![1.0 / v; support.len()];
            Row { support, density }
        })
        .collect();
    Ok(Kernel::from_parts(space, h, rows))
}

pub fn standard_viewpoint(space: Arc<MetricMeasureSpace>, h: f64) -> Result<Viewpoint> {
    Viewpoint::validate(standard_kernel(space, h)?)
}

/// Symmetric walk that moves to each other point of `B(x,h)` with density
/// `1/norm` and keeps the remaining mass at `x`.
fn max_degree_kernel(space: Arc<MetricMeasureSpace>, h: f64, lazy: bool) -> Result<Kernel> {
    check_scale(h)?;
    let mu = space.measures().to_vec();
    let balls: Vec<Vec<usize>> = (0..space.len())
        .into_par_iter()
        .map(|x| space.ball_indices(x, h))
        .collect();
    let vol = |x: usize| -> f64 { balls[x].iter().map(|&y| mu[y]).sum() };
    let norm = (0..space.len())
        .map(|x| if lazy { vol(x) } else { vol(x) - mu[x] })
        .fold(0.0_f64, f64::max);
    if norm <= 0.0 {
        // No point has a neighbor: the walk never moves.
        return identity_kernel(space, h);
    }
    let rows = balls
        .into_iter()
        .enumerate()
        .map(|(x, support)| {
            let out: f64 = support.iter().filter(|&&y| y != x).map(|&y| mu[y]).sum();
            let stay = ((1.0 - out / norm) / mu[x]).max(0.0);
            let density = support
                .iter()
                .map(|&y| if y == x { stay } else { 1.0 / norm })
                .collect();
            Row { support, density }
        })
        .map(|mut row| {
            // Drop a zero diagonal so the support is exactly where p > 0.
            if let Some(i) = row.density.iter().position(|&p| p == 0.0) {
                row.support.remove(i);
                row.density.remove(i);
            }
            row
        })
        .collect();
    Ok(Kernel::from_parts(space, h, rows))
}

/// Lazy symmetric walk: `p_x(y) = 1/V_max` for `y ≠ x` in `B(x,h)`,
/// `V_max = max_x V(x,h)`; on a regular graph this is uniform on the closed
/// neighborhood.
pub fn lazy_kernel(space: Arc<MetricMeasureSpace>, h: f64) -> Result<Kernel> {
    max_degree_kernel(space, h, true)
}

/// Simple random walk: `p_x(y) = 1/D_max` for `y ≠ x` in `B(x,h)`,
/// `D_max = max_x (V(x,h) − μ(x))`; no holding at points of maximal degree.
pub fn srw_kernel(space: Arc<MetricMeasureSpace>, h: f64) -> Result<Kernel> {
    max_degree_kernel(space, h, false)
}

/// `p_x = δ_x / μ(x)`.
pub fn identity_kernel(space: Arc<MetricMeasureSpace>, h: f64) -> Result<Kernel> {
    check_scale(h)?;
    let rows = (0..space.len())
        .map(|x| Row {
            support: vec![x],
            density: vec![1.0 / space.measure(x)],
        })
        .collect();
    Ok(Kernel::from_parts(space, h, rows))
}
