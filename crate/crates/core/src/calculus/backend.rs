use std::sync::Arc;

use super::{kernel_values, lp_values, sup_values};
use crate::error::{Error, Result};
use crate::registry::Registry;
use crate::space::MetricMeasureSpace;
use crate::viewpoint::{standard_kernel, Kernel};

/// A notion of gradient magnitude `|∇f|` used by the profile machinery.
pub trait GradientBackend: Send + Sync {
    fn label(&self) -> String;

    fn space(&self) -> &MetricMeasureSpace;

    fn space_arc(&self) -> &Arc<MetricMeasureSpace>;

    /// Working scale `h`.
    fn scale(&self) -> f64;

    /// Pointwise `|∇f|` with integrability exponent `p`.
    fn gradient(&self, f: &[f64], p: f64) -> Vec<f64>;

    /// Weights of the `p = 1` gradient at `x`.
    fn stencil(&self, x: usize) -> Stencil;

    /// Whether `y ∈ stencil(x)` exactly when `x ∈ stencil(y)`.
    fn symmetric_stencil(&self) -> bool {
        false
    }

    /// Points `y` entering the `p = ∞` gradient at `x`.
    fn neighbors(&self, x: usize) -> Vec<usize> {
        self.stencil(x).points
    }

    /// Kernel whose quadratic form is `‖|∇f|‖₂²`, when there is one.
    fn quadratic_kernel(&self) -> Option<&Kernel> {
        None
    }

    /// `‖|∇f|‖_p^p` and, if requested, a subgradient in `f`.
    fn p_energy(&self, f: &[f64], p: f64, grad: Option<&mut [f64]>) -> f64;

    fn norm(&self, f: &[f64], p: f64) -> f64 {
        crate::viewpoint::norm(self.space().measures(), &self.gradient(f, p), p)
    }
}

/// Local form of a gradient: `|∇f|(x) = Σ_y w_y |f(y) − f(x)|` at `p = 1`,
/// or `max_y w_y |f(y) − f(x)|` when `sup` is set.
#[derive(Clone, Debug, PartialEq)]
pub struct Stencil {
    pub points: Vec<usize>,
    pub weights: Vec<f64>,
    pub sup: bool,
}

impl Stencil {
    /// `p = 1` gradient at the centre `x` of the stencil.
    pub fn eval(&self, f: &[f64], x: usize) -> f64 {
        let terms = self.points.iter().zip(&self.weights).map(|(&y, w)| w * (f[y] - f[x]).abs());
        if self.sup {
            terms.fold(0.0, f64::max)
        } else {
            terms.sum()
        }
    }
}

/// `|∇f|_h`, the sup over the closed ball (independent of `p`).
pub struct SupBackend {
    space: Arc<MetricMeasureSpace>,
    h: f64,
}

impl SupBackend {
    pub fn new(space: Arc<MetricMeasureSpace>, h: f64) -> Self {
        SupBackend { space, h }
    }
}

impl GradientBackend for SupBackend {
    fn label(&self) -> String {
        format!("sup(h={})", self.h)
    }

    fn space(&self) -> &MetricMeasureSpace {
        &self.space
    }

    fn space_arc(&self) -> &Arc<MetricMeasureSpace> {
        &self.space
    }

    fn scale(&self) -> f64 {
        self.h
    }

    fn gradient(&self, f: &[f64], _p: f64) -> Vec<f64> {
        sup_values(&self.space, f, self.h)
    }

    fn stencil(&self, x: usize) -> Stencil {
        let points = self.space.ball_indices(x, self.h);
        Stencil {
            weights: vec![1.0; points.len()],
            points,
            sup: true,
        }
    }

    fn symmetric_stencil(&self) -> bool {
        true
    }

    fn p_energy(&self, f: &[f64], p: f64, mut grad: Option<&mut [f64]>) -> f64 {
        let mu = self.space.measures();
        let mut total = 0.0;
        for x in 0..f.len() {
            let mut best = (0.0_f64, x);
            for y in self.space.ball_indices(x, self.h) {
                let d = (f[y] - f[x]).abs();
                if d > best.0 {
                    best = (d, y);
                }
            }
            let (d, y) = best;
            total += mu[x] * d.powf(p);
            if let Some(g) = grad.as_deref_mut() {
                if d > 0.0 {
                    let s = mu[x] * p * d.powf(p - 1.0) * (f[y] - f[x]).signum();
                    g[y] += s;
                    g[x] -= s;
                }
            }
        }
        total
    }
}

/// Energy `Σ_x μ(x) Σ_y p_x(y) μ(y) |f(y) − f(x)|^p` of a kernel, with its
/// gradient in `f`.
fn kernel_p_energy(kernel: &Kernel, f: &[f64], p: f64, mut grad: Option<&mut [f64]>) -> f64 {
    let mu = kernel.space().measures();
    let mut total = 0.0;
    for x in 0..f.len() {
        let (support, density) = kernel.row(x);
        for (&y, &w) in support.iter().zip(density) {
            let d = f[y] - f[x];
            if d == 0.0 {
                continue;
            }
            let weight = mu[x] * w * mu[y];
            total += weight * d.abs().powf(p);
            if let Some(g) = grad.as_deref_mut() {
                let s = weight * p * d.abs().powf(p - 1.0) * d.signum();
                g[y] += s;
                g[x] -= s;
            }
        }
    }
    total
}

fn kernel_stencil(kernel: &Kernel, x: usize) -> Stencil {
    let mu = kernel.space().measures();
    let (support, density) = kernel.row(x);
    Stencil {
        points: support.to_vec(),
        weights: support.iter().zip(density).map(|(&y, p)| p * mu[y]).collect(),
        sup: false,
    }
}

/// `|∇f|_{h,p}`, the ball average; identical to the standard viewpoint.
pub struct LpBackend {
    h: f64,
    kernel: Kernel,
}

impl LpBackend {
    pub fn new(space: Arc<MetricMeasureSpace>, h: f64) -> Result<Self> {
        Ok(LpBackend {
            h,
            kernel: standard_kernel(space, h)?,
        })
    }
}

impl GradientBackend for LpBackend {
    fn label(&self) -> String {
        format!("lp(h={})", self.h)
    }

    fn space(&self) -> &MetricMeasureSpace {
        self.kernel.space()
    }

    fn space_arc(&self) -> &Arc<MetricMeasureSpace> {
        self.kernel.space_arc()
    }

    fn scale(&self) -> f64 {
        self.h
    }

    fn gradient(&self, f: &[f64], p: f64) -> Vec<f64> {
        lp_values(self.kernel.space(), f, self.h, p)
    }

    fn stencil(&self, x: usize) -> Stencil {
        kernel_stencil(&self.kernel, x)
    }

    fn symmetric_stencil(&self) -> bool {
        true
    }

    fn quadratic_kernel(&self) -> Option<&Kernel> {
        Some(&self.kernel)
    }

    fn p_energy(&self, f: &[f64], p: f64, grad: Option<&mut [f64]>) -> f64 {
        kernel_p_energy(&self.kernel, f, p, grad)
    }
}

/// `|∇f|_{P,p}` for a given kernel.
pub struct KernelBackend {
    kernel: Kernel,
    name: String,
    symmetric_support: bool,
}

impl KernelBackend {
    pub fn new(kernel: Kernel, name: impl Into<String>) -> Self {
        let symmetric_support = (0..kernel.len()).all(|x| {
            let (support, density) = kernel.row(x);
            support
                .iter()
                .zip(density)
                .all(|(&y, &p)| p == 0.0 || kernel.density(y, x) > 0.0)
        });
        KernelBackend {
            kernel,
            name: name.into(),
            symmetric_support,
        }
    }
}

impl GradientBackend for KernelBackend {
    fn label(&self) -> String {
        format!("vp:{}(h={})", self.name, self.kernel.scale())
    }

    fn space(&self) -> &MetricMeasureSpace {
        self.kernel.space()
    }

    fn space_arc(&self) -> &Arc<MetricMeasureSpace> {
        self.kernel.space_arc()
    }

    fn scale(&self) -> f64 {
        self.kernel.scale()
    }

    fn gradient(&self, f: &[f64], p: f64) -> Vec<f64> {
        kernel_values(&self.kernel, f, p)
    }

    fn stencil(&self, x: usize) -> Stencil {
        kernel_stencil(&self.kernel, x)
    }

    fn symmetric_stencil(&self) -> bool {
        self.symmetric_support
    }

    fn quadratic_kernel(&self) -> Option<&Kernel> {
        Some(&self.kernel)
    }

    fn p_energy(&self, f: &[f64], p: f64, grad: Option<&mut [f64]>) -> f64 {
        kernel_p_energy(&self.kernel, f, p, grad)
    }
}

/// Inputs a backend may draw on.
#[derive(Clone)]
pub struct BackendParams {
    pub space: Arc<MetricMeasureSpace>,
    pub h: f64,
    pub kernel: Option<Kernel>,
}

pub trait BackendFactory: Send + Sync {
    fn make(&self, params: BackendParams) -> Result<Box<dyn GradientBackend>>;
}

struct SupFactory;
struct LpFactory;
struct KernelFactory;

impl BackendFactory for SupFactory {
    fn make(&self, params: BackendParams) -> Result<Box<dyn GradientBackend>> {
        Ok(Box::new(SupBackend::new(params.space, params.h)))
    }
}

impl BackendFactory for LpFactory {
    fn make(&self, params: BackendParams) -> Result<Box<dyn GradientBackend>> {
        Ok(Box::new(LpBackend::new(params.space, params.h)?))
    }
}

impl BackendFactory for KernelFactory {
    fn make(&self, params: BackendParams) -> Result<Box<dyn GradientBackend>> {
        let kernel = params
            .kernel
            .ok_or_else(|| Error::InvalidParameter("the vp backend needs a kernel".into()))?;
        Ok(Box::new(KernelBackend::new(kernel, "kernel")))
    }
}

/// Registered gradient backends: `sup`, `lp`, `vp`.
pub fn gradient_backends() -> Registry<dyn BackendFactory> {
    let mut r: Registry<dyn BackendFactory> = Registry::new("gradient backend");
    r.register("sup", Arc::new(SupFactory))
        .register("lp", Arc::new(LpFactory))
        .register("vp", Arc::new(KernelFactory));
    r
}
