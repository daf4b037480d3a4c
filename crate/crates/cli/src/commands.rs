use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Subcommand};
use scalecalc::calculus::{coarea, energy, grad_lp, grad_sup, grad_viewpoint, laplacian};
use scalecalc::zoo::{generate, SpaceSpec};
use scalecalc::{Kernel, MetricMeasureSpace};
use serde_json::{json, Map, Value};

use crate::config::{parse, ExperimentConfig, KernelSpec, Operation};
use crate::error::{CliError, Result};
use crate::ops::{load_field, to_json};
use crate::run::{execute, Overrides};
use crate::Global;

#[derive(Subcommand)]
pub enum ZooCmd {
    /// Write a space file.
    Generate(GenerateArgs),
}

#[derive(Args)]
pub struct GenerateArgs {
    /// grid, free_group, regular_tree, heisenberg or random_geometric.
    #[arg(long)]
    family: String,
    #[arg(long)]
    d: Option<usize>,
    /// Side length of a grid.
    #[arg(long = "L", alias = "side")]
    side: Option<usize>,
    /// l1, linf or euclidean.
    #[arg(long)]
    metric: Option<String>,
    #[arg(long)]
    rank: Option<usize>,
    #[arg(long)]
    radius: Option<usize>,
    #[arg(long)]
    degree: Option<usize>,
    #[arg(long)]
    depth: Option<usize>,
    /// Number of random points.
    #[arg(long)]
    count: Option<usize>,
}

#[derive(Args)]
pub struct ViewpointArgs {
    /// Registered kernel builder.
    builder: String,
    #[arg(long)]
    h: f64,
    #[arg(long)]
    space: PathBuf,
}

#[derive(Clone, Copy, Debug, clap::ValueEnum)]
pub enum GradKind {
    Sup,
    Lp,
    Viewpoint,
}

#[derive(Subcommand)]
pub enum CalcCmd {
    /// Pointwise gradient `|∇f|` as a field.
    Grad {
        #[arg(long, value_enum)]
        kind: GradKind,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        /// Scale for `sup` and `lp`.
        #[arg(long)]
        h: Option<f64>,
        #[arg(long)]
        space: PathBuf,
        /// Kernel file for `viewpoint`.
        #[arg(long)]
        vp: Option<PathBuf>,
        #[arg(long)]
        field: PathBuf,
    },
    /// `Δ_p f` of a kernel, as a field.
    Laplacian {
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long)]
        space: PathBuf,
        #[arg(long)]
        vp: PathBuf,
        #[arg(long)]
        field: PathBuf,
    },
    /// Both sides of `⟨(I−P)f,f⟩ = ½‖|∇f|_{P,2}‖₂²`; fails if they differ.
    Energy {
        #[arg(long)]
        space: PathBuf,
        #[arg(long)]
        vp: PathBuf,
        #[arg(long)]
        field: PathBuf,
    },
    /// The co-area sandwich `½T ≤ ∫|∇f|_h ≤ T`; fails if it does not hold.
    Coarea {
        #[arg(long)]
        space: PathBuf,
        #[arg(long)]
        h: f64,
        #[arg(long)]
        field: PathBuf,
    },
}

/// Where a report command gets its kernel.
#[derive(Args, Clone, Debug, Default)]
pub struct KernelArgs {
    /// Kernel file.
    #[arg(long)]
    vp: Option<PathBuf>,
    /// Builder and scale, e.g. `lazy:1`.
    #[arg(long, conflicts_with = "vp")]
    kernel: Option<String>,
}

#[derive(Subcommand)]
pub enum ProfileCmd {
    /// `j_{X,p}` on a grid of volumes (CSV and JSON).
    Jp {
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        /// `sup:h`, `lp:h` or `vp:kernel.json`.
        #[arg(long)]
        backend: String,
        #[arg(long)]
        space: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        volumes: Vec<f64>,
        /// `candidates` or `exact`.
        #[arg(long, default_value = "candidates")]
        strategy: String,
    },
    /// `I`, `I↓` and `I↑` over a subset family.
    Boundary {
        #[arg(long)]
        h: f64,
        #[arg(long)]
        space: PathBuf,
        #[arg(long, default_value = "balls")]
        family: String,
        #[arg(long, value_delimiter = ',', required = true)]
        volumes: Vec<f64>,
    },
    /// Cheeger constant over a subset family; fails below `--at-least`.
    Cheeger {
        #[arg(long)]
        h: f64,
        #[arg(long)]
        space: PathBuf,
        #[arg(long, default_value = "balls")]
        family: String,
        #[arg(long)]
        at_least: Option<f64>,
    },
    /// Sobolev inequality on family indicators; fails above `--c-max`.
    Sobolev {
        #[arg(long, default_value_t = 1.0)]
        p: f64,
        /// Rate function, e.g. `pow:0.5` or `const:1`.
        #[arg(long)]
        phi: String,
        #[arg(long)]
        backend: String,
        #[arg(long)]
        space: PathBuf,
        #[arg(long, value_delimiter = ',')]
        families: Option<Vec<String>>,
        #[arg(long)]
        max_volume: f64,
        #[arg(long)]
        c_max: Option<f64>,
    },
}

#[derive(Subcommand)]
pub enum WalkCmd {
    /// `p^{2n}(x,x)` on a geometric time grid, optionally against `γ`.
    Decay {
        #[arg(long)]
        space: PathBuf,
        #[command(flatten)]
        kernel: KernelArgs,
        #[arg(long)]
        x: Option<usize>,
        #[arg(long, default_value_t = 256)]
        nmax: u64,
        #[arg(long, default_value_t = 8)]
        per_octave: usize,
        #[arg(long)]
        phi: Option<String>,
        #[arg(long)]
        expect_slope: Option<f64>,
    },
    /// The γ-transform of a rate function.
    Gamma {
        #[arg(long)]
        phi: String,
        #[arg(long)]
        tmax: f64,
        #[arg(long, default_value_t = 64)]
        points: usize,
        #[arg(long)]
        v_min: Option<f64>,
    },
    /// Dirichlet spectral radii over growing balls.
    Exhaustion {
        #[arg(long)]
        space: PathBuf,
        #[command(flatten)]
        kernel: KernelArgs,
        #[arg(long)]
        center: Option<usize>,
        #[arg(long, value_delimiter = ',', required = true)]
        radii: Vec<f64>,
    },
}

#[derive(Subcommand)]
pub enum CoarseCmd {
    /// Certify a map between two spaces.
    Certify {
        #[arg(long)]
        src: PathBuf,
        #[arg(long)]
        dst: PathBuf,
        /// JSON array: source point ↦ target point.
        #[arg(long)]
        map: PathBuf,
        #[arg(long = "r", value_delimiter = ',', required = true)]
        radii: Vec<f64>,
    },
    /// Discretize on an `h`-net and certify the centre map.
    Discretize {
        #[arg(long)]
        space: PathBuf,
        #[arg(long)]
        h: f64,
        #[arg(long = "r", value_delimiter = ',')]
        radii: Option<Vec<f64>>,
    },
}

#[derive(Args)]
pub struct AcceptArgs {
    /// Criterion groups, e.g. `1,4,7` (default: all).
    #[arg(long, value_delimiter = ',')]
    only: Option<Vec<String>>,
}

#[derive(Args)]
pub struct RunArgs {
    #[arg(long)]
    config: PathBuf,
}

/// Writes `text` to `--out`, or stdout.
fn emit(text: &str, g: &Global) -> Result<()> {
    match &g.out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::io(path, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_space(path: &Path) -> Result<Arc<MetricMeasureSpace>> {
    Ok(Arc::new(MetricMeasureSpace::load(path)?))
}

fn file_space(path: &Path) -> SpaceSpec {
    SpaceSpec::File {
        path: path.display().to_string(),
    }
}

pub fn zoo(cmd: ZooCmd, g: &Global) -> Result<bool> {
    let ZooCmd::Generate(a) = cmd;
    let mut spec = Map::new();
    spec.insert("family".into(), json!(a.family.replace('-', "_")));
    let mut put = |k: &str, v: Option<Value>| {
        if let Some(v) = v {
            spec.insert(k.into(), v);
        }
    };
    put("d", a.d.map(Value::from));
    put("side", a.side.map(Value::from));
    put("metric", a.metric.map(Value::from));
    put("rank", a.rank.map(Value::from));
    put("radius", a.radius.map(Value::from));
    put("degree", a.degree.map(Value::from));
    put("depth", a.depth.map(Value::from));
    put("count", a.count.map(Value::from));
    if a.family.replace('-', "_") == "random_geometric" {
        let seed = g
            .seed
            .ok_or_else(|| CliError::schema("--seed", "random_geometric needs a seed"))?;
        put("seed", Some(Value::from(seed)));
    }
    let spec: SpaceSpec = parse(Value::Object(spec), "zoo generate")?;
    let space = generate(&spec)?;
    emit(&(space.to_json()? + "\n"), g)?;
    Ok(true)
}

pub fn viewpoint(a: ViewpointArgs, g: &Global) -> Result<bool> {
    let space = load_space(&a.space)?;
    let builder = scalecalc::viewpoint::kernel_builders()
        .get(&a.builder)
        .map_err(|e| CliError::schema("viewpoint <builder>", e.to_string()))?;
    let kernel = builder.build(space, a.h)?;
    match kernel.certify() {
        Ok(c) => log::info!("certificate {c:?}"),
        Err(e) => log::warn!("kernel is not a viewpoint: {e}"),
    }
    emit(&(kernel.to_json()? + "\n"), g)?;
    Ok(true)
}

fn need<T>(v: Option<T>, flag: &str, why: &str) -> Result<T> {
    v.ok_or_else(|| CliError::schema(flag, why.to_string()))
}

pub fn calc(cmd: CalcCmd, g: &Global) -> Result<bool> {
    match cmd {
        CalcCmd::Grad {
            kind,
            p,
            h,
            space,
            vp,
            field,
        } => {
            let space = load_space(&space)?;
            let f = load_field(&space, &field)?;
            let grad = match kind {
                GradKind::Sup => grad_sup(&space, &f, need(h, "--h", "sup gradients need a scale")?)?,
                GradKind::Lp => grad_lp(&space, &f, need(h, "--h", "lp gradients need a scale")?, p)?,
                GradKind::Viewpoint => {
                    let k = Kernel::load(space.clone(), need(vp, "--vp", "viewpoint gradients need a kernel")?)?;
                    grad_viewpoint(&k, &f, p)?
                }
            };
            emit(&to_json(&grad.values), g)?;
            Ok(true)
        }
        CalcCmd::Laplacian { p, space, vp, field } => {
            let space = load_space(&space)?;
            let f = load_field(&space, &field)?;
            let k = Kernel::load(space, vp)?;
            emit(&to_json(&laplacian(&k, &f, p)?.values()), g)?;
            Ok(true)
        }
        CalcCmd::Energy { space, vp, field } => {
            let space = load_space(&space)?;
            let f = load_field(&space, &field)?;
            let k = Kernel::load(space, vp)?;
            let e = energy(&k, &f)?;
            let tol = tolerances(g)?.identity;
            emit(&to_json(&json!({"energy": e, "holds": e.consistent(tol)})), g)?;
            Ok(e.consistent(tol))
        }
        CalcCmd::Coarea { space, h, field } => {
            let space = load_space(&space)?;
            let f = load_field(&space, &field)?;
            let c = coarea(&space, &f, h)?;
            let ok = c.holds(tolerances(g)?.coarea);
            emit(&to_json(&json!({"terms": c, "holds": ok})), g)?;
            Ok(ok)
        }
    }
}

fn tolerances(g: &Global) -> Result<crate::config::Tolerances> {
    let mut tol = crate::config::Tolerances::default();
    if let Some(path) = &g.tol_overrides {
        let patch: Value = crate::config::read_json(path)?;
        tol.overlay(&patch, &format!("{}#", path.display()))?;
    }
    Ok(tol)
}

/// Runs one operation as a config; prints its main JSON artifact when
/// there is no output directory.
fn single(space: Option<SpaceSpec>, kernel: Option<KernelSpec>, op: &str, params: Value, g: &Global) -> Result<bool> {
    let cfg = ExperimentConfig {
        space,
        kernel,
        operations: vec![Operation {
            op: op.into(),
            id: Some(op.into()),
            params,
        }],
        output: None,
        seed: g.seed,
        tolerances: None,
    };
    let over = Overrides {
        seed: g.seed,
        out: g.out.clone(),
        tolerances: g.tol_overrides.clone(),
    };
    let cwd = PathBuf::from(".");
    let result = execute(cfg, "command line#", &cwd, &over)?;
    if g.out.is_none() {
        if let Some(text) = result.primary {
            print!("{text}");
        }
    }
    if !result.passed {
        eprintln!("invariant failed: {}", result.failed.join(", "));
    }
    Ok(result.passed)
}

/// Splits `vp:file` into the backend name and a kernel spec.
fn backend_spec(backend: &str) -> (String, Option<KernelSpec>) {
    match backend.split_once(':') {
        Some(("vp", file)) => (
            "vp".into(),
            Some(KernelSpec {
                file: Some(PathBuf::from(file)),
                ..KernelSpec::default()
            }),
        ),
        _ => (backend.to_string(), None),
    }
}

fn kernel_spec(k: &KernelArgs) -> Result<KernelSpec> {
    if let Some(file) = &k.vp {
        return Ok(KernelSpec {
            file: Some(file.clone()),
            ..KernelSpec::default()
        });
    }
    let text = need(k.kernel.as_ref(), "--vp", "give --vp FILE or --kernel BUILDER:H")?;
    let (name, h) = text
        .split_once(':')
        .ok_or_else(|| CliError::schema("--kernel", format!("expected BUILDER:H, got {text:?}")))?;
    let h: f64 = h
        .parse()
        .map_err(|_| CliError::schema("--kernel", format!("bad scale in {text:?}")))?;
    Ok(KernelSpec {
        builder: Some(name.into()),
        h: Some(h),
        file: None,
    })
}

pub fn profile(cmd: ProfileCmd, g: &Global) -> Result<bool> {
    match cmd {
        ProfileCmd::Jp {
            p,
            backend,
            space,
            volumes,
            strategy,
        } => {
            let (backend, kernel) = backend_spec(&backend);
            let params = json!({"p": p, "backend": backend, "volumes": volumes, "strategy": strategy});
            single(Some(file_space(&space)), kernel, "profile", params, g)
        }
        ProfileCmd::Boundary { h, space, family, volumes } => {
            let params = json!({"h": h, "family": family, "volumes": volumes});
            single(Some(file_space(&space)), None, "boundary", params, g)
        }
        ProfileCmd::Cheeger { h, space, family, at_least } => {
            let params = json!({"h": h, "family": family, "at_least": at_least});
            single(Some(file_space(&space)), None, "cheeger", params, g)
        }
        ProfileCmd::Sobolev {
            p,
            phi,
            backend,
            space,
            families,
            max_volume,
            c_max,
        } => {
            let (backend, kernel) = backend_spec(&backend);
            let params = json!({"p": p, "phi": phi, "backend": backend, "families": families,
                                "max_volume": max_volume, "c_max": c_max});
            single(Some(file_space(&space)), kernel, "sobolev", params, g)
        }
    }
}

pub fn walk(cmd: WalkCmd, g: &Global) -> Result<bool> {
    match cmd {
        WalkCmd::Decay {
            space,
            kernel,
            x,
            nmax,
            per_octave,
            phi,
            expect_slope,
        } => {
            let params = json!({"x": x, "n_max": nmax, "per_octave": per_octave, "phi": phi,
                                "expect_slope": expect_slope});
            single(Some(file_space(&space)), Some(kernel_spec(&kernel)?), "decay", params, g)
        }
        WalkCmd::Gamma { phi, tmax, points, v_min } => {
            let params = json!({"phi": phi, "t_max": tmax, "points": points, "v_min": v_min});
            single(None, None, "gamma", params, g)
        }
        WalkCmd::Exhaustion {
            space,
            kernel,
            center,
            radii,
        } => {
            let params = json!({"center": center, "radii": radii});
            single(Some(file_space(&space)), Some(kernel_spec(&kernel)?), "exhaustion", params, g)
        }
    }
}

pub fn coarse(cmd: CoarseCmd, g: &Global) -> Result<bool> {
    match cmd {
        CoarseCmd::Certify { src, dst, map, radii } => {
            let params = json!({"target": file_space(&dst), "map": map, "radii": radii});
            single(Some(file_space(&src)), None, "certify", params, g)
        }
        CoarseCmd::Discretize { space, h, radii } => {
            let params = json!({"h": h, "radii": radii});
            single(Some(file_space(&space)), None, "discretize", params, g)
        }
    }
}

pub fn accept(a: AcceptArgs, g: &Global) -> Result<bool> {
    single(None, None, "acceptance", json!({"only": a.only}), g)
}

pub fn run_config(a: RunArgs, g: &Global) -> Result<bool> {
    let cfg = ExperimentConfig::load(&a.config)?;
    let base = a.config.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf);
    let over = Overrides {
        seed: g.seed,
        out: g.out.clone(),
        tolerances: g.tol_overrides.clone(),
    };
    if over.out.is_none() && cfg.output.is_none() {
        return Err(CliError::schema(
            format!("{}#/output", a.config.display()),
            "no output directory (set \"output\" or pass --out)",
        ));
    }
    let origin = format!("{}#", a.config.display());
    let result = execute(cfg, &origin, &base, &over)?;
    if !result.passed {
        eprintln!("invariant failed: {}", result.failed.join(", "));
    }
    Ok(result.passed)
}
