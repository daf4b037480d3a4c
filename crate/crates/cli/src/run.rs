//! Executes an experiment: builds the space and kernel, runs the operations
//! in order and writes artifacts plus a manifest.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use scalecalc::viewpoint::kernel_builders;
use scalecalc::zoo::generate;
use scalecalc::Kernel;
use serde::Serialize;

use crate::config::{ExperimentConfig, KernelSpec, Tolerances};
use crate::error::{CliError, Result};
use crate::ops::{runners, to_json, Artifact, Context, OpCall, Role};

/// Command-line settings that take precedence over the config.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub tolerances: Option<PathBuf>,
}

#[derive(Serialize)]
struct OpRecord {
    id: String,
    op: String,
    function: &'static str,
    claim: &'static str,
    passed: Option<bool>,
    summary: String,
}

#[derive(Serialize)]
struct ArtifactRecord {
    path: String,
    operation: String,
    function: &'static str,
    claim: &'static str,
    role: Role,
}

#[derive(Serialize)]
struct Manifest {
    seed: Option<u64>,
    space: Option<String>,
    kernel: Option<KernelSpec>,
    tolerances: Tolerances,
    passed: bool,
    operations: Vec<OpRecord>,
    artifacts: Vec<ArtifactRecord>,
}

pub struct RunResult {
    pub passed: bool,
    /// Operations whose assertion failed.
    pub failed: Vec<String>,
    /// First data artifact, for printing when there is no output directory.
    pub primary: Option<String>,
}

fn build_kernel(spec: &KernelSpec, ctx: &Context) -> Result<Kernel> {
    let loc = format!("{}/kernel", ctx.origin);
    let space = ctx.space()?.clone();
    match (spec.builder.as_deref(), &spec.file) {
        (Some(name), None) => {
            let h = spec
                .h
                .ok_or_else(|| CliError::schema(format!("{loc}/h"), "a builder needs a scale h"))?;
            let builder = kernel_builders()
                .get(name)
                .map_err(|e| CliError::schema(format!("{loc}/builder"), e.to_string()))?;
            Ok(builder.build(space, h)?)
        }
        (None, Some(file)) => {
            if spec.h.is_some() {
                return Err(CliError::schema(format!("{loc}/h"), "a kernel file carries its own scale"));
            }
            Ok(Kernel::load(space, file)?)
        }
        _ => Err(CliError::schema(loc, "give exactly one of \"builder\" or \"file\"")),
    }
}

/// Runs `cfg`; `origin` prefixes error locations and `base` resolves
/// relative paths.
pub fn execute(mut cfg: ExperimentConfig, origin: &str, base: &Path, over: &Overrides) -> Result<RunResult> {
    let recorded = cfg.clone();
    cfg.resolve_paths(base);
    let registry = runners();
    let seed = over.seed.or(cfg.seed);
    for (i, op) in cfg.operations.iter().enumerate() {
        let runner = registry
            .get(&op.op)
            .map_err(|e| CliError::schema(format!("{origin}/operations/{i}/op"), e.to_string()))?;
        if seed.is_none() && runner.stochastic(&op.params) {
            return Err(CliError::schema(
                format!("{origin}/seed"),
                format!("operation {i} ({}) draws random fields and needs a seed", op.op),
            ));
        }
    }
    let mut tol = Tolerances::default();
    if let Some(t) = &cfg.tolerances {
        tol.overlay(t, &format!("{origin}/tolerances"))?;
    }
    if let Some(path) = &over.tolerances {
        let patch: serde_json::Value = crate::config::read_json(path)?;
        tol.overlay(&patch, &format!("{}#", path.display()))?;
    }

    let mut ctx = Context {
        space: None,
        kernel: None,
        seed,
        tol: tol.clone(),
        base: base.to_path_buf(),
        origin: origin.to_string(),
    };
    if let Some(spec) = &cfg.space {
        ctx.space = Some(Arc::new(generate(spec)?));
    }
    if let Some(spec) = &cfg.kernel {
        ctx.kernel = Some(build_kernel(spec, &ctx)?);
    }

    let out_dir = over.out.clone().or_else(|| cfg.output.as_ref().map(|o| base.join(o)));
    if let Some(dir) = &out_dir {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let mut records = Vec::new();
    let mut files = Vec::new();
    let mut primary = None;
    let mut failed = Vec::new();
    for (i, op) in cfg.operations.iter().enumerate() {
        let runner = registry.get(&op.op)?;
        let id = op.id.clone().unwrap_or_else(|| format!("{i:02}-{}", op.op));
        let call = OpCall {
            index: i,
            params: op.params.clone(),
            location: format!("{origin}/operations/{i}/params"),
        };
        log::info!("running {id}");
        let outcome = runner.run(&ctx, &call)?;
        log::info!("{id}: {}", outcome.summary);
        if outcome.passed == Some(false) {
            failed.push(id.clone());
        }
        for Artifact { name, contents, role } in outcome.artifacts {
            let file = format!("{id}.{name}");
            if primary.is_none() && role == Role::Data && name.ends_with(".json") {
                primary = Some(contents.clone());
            }
            if let Some(dir) = &out_dir {
                let path = dir.join(&file);
                std::fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
            }
            files.push(ArtifactRecord {
                path: file,
                operation: id.clone(),
                function: runner.function(),
                claim: runner.claim(),
                role,
            });
        }
        records.push(OpRecord {
            id,
            op: op.op.clone(),
            function: runner.function(),
            claim: runner.claim(),
            passed: outcome.passed,
            summary: outcome.summary,
        });
    }
    let passed = failed.is_empty();
    if let Some(dir) = &out_dir {
        let manifest = Manifest {
            seed,
            space: ctx.space.as_ref().map(|s| s.name().to_string()),
            kernel: recorded.kernel,
            tolerances: tol,
            passed,
            operations: records,
            artifacts: files,
        };
        let path = dir.join("manifest.json");
        std::fs::write(&path, to_json(&manifest)).map_err(|e| CliError::io(&path, e))?;
    }
    Ok(RunResult { passed, failed, primary })
}
