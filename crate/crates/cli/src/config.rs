//! Experiment configuration files.
//!
//! ```json
//! {"space": {"family": "grid", "d": 2, "side": 32, "metric": "l1"},
//!  "kernel": {"builder": "lazy", "h": 1},
//!  "seed": 7,
//!  "operations": [{"op": "decay", "params": {"n_max": 128}}],
//!  "output": "out"}
//! ```

use std::path::{Path, PathBuf};

use scalecalc::zoo::SpaceSpec;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use serde_path_to_error::Segment;

use crate::error::{CliError, Result};

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub space: Option<SpaceSpec>,
    #[serde(default)]
    pub kernel: Option<KernelSpec>,
    pub operations: Vec<Operation>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub tolerances: Option<Value>,
}

/// Either a registered builder at a scale or a kernel file.
#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builder: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Operation {
    pub op: String,
    /// Prefix of the artifact names; defaults to `NN-op`.
    #[serde(default)]
    pub id: Option<String>,
    #[serde(default = "empty_object")]
    pub params: Value,
}

fn empty_object() -> Value {
    Value::Object(Default::default())
}

/// Tolerances of the asserted checks.
#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Relative error of the energy identities.
    pub identity: f64,
    /// Slack of the pointwise gradient sandwich.
    pub sandwich: f64,
    /// Relative slack of the co-area sandwich.
    pub coarea: f64,
    /// Relative discrepancy when re-evaluating profile witnesses.
    pub witness: f64,
    /// Absolute error allowed on an expected log-log slope.
    pub slope: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            identity: scalecalc::calculus::IDENTITY_TOL,
            sandwich: 1e-12,
            coarea: 1e-12,
            witness: 1e-9,
            slope: 0.15,
        }
    }
}

impl Tolerances {
    /// Applies a partial override object; `source` locates errors.
    pub fn overlay(&mut self, patch: &Value, source: &str) -> Result<()> {
        // Validates names and types first so errors point into the patch.
        let _: Tolerances = parse(patch.clone(), source)?;
        let mut base = serde_json::to_value(&*self).expect("tolerances serialize");
        if let (Some(base), Some(patch)) = (base.as_object_mut(), patch.as_object()) {
            for (k, v) in patch {
                base.insert(k.clone(), v.clone());
            }
        }
        *self = parse(base, source)?;
        Ok(())
    }
}

/// Renders a deserialization path as a JSON pointer.
pub fn pointer(path: &serde_path_to_error::Path) -> String {
    let mut s = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => s.push_str(&format!("/{index}")),
            Segment::Map { key } => s.push_str(&format!("/{}", key.replace('~', "~0").replace('/', "~1"))),
            Segment::Enum { variant } => s.push_str(&format!("/{variant}")),
            Segment::Unknown => {}
        }
    }
    s
}

/// Deserializes `value`, reporting the first error as `location` followed
/// by the JSON pointer of the offending node.
pub fn parse<T: DeserializeOwned>(value: Value, location: &str) -> Result<T> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let ptr = pointer(e.path());
        CliError::schema(format!("{location}{ptr}"), e.into_inner().to_string())
    })
}

/// Reads and parses a JSON file; syntax errors carry line and column.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| CliError::schema(path.display().to_string(), e.to_string()))?;
    parse(value, &format!("{}#", path.display()))
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        read_json(path)
    }

    /// Rewrites relative file references against `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        if let Some(SpaceSpec::File { path }) = &mut self.space {
            *path = resolve(base, Path::new(path)).display().to_string();
        }
        if let Some(KernelSpec { file: Some(f), .. }) = &mut self.kernel {
            *f = resolve(base, f);
        }
    }
}

pub fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}
