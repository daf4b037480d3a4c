//! Kernel files: `{"h": 1.0, "rows": [{"x": 0, "support": [0, 1], "density": [0.5, 0.5]}]}`.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::Kernel;
use crate::error::{Error, Result};
use crate::space::MetricMeasureSpace;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KernelRowFile {
    pub x: usize,
    pub support: Vec<usize>,
    pub density: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KernelFile {
    pub h: f64,
    pub rows: Vec<KernelRowFile>,
}

impl KernelFile {
    pub fn into_kernel(self, space: Arc<MetricMeasureSpace>) -> Result<Kernel> {
        let n = space.len();
        let mut rows: Vec<Option<(Vec<usize>, Vec<f64>)>> = vec![None; n];
        for r in self.rows {
            space.check_index(r.x)?;
            if rows[r.x].replace((r.support, r.density)).is_some() {
                return Err(Error::InvalidParameter(format!("row {} appears twice", r.x)));
            }
        }
        let rows = rows
            .into_iter()
            .enumerate()
            .map(|(x, r)| r.ok_or_else(|| Error::InvalidParameter(format!("row {x} is missing"))))
            .collect::<Result<Vec<_>>>()?;
        Kernel::from_rows(space, self.h, rows)
    }
}

impl Kernel {
    pub fn to_file(&self) -> KernelFile {
        KernelFile {
            h: self.scale(),
            rows: (0..self.len())
                .map(|x| {
                    let (support, density) = self.row(x);
                    KernelRowFile {
                        x,
                        support: support.to_vec(),
                        density: density.to_vec(),
                    }
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_file())?)
    }

    pub fn from_json(space: Arc<MetricMeasureSpace>, text: &str) -> Result<Self> {
        let file: KernelFile = serde_json::from_str(text)?;
        file.into_kernel(space)
    }

    pub fn load(space: Arc<MetricMeasureSpace>, path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(space, &std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}
