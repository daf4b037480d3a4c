//! JSON space files.
//!
//! ```json
//! {"name": "p3", "points": 3,
//!  "metric": {"type": "dense", "rows": [[0,1,2],[1,0,1],[2,1,0]]},
//!  "measure": [1, 1, 1]}
//! ```
//!
//! or with `"metric": {"type": "graph", "edges": [[0, 1, 1.0], [1, 2, 1.0]]}`.
//! An optional `"coords"` array carries lattice coordinates for grid spaces.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Metric, MetricMeasureSpace, SpaceOptions};
use crate::error::{Error, Result};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MetricFile {
    Dense { rows: Vec<Vec<f64>> },
    Graph { edges: Vec<(usize, usize, f64)> },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpaceFile {
    pub name: String,
    pub points: usize,
    pub metric: MetricFile,
    pub measure: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coords: Option<Vec<Vec<i64>>>,
}

impl SpaceFile {
    pub fn into_space(self, opts: SpaceOptions) -> Result<MetricMeasureSpace> {
        if self.measure.len() != self.points {
            return Err(Error::InvalidParameter(format!(
                "\"points\" is {} but \"measure\" has {} entries",
                self.points,
                self.measure.len()
            )));
        }
        let space = match self.metric {
            MetricFile::Dense { rows } => {
                if rows.len() != self.points {
                    return Err(Error::InvalidMetric(format!(
                        "dense metric has {} rows for {} points",
                        rows.len(),
                        self.points
                    )));
                }
                MetricMeasureSpace::dense_with(self.name, rows, self.measure, opts)?
            }
            MetricFile::Graph { edges } => MetricMeasureSpace::from_graph_with(
                self.name,
                self.points,
                &edges,
                self.measure,
                opts,
            )?,
        };
        match self.coords {
            Some(c) if c.len() == space.len() => Ok(space.with_coords(c)),
            Some(c) => Err(Error::InvalidParameter(format!(
                "coords has {} entries for {} points",
                c.len(),
                space.len()
            ))),
            None => Ok(space),
        }
    }
}

impl MetricMeasureSpace {
    pub fn to_file(&self) -> SpaceFile {
        let metric = match &self.metric {
            Metric::Dense { n, d } => MetricFile::Dense {
                rows: d.chunks(*n).map(|r| r.to_vec()).collect(),
            },
            Metric::Graph { adj } => MetricFile::Graph {
                edges: adj
                    .iter()
                    .enumerate()
                    .flat_map(|(i, row)| {
                        row.iter()
                            .filter(move |&&(j, _)| j > i)
                            .map(move |&(j, w)| (i, j, w))
                    })
                    .collect(),
            },
        };
        SpaceFile {
            name: self.name.clone(),
            points: self.len(),
            metric,
            measure: self.measure.clone(),
            coords: self.coords.clone(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: SpaceFile = serde_json::from_str(text)?;
        file.into_space(SpaceOptions::default())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_file())?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_dense_and_graph_files() {
        let dense = r#"{"name":"p3","points":3,
            "metric":{"type":"dense","rows":[[0,1,2],[1,0,1],[2,1,0]]},
            "measure":[1,2,1]}"#;
        let s = MetricMeasureSpace::from_json(dense).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.volume(1, 1.0).unwrap(), 4.0);

        let graph = r#"{"name":"p3g","points":3,
            "metric":{"type":"graph","edges":[[0,1,1.0],[1,2,1.0]]},
            "measure":[1,2,1]}"#;
        let g = MetricMeasureSpace::from_json(graph).unwrap();
        assert_eq!(g.dist(0, 2), 2.0);

        let back = MetricMeasureSpace::from_json(&g.to_json().unwrap()).unwrap();
        assert_eq!(back.dist(0, 2), 2.0);
    }

    #[test]
    fn reports_first_violation_with_indices() {
        let bad = r#"{"name":"x","points":2,
            "metric":{"type":"dense","rows":[[0,1],[3,0]]},"measure":[1,1]}"#;
        let err = MetricMeasureSpace::from_json(bad).unwrap_err().to_string();
        assert!(err.contains("d[0][1]"), "{err}");
        let neg = r#"{"name":"x","points":2,
            "metric":{"type":"graph","edges":[[0,1,1]]},"measure":[1,-1]}"#;
        let err = MetricMeasureSpace::from_json(neg).unwrap_err().to_string();
        assert!(err.contains("point 1"), "{err}");
        let disc = r#"{"name":"x","points":3,
            "metric":{"type":"graph","edges":[[0,1,1]]},"measure":[1,1,1]}"#;
        assert!(MetricMeasureSpace::from_json(disc).is_err());
    }
}
