use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{MetricMeasureSpace, Subset};

/// A real-valued function on the points of a space, with its support cached.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    values: Vec<f64>,
    support: Subset,
}

impl ScalarField {
    pub fn new(space: &MetricMeasureSpace, values: Vec<f64>) -> Result<Self> {
        if values.len() != space.len() {
            return Err(Error::SpaceMismatch(format!(
                "field has {} values for a space of {} points",
                values.len(),
                space.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "field value at point {i} is {}",
                values[i]
            )));
        }
        let mask: Vec<bool> = values.iter().map(|&v| v != 0.0).collect();
        let support = space.subset_from_mask(&mask);
        Ok(ScalarField { values, support })
    }

    pub fn constant(space: &MetricMeasureSpace, k: f64) -> Self {
        Self::new(space, vec![k; space.len()]).expect("finite constant")
    }

    pub fn indicator(space: &MetricMeasureSpace, a: &Subset) -> Self {
        let values = a.mask(space.len()).into_iter().map(|m| if m { 1.0 } else { 0.0 }).collect();
        Self::new(space, values).expect("indicator is finite")
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn support(&self) -> &Subset {
        &self.support
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, x: usize) -> f64 {
        self.values[x]
    }

    /// `‖f‖_p` against the measure of `space`; `p = ∞` gives the max norm.
    pub fn norm(&self, space: &MetricMeasureSpace, p: f64) -> f64 {
        norm(space.measures(), &self.values, p)
    }
}

/// `‖f‖_p` of raw values against the weights `mu`.
pub fn norm(mu: &[f64], f: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        return f.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    }
    let s: f64 = f.iter().zip(mu).map(|(v, w)| v.abs().powf(p) * w).sum();
    s.powf(1.0 / p)
}

/// `⟨f, g⟩_μ`.
pub fn inner(mu: &[f64], f: &[f64], g: &[f64]) -> f64 {
    f.iter().zip(g).zip(mu).map(|((a, b), w)| a * b * w).sum()
}
