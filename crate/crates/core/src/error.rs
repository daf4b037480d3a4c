use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point index {index} out of range for space of {len} points")]
    InvalidIndex { index: usize, len: usize },

    #[error("invalid metric: {0}")]
    InvalidMetric(String),

    #[error("invalid measure at point {index}: weight {weight} must be strictly positive")]
    InvalidMeasure { index: usize, weight: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },

    #[error("row {row} is not a probability density: integrates to {sum}")]
    NotStochastic { row: usize, sum: f64 },

    #[error("viewpoint axiom violated at row {row}: {axiom} (offending point {point})")]
    ViewpointViolation {
        row: usize,
        axiom: &'static str,
        point: usize,
    },

    #[error("composition failed at every candidate scale; last witness: {0}")]
    CompositionFailed(String),

    #[error("kernel is not symmetric: |p_{x}({y}) - p_{y}({x})| = {gap}")]
    NotSymmetric { x: usize, y: usize, gap: f64 },

    #[error("spaces differ: {0}")]
    SpaceMismatch(String),

    #[error("field has a negative value {value} at point {index}")]
    NegativeField { index: usize, value: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("rate function is not integrable near zero: {0}")]
    NotIntegrable(String),

    #[error("discretization at scale {h} is disconnected ({components} components); try a larger scale")]
    Disconnected { h: f64, components: usize },

    #[error("map sends point {index} to {target}, outside a target space of {len} points")]
    MapOutOfRange {
        index: usize,
        target: usize,
        len: usize,
    },

    #[error("space too large for the dense metric ({n} > {limit} points)")]
    TooLarge { n: usize, limit: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
