//! Calculus at a fixed scale on finite metric measure spaces.

pub mod acceptance;
pub mod calculus;
pub mod coarse;
pub mod error;
pub mod linalg;
pub mod profiles;
pub mod randomwalk;
pub mod registry;
pub mod space;
pub mod stats;
pub mod viewpoint;
pub mod zoo;

pub use error::{Error, Result};
pub use space::{MetricMeasureSpace, SpaceOptions, Subset};
pub use viewpoint::{Kernel, ScalarField, Viewpoint};
