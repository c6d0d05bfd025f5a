//! Jigsaw-permutation VAEs and their baselines, the feature presence
//! metric, and a Gaussian-mixture clustering backbone, plus the experiment
//! harness that ties them together.

pub mod clustering;
pub mod datasets;
pub mod error;
pub mod harness;
pub mod image;
pub mod io;
pub mod metrics;
pub mod models;
pub mod permutation;

pub use error::{Error, Result};
pub use image::{Geometry, ImageBatch};
