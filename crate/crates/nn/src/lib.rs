//! A deliberately small CPU neural-network kit.
//!
//! Layers do not own parameters: every trainable tensor lives in one flat
//! vector described by a [`ParamLayout`], and each layer exposes an explicit
//! `forward`/`backward` pair. This keeps checkpoints a single array and makes
//! finite-difference checks a matter of nudging one index.

pub mod act;
pub mod adam;
pub mod conv;
pub mod dense;
pub mod params;
pub mod real;
pub mod reshape;

pub use adam::{Adam, AdamConfig};
pub use conv::{conv_out_len, Conv2d, ConvTranspose2d, PatchGeom};
pub use dense::Dense;
pub use params::{cast_params, ParamLayout, Slot, TensorInfo};
pub use real::{gemm, Real};
