//! Encoder/decoder networks, the bound for every variant, training and
//! inference.

pub mod checkpoint;
pub mod elbo;
pub mod latent;
pub mod model;
pub mod network;
pub mod train;
pub mod variant;

pub use checkpoint::{Checkpoint, NamedArray};
pub use elbo::{
    draw_stochastic, elbo_step, evaluate, mixup_batch, mixup_with_weights, ElboPass, ElboReport, LatentPrior,
    StandardNormalPrior, StochasticDraws,
};
pub use latent::{kl_diag_gaussian, kl_diag_pair, reparameterize, GaussianLatent};
pub use model::{mean_squared_error, ModelParams};
pub use network::{ArchConfig, VaeNet};
pub use train::{epoch_log_csv, train, EpochLog, TrainSettings, Trainer};
pub use variant::{Likelihood, Variant, VariantConfig};
