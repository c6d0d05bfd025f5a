//! Experiment orchestration: configuration, datasets, training runs, the
//! feature-inspection and clustering protocols, interpolation strips and
//! reports.
//!
//! An output directory holds one configuration (`config.toml`). Each
//! variant and seed gets `runs/<variant>/seed<i>/` with its checkpoint,
//! training log, metric dumps and pictures; summary tables and run records
//! sit at the top level. Every random stream is seeded by [`derive_seed`]
//! from the root seed, the variant, the seed index and a purpose string.

mod cluster;
mod config;
mod data;
mod feature;
mod interp;
mod png;
mod record;
mod report;

pub use cluster::{cluster_table, nmi_json, run_clustering, train_or_load_cluster, CLUSTER_RECORD, CLUSTER_STEM, CLUSTER_TABLE, NMI_JSON};
pub use config::{
    derive_seed, sha256_hex, DatasetKind, DatasetSpec, ExperimentConfig, ExperimentKind, FeatureSettings,
    InterpolationSettings, PairSelector,
};
pub use data::{colored_mnist, prepare_data, two_factor, ColoredMnistData, TwoFactorData, MNIST_TRAIN_POOL, SINGLE_COLOR_TESTS};
pub use feature::{
    fpm_table, run_feature_inspection, train_classifiers, train_models, train_or_load, FEATURE_RECORD, FPM_TABLE,
    MODEL_STEM,
};
pub use interp::{run_interpolation, select_pair, InterpolationStrip};
pub use png::{tile, write_grid, write_png};
pub use record::{claim_out_dir, median, RunEntry, RunMetrics, RunRecord, CONFIG_FILE};
pub use report::{report, sample_grids};

use std::path::{Path, PathBuf};

use crate::error::Error;
use crate::models::Variant;

pub fn run_dir(cfg: &ExperimentConfig, variant: Variant, seed_index: u64) -> PathBuf {
    cfg.out_dir.join("runs").join(variant.name()).join(format!("seed{seed_index}"))
}

fn run_error(variant: Variant, seed_index: u64, e: Error) -> Error {
    Error::Run {
        variant: variant.to_string(),
        seed_index,
        source: Box::new(e),
    }
}

/// `path` relative to `base` when it lies below it.
fn rel(base: &Path, path: &Path) -> PathBuf {
    path.strip_prefix(base).unwrap_or(path).to_path_buf()
}
