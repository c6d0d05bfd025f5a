//! Dataset construction for experiments, read from the cache directory when
//! `prepare-data` has written it and built in memory otherwise.

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{DatasetKind, ExperimentConfig};
use crate::datasets::{
    build_colored_mnist, build_single_color_test, build_two_factor_synthetic, bundled_mnist, read_cache, write_cache,
    CacheMeta, ColorPalette, ImbalanceConfig, LabeledImageSet,
};
use crate::error::Result;

/// Bundled digits reserved for training; the rest are test digits.
pub const MNIST_TRAIN_POOL: usize = 8000;
pub const SINGLE_COLOR_TESTS: usize = 10;

pub struct ColoredMnistData {
    pub train: LabeledImageSet,
    pub test: LabeledImageSet,
    /// One test set per palette color, indexed by color.
    pub single_color: Vec<LabeledImageSet>,
}

pub struct TwoFactorData {
    pub train: LabeledImageSet,
    pub test: LabeledImageSet,
    /// Balanced images for fitting presence classifiers.
    pub classifier: LabeledImageSet,
}

struct Entry {
    stem: String,
    set: LabeledImageSet,
    meta: CacheMeta,
}

fn cached_or(dir: &Path, stem: &str, build: impl FnOnce() -> Result<LabeledImageSet>) -> Result<LabeledImageSet> {
    if dir.join(format!("{stem}.manifest")).exists() {
        Ok(read_cache(dir, stem)?.0)
    } else {
        build()
    }
}

fn colored_entries(cfg: &ExperimentConfig) -> Result<Vec<Entry>> {
    let palette = ColorPalette::default();
    let gray = bundled_mnist()?;
    let (pool_train, pool_test) = gray.split_at(MNIST_TRAIN_POOL);
    let (gray_train, _) = pool_train.split_at(cfg.dataset.train_count);
    let (gray_test, _) = pool_test.split_at(cfg.dataset.test_count);
    let meta = |description: String| CacheMeta {
        description,
        seed: 0,
        palette: Some(palette.clone()),
    };
    let mut out = vec![
        Entry {
            stem: "colored_mnist_train".into(),
            set: build_colored_mnist(&gray_train, &palette)?,
            meta: meta("colored MNIST, multi-color train".into()),
        },
        Entry {
            stem: "colored_mnist_test".into(),
            set: build_colored_mnist(&gray_test, &palette)?,
            meta: meta("colored MNIST, multi-color test".into()),
        },
    ];
    for c in 0..SINGLE_COLOR_TESTS as u32 {
        out.push(Entry {
            stem: format!("single_color_{c}"),
            set: build_single_color_test(&gray_test, &palette, c)?,
            meta: meta(format!("colored MNIST test, every digit in color {c}")),
        });
    }
    Ok(out)
}

fn two_factor_seed(cfg: &ExperimentConfig, seed_index: u64, purpose: &str) -> u64 {
    cfg.seed_for("dataset", seed_index, purpose)
}

fn two_factor_entry(cfg: &ExperimentConfig, seed_index: u64, purpose: &str) -> Result<Entry> {
    let d = &cfg.dataset;
    let (config, n) = match purpose {
        "train" => (d.imbalance()?, d.train_count),
        "test" => (d.imbalance()?, d.test_count),
        _ => (ImbalanceConfig::uniform(), d.classifier_count),
    };
    let seed = two_factor_seed(cfg, seed_index, purpose);
    let set = build_two_factor_synthetic(&config, n, &mut ChaCha8Rng::seed_from_u64(seed))?;
    Ok(Entry {
        stem: format!("two_factor_s{seed_index}_{purpose}"),
        set,
        meta: CacheMeta {
            description: format!("two-factor shapes x colors, {purpose} split"),
            seed,
            palette: None,
        },
    })
}

const TWO_FACTOR_PURPOSES: [&str; 3] = ["train", "test", "classifier"];

/// Writes every dataset the config needs; returns the manifest paths.
pub fn prepare_data(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let dir = cfg.cache_dir();
    let entries = match cfg.dataset.kind {
        DatasetKind::ColoredMnist => colored_entries(cfg)?,
        DatasetKind::TwoFactor => {
            let mut out = Vec::new();
            for &s in &cfg.seeds {
                for p in TWO_FACTOR_PURPOSES {
                    out.push(two_factor_entry(cfg, s, p)?);
                }
            }
            out
        }
    };
    entries
        .iter()
        .map(|e| write_cache(&dir, &e.stem, &e.set, &e.meta))
        .collect()
}

pub fn colored_mnist(cfg: &ExperimentConfig) -> Result<ColoredMnistData> {
    let dir = cfg.cache_dir();
    let stems: Vec<String> = ["colored_mnist_train".to_string(), "colored_mnist_test".to_string()]
        .into_iter()
        .chain((0..SINGLE_COLOR_TESTS).map(|c| format!("single_color_{c}")))
        .collect();
    let all_cached = stems.iter().all(|s| dir.join(format!("{s}.manifest")).exists());
    let mut sets = if all_cached {
        stems.iter().map(|s| Ok(read_cache(&dir, s)?.0)).collect::<Result<Vec<_>>>()?
    } else {
        colored_entries(cfg)?.into_iter().map(|e| e.set).collect()
    };
    let single_color = sets.split_off(2);
    let test = sets.pop().expect("two sets");
    let train = sets.pop().expect("one set");
    Ok(ColoredMnistData {
        train,
        test,
        single_color,
    })
}

pub fn two_factor(cfg: &ExperimentConfig, seed_index: u64) -> Result<TwoFactorData> {
    let dir = cfg.cache_dir();
    let load = |purpose: &str| {
        cached_or(&dir, &format!("two_factor_s{seed_index}_{purpose}"), || {
            Ok(two_factor_entry(cfg, seed_index, purpose)?.set)
        })
    };
    Ok(TwoFactorData {
        train: load("train")?,
        test: load("test")?,
        classifier: load("classifier")?,
    })
}
