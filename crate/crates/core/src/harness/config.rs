//! Experiment configuration (TOML) and the seed-derivation rule.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::clustering::ClusterSettings;
use crate::datasets::{ImbalanceConfig, Shape};
use crate::error::{Error, Result};
use crate::metrics::ClassifierSettings;
use crate::models::{ArchConfig, TrainSettings, Variant, VariantConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    FeatureInspection,
    Clustering,
    Interpolation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    ColoredMnist,
    TwoFactor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSpec {
    pub kind: DatasetKind,
    /// Training images. Colored MNIST draws them from the first 8,000
    /// bundled digits.
    pub train_count: usize,
    /// Test images. Colored MNIST draws them from the last 2,000 digits.
    pub test_count: usize,
    /// Two-factor set only: the under-represented shape and its share.
    pub minority_shape: String,
    pub minority_fraction: f64,
    /// Two-factor set only: balanced images used to fit the presence
    /// classifiers.
    pub classifier_count: usize,
    /// Where `prepare-data` writes caches; relative paths resolve against
    /// the output directory.
    pub cache_dir: PathBuf,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        Self {
            kind: DatasetKind::ColoredMnist,
            train_count: 8000,
            test_count: 2000,
            minority_shape: "cross".into(),
            minority_fraction: 0.1,
            classifier_count: 4000,
            cache_dir: PathBuf::from("data"),
        }
    }
}

impl DatasetSpec {
    pub fn minority(&self) -> Result<Shape> {
        Shape::from_name(&self.minority_shape)
    }

    pub fn imbalance(&self) -> Result<ImbalanceConfig> {
        ImbalanceConfig::minority_shape(self.minority()?, self.minority_fraction)
    }

    pub fn minority_feature(&self) -> Result<String> {
        Ok(format!("shape_{}", self.minority()?.name()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureSettings {
    /// Prior samples audited per model.
    pub n_generated: usize,
    pub classifier: ClassifierSettings,
    /// Images in each saved sample grid (a square number).
    pub grid_images: usize,
}

impl Default for FeatureSettings {
    fn default() -> Self {
        Self {
            n_generated: 5000,
            classifier: ClassifierSettings::default(),
            grid_images: 64,
        }
    }
}

/// Which two test images to interpolate between.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "by", deny_unknown_fields)]
pub enum PairSelector {
    /// Two test-set indices.
    Indices { a: usize, b: usize },
    /// First test image with feature `from` and the first image after it
    /// with feature `to` that shares every other ground-truth flag that the
    /// first image has, falling back to the first image with `to`.
    Features { from: String, to: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InterpolationSettings {
    pub steps: usize,
    pub pair: PairSelector,
    /// Output directory of the run whose checkpoints are interpolated;
    /// empty means this config's own output directory.
    pub checkpoint_dir: PathBuf,
}

impl Default for InterpolationSettings {
    fn default() -> Self {
        Self {
            steps: 8,
            pair: PairSelector::Features {
                from: "shape_square".into(),
                to: "shape_cross".into(),
            },
            checkpoint_dir: PathBuf::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub root_seed: u64,
    /// Seed indices; each expands to per-purpose seeds via [`derive_seed`].
    pub seeds: Vec<u64>,
    pub variants: Vec<Variant>,
    pub out_dir: PathBuf,
    #[serde(default)]
    pub dataset: DatasetSpec,
    #[serde(default)]
    pub arch: ArchConfig,
    #[serde(default)]
    pub train: TrainSettings,
    /// Objective hyperparameters shared by all variants; the `variant`
    /// field of this table is ignored.
    #[serde(default)]
    pub objective: VariantConfig,
    #[serde(default)]
    pub cluster: ClusterSettings,
    #[serde(default)]
    pub feature: FeatureSettings,
    #[serde(default)]
    pub interpolation: InterpolationSettings,
    /// Command-line narrowing to one variant; not part of the stored
    /// config or its hash.
    #[serde(skip)]
    pub only_variant: Option<Variant>,
    #[serde(skip)]
    pub only_seed: Option<u64>,
}

/// First 8 bytes (little endian) of SHA-256 over
/// `"{root}/{variant}/{seed_index}/{purpose}"`.
pub fn derive_seed(root: u64, variant: &str, seed_index: u64, purpose: &str) -> u64 {
    let digest = Sha256::digest(format!("{root}/{variant}/{seed_index}/{purpose}").as_bytes());
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    /// Canonical serialization; every default is written out.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("experiment config serializes")
    }

    /// SHA-256 of the canonical serialization.
    pub fn hash(&self) -> String {
        sha256_hex(self.to_toml().as_bytes())
    }

    pub fn validate(&self) -> Result<()> {
        if self.variants.is_empty() {
            return Err(Error::Config("at least one variant is required".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        for (i, v) in self.variants.iter().enumerate() {
            if self.variants[..i].contains(v) {
                return Err(Error::Config(format!("variant `{v}` listed twice")));
            }
        }
        for (i, s) in self.seeds.iter().enumerate() {
            if self.seeds[..i].contains(s) {
                return Err(Error::Config(format!("seed {s} listed twice")));
            }
        }
        self.train.validate()?;
        for &v in &self.variants {
            self.variant_config(v).validate()?;
        }
        if self.arch.conv_channels.is_empty() || self.arch.latent_dim == 0 {
            return Err(Error::Config("architecture needs conv layers and a latent".into()));
        }
        let d = &self.dataset;
        if d.train_count == 0 || d.test_count == 0 {
            return Err(Error::Config("dataset counts must be positive".into()));
        }
        match d.kind {
            DatasetKind::ColoredMnist => {
                if d.train_count > 8000 || d.test_count > 2000 {
                    return Err(Error::Config(
                        "colored MNIST offers at most 8000 train and 2000 test digits".into(),
                    ));
                }
            }
            DatasetKind::TwoFactor => {
                d.imbalance()?;
                if d.classifier_count < 20 {
                    return Err(Error::Config("classifier_count is too small to split".into()));
                }
            }
        }
        match self.kind {
            ExperimentKind::FeatureInspection => {
                if d.kind != DatasetKind::TwoFactor {
                    return Err(Error::Config("feature inspection runs on the two-factor dataset".into()));
                }
                if self.feature.n_generated == 0 {
                    return Err(Error::Config("n_generated must be positive".into()));
                }
            }
            ExperimentKind::Clustering => {
                if d.kind != DatasetKind::ColoredMnist {
                    return Err(Error::Config("clustering runs on colored MNIST".into()));
                }
                if self.cluster.k < 2 {
                    return Err(Error::Config("cluster.k must be at least 2".into()));
                }
                if self.cluster.warmup_epochs >= self.train.epochs {
                    return Err(Error::Config("train.epochs must exceed cluster.warmup_epochs".into()));
                }
            }
            ExperimentKind::Interpolation => {
                if self.interpolation.steps < 2 {
                    return Err(Error::Config("interpolation needs at least 2 steps".into()));
                }
            }
        }
        let side = (self.feature.grid_images as f64).sqrt() as usize;
        if side * side != self.feature.grid_images || side == 0 {
            return Err(Error::Config("grid_images must be a positive square".into()));
        }
        Ok(())
    }

    pub fn variant_config(&self, variant: Variant) -> VariantConfig {
        VariantConfig {
            variant,
            ..self.objective.clone()
        }
    }

    pub fn seed_for(&self, variant: &str, seed_index: u64, purpose: &str) -> u64 {
        derive_seed(self.root_seed, variant, seed_index, purpose)
    }

    pub fn cache_dir(&self) -> PathBuf {
        self.out_dir.join(&self.dataset.cache_dir)
    }

    /// Runs only `variant`, which must be listed.
    pub fn restrict_variant(&mut self, variant: Variant) -> Result<()> {
        if !self.variants.contains(&variant) {
            return Err(Error::Config(format!("variant `{variant}` is not in the config")));
        }
        self.only_variant = Some(variant);
        Ok(())
    }

    /// Runs only seed index `seed`, which must be listed.
    pub fn restrict_seed(&mut self, seed: u64) -> Result<()> {
        if !self.seeds.contains(&seed) {
            return Err(Error::Config(format!("seed {seed} is not in the config")));
        }
        self.only_seed = Some(seed);
        Ok(())
    }

    pub fn selected_variants(&self) -> Vec<Variant> {
        self.variants
            .iter()
            .copied()
            .filter(|v| self.only_variant.is_none_or(|o| o == *v))
            .collect()
    }

    pub fn selected_seeds(&self) -> Vec<u64> {
        self.seeds
            .iter()
            .copied()
            .filter(|s| self.only_seed.is_none_or(|o| o == *s))
            .collect()
    }
}
