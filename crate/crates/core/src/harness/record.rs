//! Run records: what was computed, from which checkpoint and seed, and
//! where the artifacts live. Paths are relative to the output directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ExperimentKind};
use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::metrics::FeatureAudit;
use crate::models::Variant;

pub const CONFIG_FILE: &str = "config.toml";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    /// Test-set reconstruction MSE.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mse: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub fpm: Vec<FeatureAudit>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub average_fpm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub nmi_multi: Option<f64>,
    /// One value per palette color, indexed by color.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub nmi_single: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub nmi_single_median: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEntry {
    pub variant: Variant,
    pub seed_index: u64,
    /// Seed of the training RNG (derived from the root seed).
    pub train_seed: u64,
    /// Checkpoint stem, relative to the output directory.
    pub checkpoint: PathBuf,
    pub metrics: RunMetrics,
    pub artifacts: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config_hash: String,
    pub kind: ExperimentKind,
    pub runs: Vec<RunEntry>,
    /// Summary tables.
    pub tables: Vec<PathBuf>,
}

impl RunRecord {
    pub fn new(cfg: &ExperimentConfig, kind: ExperimentKind) -> Self {
        Self {
            config_hash: cfg.hash(),
            kind,
            runs: Vec::new(),
            tables: Vec::new(),
        }
    }

    pub fn run(&self, variant: Variant, seed_index: u64) -> Option<&RunEntry> {
        self.runs
            .iter()
            .find(|r| r.variant == variant && r.seed_index == seed_index)
    }

    pub fn write(&self, out_dir: &Path, name: &str) -> Result<PathBuf> {
        let path = out_dir.join(name);
        let text = serde_json::to_string_pretty(self).expect("record serializes");
        write_atomic(&path, text.as_bytes())?;
        Ok(path)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Format {
            what: "run record",
            detail: e.to_string(),
        })
    }

    /// Adds the runs of an earlier record of the same config that this one
    /// did not redo, then orders runs as the config lists seeds and
    /// variants. Lets runs narrowed to one variant or seed add up.
    pub fn merge_previous(&mut self, cfg: &ExperimentConfig, path: &Path) -> Result<()> {
        if path.exists() {
            let old = Self::read(path)?;
            if old.config_hash == self.config_hash {
                for r in old.runs {
                    if self.run(r.variant, r.seed_index).is_none() {
                        self.runs.push(r);
                    }
                }
            }
        }
        let rank = |r: &RunEntry| {
            (
                cfg.seeds.iter().position(|&s| s == r.seed_index),
                cfg.variants.iter().position(|&v| v == r.variant),
            )
        };
        self.runs.sort_by_key(rank);
        Ok(())
    }

    /// Checks the record against the config stored next to it.
    pub fn verify(&self, out_dir: &Path) -> Result<()> {
        let cfg = ExperimentConfig::load(&out_dir.join(CONFIG_FILE))?;
        if cfg.hash() != self.config_hash {
            return Err(Error::Config(format!(
                "record hash {} does not match stored config {}",
                self.config_hash,
                cfg.hash()
            )));
        }
        for r in &self.runs {
            let manifest = out_dir.join(r.checkpoint.with_extension("manifest"));
            if !manifest.exists() {
                return Err(Error::MissingFile(manifest));
            }
        }
        Ok(())
    }
}

/// Writes the canonical config into `out_dir`, or checks that the one
/// already there is identical, so artifacts never mix configurations.
pub fn claim_out_dir(cfg: &ExperimentConfig) -> Result<()> {
    let path = cfg.out_dir.join(CONFIG_FILE);
    if path.exists() {
        let existing = ExperimentConfig::load(&path)?;
        if existing.hash() != cfg.hash() {
            return Err(Error::Config(format!(
                "{} holds a different config; pick another output directory",
                cfg.out_dir.display()
            )));
        }
        return Ok(());
    }
    write_atomic(&path, cfg.to_toml().as_bytes())
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}
