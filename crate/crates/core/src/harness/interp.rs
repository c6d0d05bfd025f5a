//! Latent interpolation strips between a fixed pair of test images, one
//! strip per variant, all from the same endpoints.

use std::path::PathBuf;

use super::config::{DatasetKind, ExperimentConfig, PairSelector};
use super::data::{colored_mnist, two_factor};
use super::feature::MODEL_STEM;
use super::cluster::CLUSTER_STEM;
use super::png::write_grid;
use super::record::claim_out_dir;
use crate::datasets::LabeledImageSet;
use crate::error::{Error, Result};
use crate::image::ImageBatch;
use crate::models::{Checkpoint, Variant};

#[derive(Debug, Clone, PartialEq)]
pub struct InterpolationStrip {
    pub variant: Variant,
    pub seed_index: u64,
    pub pair: (usize, usize),
    pub frames: ImageBatch<f32>,
    pub path: PathBuf,
}

/// Resolves the selector to two test-set indices.
pub fn select_pair(set: &LabeledImageSet, selector: &PairSelector) -> Result<(usize, usize)> {
    match selector {
        PairSelector::Indices { a, b } => {
            if *a >= set.len() || *b >= set.len() {
                return Err(Error::invalid(format!("pair ({a}, {b}) outside a set of {}", set.len())));
            }
            Ok((*a, *b))
        }
        PairSelector::Features { from, to } => {
            let from_flags = set.feature(from)?;
            let to_flags = set.feature(to)?;
            let a = from_flags
                .iter()
                .position(|&f| f)
                .ok_or_else(|| Error::invalid(format!("no test image has `{from}`")))?;
            let shared: Vec<&[bool]> = set
                .features
                .iter()
                .filter(|f| f.name != *from && f.name != *to && f.flags[a])
                .map(|f| f.flags.as_slice())
                .collect();
            let candidates = || (0..set.len()).filter(|&j| j != a && to_flags[j]);
            let b = candidates()
                .find(|&j| shared.iter().all(|flags| flags[j]))
                .or_else(|| candidates().next())
                .ok_or_else(|| Error::invalid(format!("no test image has `{to}`")))?;
            Ok((a, b))
        }
    }
}

fn load_checkpoint(dir: &std::path::Path) -> Result<Checkpoint> {
    for stem in [MODEL_STEM, CLUSTER_STEM] {
        if dir.join(format!("{stem}.manifest")).exists() {
            return Checkpoint::read(dir, stem);
        }
    }
    Err(Error::MissingFile(dir.join(format!("{MODEL_STEM}.manifest"))))
}

/// Interpolates with the first seed's checkpoint of every variant. Strips
/// go to `<out>/strips/<variant>_s<seed>.png`.
pub fn run_interpolation(cfg: &ExperimentConfig, selector: &PairSelector) -> Result<Vec<InterpolationStrip>> {
    claim_out_dir(cfg)?;
    let seed_index = cfg.selected_seeds()[0];
    let test = match cfg.dataset.kind {
        DatasetKind::TwoFactor => two_factor(cfg, seed_index)?.test,
        DatasetKind::ColoredMnist => colored_mnist(cfg)?.test,
    };
    let (a, b) = select_pair(&test, selector)?;
    let source = if cfg.interpolation.checkpoint_dir.as_os_str().is_empty() {
        cfg.out_dir.clone()
    } else {
        cfg.interpolation.checkpoint_dir.clone()
    };
    let mut strips = Vec::new();
    for v in cfg.selected_variants() {
        let ck = load_checkpoint(&source.join("runs").join(v.name()).join(format!("seed{seed_index}")))?;
        if ck.model.geometry() != test.images.geometry() {
            return Err(Error::dims(format!(
                "checkpoint for {v} expects {} images, test set has {}",
                ck.model.geometry(),
                test.images.geometry()
            )));
        }
        let frames = ck
            .model
            .interpolate(test.images.sample(a), test.images.sample(b), cfg.interpolation.steps)?;
        let path = cfg.out_dir.join("strips").join(format!("{v}_s{seed_index}.png"));
        write_grid(&path, &frames, frames.len())?;
        strips.push(InterpolationStrip {
            variant: v,
            seed_index,
            pair: (a, b),
            frames,
            path,
        });
    }
    Ok(strips)
}
