//! Summaries across seeds and prior-sample grids from saved checkpoints.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::cluster::{CLUSTER_RECORD, CLUSTER_STEM};
use super::config::ExperimentConfig;
use super::feature::{FEATURE_RECORD, MODEL_STEM};
use super::png::write_grid;
use super::record::{median, RunRecord, CONFIG_FILE};
use super::run_dir;
use crate::clustering::ClusterModel;
use crate::error::{Error, Result};
use crate::models::Checkpoint;

/// Writes `samples_prior.png` for every run with a checkpoint: prior draws
/// for plain models, mixture draws for clustering models.
pub fn sample_grids(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let side = (cfg.feature.grid_images as f64).sqrt() as usize;
    let mut out = Vec::new();
    for s in cfg.selected_seeds() {
        for v in cfg.selected_variants() {
            let dir = run_dir(cfg, v, s);
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed_for(v.name(), s, "grid"));
            let images = if dir.join(format!("{MODEL_STEM}.manifest")).exists() {
                Checkpoint::read(&dir, MODEL_STEM)?
                    .model
                    .sample_prior(cfg.feature.grid_images, &mut rng)?
            } else if dir.join(format!("{CLUSTER_STEM}.manifest")).exists() {
                ClusterModel::from_checkpoint(&Checkpoint::read(&dir, CLUSTER_STEM)?)?
                    .sample(cfg.feature.grid_images, &mut rng)?
            } else {
                return Err(Error::MissingFile(dir.join(format!("{MODEL_STEM}.manifest"))));
            };
            let path = dir.join("samples_prior.png");
            write_grid(&path, &images, side)?;
            out.push(path);
        }
    }
    Ok(out)
}

fn fmt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"))
}

fn variants_in(record: &RunRecord) -> Vec<crate::models::Variant> {
    let mut out = Vec::new();
    for r in &record.runs {
        if !out.contains(&r.variant) {
            out.push(r.variant);
        }
    }
    out
}

/// Per-variant medians over seeds for every record found in `out_dir`.
/// Each record is checked against the stored config first, and each run's
/// single-color median is recomputed from its raw values.
pub fn report(out_dir: &Path) -> Result<String> {
    let cfg = ExperimentConfig::load(&out_dir.join(CONFIG_FILE))?;
    let mut text = String::new();
    let mut found = false;

    let path = out_dir.join(CLUSTER_RECORD);
    if path.exists() {
        found = true;
        let record = RunRecord::read(&path)?;
        record.verify(out_dir)?;
        for r in &record.runs {
            if median(&r.metrics.nmi_single) != r.metrics.nmi_single_median {
                return Err(Error::Format {
                    what: "run record",
                    detail: format!("{} seed {}: stored single-color median disagrees", r.variant, r.seed_index),
                });
            }
        }
        writeln!(text, "clustering (median over seeds)").unwrap();
        writeln!(text, "{:<18} {:>6} {:>12} {:>14}", "variant", "seeds", "multi NMI", "single median").unwrap();
        for v in variants_in(&record) {
            let runs: Vec<_> = record.runs.iter().filter(|r| r.variant == v).collect();
            let multi: Vec<f64> = runs.iter().filter_map(|r| r.metrics.nmi_multi).collect();
            let single: Vec<f64> = runs.iter().filter_map(|r| r.metrics.nmi_single_median).collect();
            writeln!(
                text,
                "{:<18} {:>6} {:>12} {:>14}",
                v.name(),
                runs.len(),
                fmt(median(&multi)),
                fmt(median(&single))
            )
            .unwrap();
        }
    }

    let path = out_dir.join(FEATURE_RECORD);
    if path.exists() {
        found = true;
        let record = RunRecord::read(&path)?;
        record.verify(out_dir)?;
        let minority = cfg.dataset.minority_feature()?;
        writeln!(text, "feature inspection (median over seeds)").unwrap();
        writeln!(
            text,
            "{:<18} {:>6} {:>10} {:>10} {:>14}",
            "variant", "seeds", "MSE", "AVG FPM", "minority FPM"
        )
        .unwrap();
        for v in variants_in(&record) {
            let runs: Vec<_> = record.runs.iter().filter(|r| r.variant == v).collect();
            let mse: Vec<f64> = runs.iter().filter_map(|r| r.metrics.mse).collect();
            let avg: Vec<f64> = runs.iter().filter_map(|r| r.metrics.average_fpm).collect();
            let minor: Vec<f64> = runs
                .iter()
                .filter_map(|r| r.metrics.fpm.iter().find(|a| a.feature == minority).map(|a| a.fpm))
                .collect();
            writeln!(
                text,
                "{:<18} {:>6} {:>10} {:>10} {:>14}",
                v.name(),
                runs.len(),
                fmt(median(&mse)),
                fmt(median(&avg)),
                fmt(median(&minor))
            )
            .unwrap();
        }
    }

    if !found {
        return Err(Error::MissingFile(out_dir.join(CLUSTER_RECORD)));
    }
    Ok(text)
}
