//! Feature inspection on the two-factor set: train each variant, sample
//! from the prior, audit feature presence, and tabulate FPM and MSE.

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{ExperimentConfig, ExperimentKind};
use super::data::{two_factor, TwoFactorData};
use super::png::write_grid;
use super::record::{claim_out_dir, RunEntry, RunMetrics, RunRecord};
use super::{run_dir, run_error, rel};
use crate::datasets::LabeledImageSet;
use crate::error::Result;
use crate::image::ImageBatch;
use crate::io::write_atomic;
use crate::metrics::{audit_features, PresenceClassifier};
use crate::models::{epoch_log_csv, train, Checkpoint, ModelParams, StandardNormalPrior, Variant};

pub const MODEL_STEM: &str = "model";
pub const FPM_TABLE: &str = "table_fpm.csv";
pub const FEATURE_RECORD: &str = "record_feature_inspection.json";

/// Loads the run's checkpoint if present, otherwise trains and writes it.
pub fn train_or_load(
    cfg: &ExperimentConfig,
    variant: Variant,
    seed_index: u64,
    train_set: &LabeledImageSet,
) -> Result<(ModelParams<f32>, PathBuf)> {
    let dir = run_dir(cfg, variant, seed_index);
    let stem = dir.join(MODEL_STEM);
    if stem.with_extension("manifest").exists() {
        return Ok((Checkpoint::read(&dir, MODEL_STEM)?.model, stem));
    }
    let seed = cfg.seed_for(variant.name(), seed_index, "train");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vc = cfg.variant_config(variant);
    let model = ModelParams::init(train_set.images.geometry(), cfg.arch.clone(), &mut rng)?;
    let (model, logs) = train(model, &train_set.images, &vc, &cfg.train, &StandardNormalPrior, &mut rng, |_, _| Ok(()))
        .map_err(|e| run_error(variant, seed_index, e))?;
    write_atomic(&dir.join("train_log.csv"), epoch_log_csv(&logs).as_bytes())?;
    let ck = Checkpoint {
        model,
        variant: vc,
        seed,
        epoch: cfg.train.epochs,
        extras: Vec::new(),
    };
    ck.write(&dir, MODEL_STEM)?;
    Ok((ck.model, stem))
}

/// Trains (or loads) every variant x seed model.
pub fn train_models(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    claim_out_dir(cfg)?;
    let mut out = Vec::new();
    for s in cfg.selected_seeds() {
        let data = two_factor(cfg, s)?;
        for v in cfg.selected_variants() {
            out.push(train_or_load(cfg, v, s, &data.train)?.1);
        }
    }
    Ok(out)
}

/// One classifier per ground-truth feature, fitted on the balanced split.
pub fn train_classifiers(cfg: &ExperimentConfig, seed_index: u64, data: &TwoFactorData) -> Result<Vec<PresenceClassifier>> {
    data.train
        .feature_names()
        .into_iter()
        .map(|f| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed_for("classifier", seed_index, f));
            PresenceClassifier::train(&data.classifier, f, &cfg.feature.classifier, &mut rng)
        })
        .collect()
}

fn classifier_csv(classifiers: &[PresenceClassifier]) -> String {
    let mut out = String::from("feature,threshold,validation_balanced_accuracy,held_out_accuracy\n");
    for c in classifiers {
        out.push_str(&format!(
            "{},{},{},{}\n",
            c.feature, c.threshold, c.validation_balanced_accuracy, c.held_out_accuracy
        ));
    }
    out
}

/// `variant,seed,mse,<feature>...,avg` with one row per run.
pub fn fpm_table(record: &RunRecord) -> String {
    let features: Vec<String> = record
        .runs
        .first()
        .map(|r| r.metrics.fpm.iter().map(|a| a.feature.clone()).collect())
        .unwrap_or_default();
    let mut out = format!("variant,seed,mse,{},avg\n", features.join(","));
    for r in &record.runs {
        let m = &r.metrics;
        let fpms: Vec<String> = m.fpm.iter().map(|a| a.fpm.to_string()).collect();
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.variant,
            r.seed_index,
            m.mse.unwrap_or(f64::NAN),
            fpms.join(","),
            m.average_fpm.unwrap_or(f64::NAN)
        ));
    }
    out
}

pub fn run_feature_inspection(cfg: &ExperimentConfig) -> Result<RunRecord> {
    claim_out_dir(cfg)?;
    let out = &cfg.out_dir;
    let mut record = RunRecord::new(cfg, ExperimentKind::FeatureInspection);
    let side = (cfg.feature.grid_images as f64).sqrt() as usize;
    for s in cfg.selected_seeds() {
        let data = two_factor(cfg, s)?;
        let classifiers = train_classifiers(cfg, s, &data)?;
        let clf_path = out.join(format!("classifiers_s{s}.csv"));
        write_atomic(&clf_path, classifier_csv(&classifiers).as_bytes())?;
        for v in cfg.selected_variants() {
            let (model, stem) = train_or_load(cfg, v, s, &data.train)?;
            let dir = run_dir(cfg, v, s);
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed_for(v.name(), s, "sample"));
            let generated = model.sample_prior(cfg.feature.n_generated, &mut rng)?;
            let report = audit_features(&classifiers, &generated, &data.train)?;
            write_atomic(&dir.join("fpm.csv"), report.to_csv().as_bytes())?;
            write_atomic(&dir.join("fpm.json"), report.to_json().as_bytes())?;
            let grid_path = dir.join("samples.png");
            let shown = generated.range(0, cfg.feature.grid_images.min(generated.len()));
            write_grid(&grid_path, &shown, side)?;
            let recon_path = dir.join("reconstructions.png");
            write_reconstruction_grid(&recon_path, &model, &data.test.images, side)?;
            record.runs.push(RunEntry {
                variant: v,
                seed_index: s,
                train_seed: cfg.seed_for(v.name(), s, "train"),
                checkpoint: rel(out, &stem),
                metrics: RunMetrics {
                    mse: Some(model.reconstruction_mse(&data.test.images)?),
                    average_fpm: Some(report.average_fpm),
                    fpm: report.features,
                    ..RunMetrics::default()
                },
                artifacts: vec![
                    rel(out, &dir.join("fpm.csv")),
                    rel(out, &grid_path),
                    rel(out, &recon_path),
                    rel(out, &clf_path),
                ],
            });
        }
    }
    record.merge_previous(cfg, &out.join(FEATURE_RECORD))?;
    let table = out.join(FPM_TABLE);
    write_atomic(&table, fpm_table(&record).as_bytes())?;
    record.tables.push(rel(out, &table));
    record.write(out, FEATURE_RECORD)?;
    Ok(record)
}

/// Rows of inputs, each followed by a row of their mean reconstructions.
pub(crate) fn write_reconstruction_grid(
    path: &Path,
    model: &ModelParams<f32>,
    images: &ImageBatch<f32>,
    cols: usize,
) -> Result<()> {
    let shown = images.range(0, (cols * cols / 2).min(images.len()));
    let recon = model.reconstruct(&shown)?;
    write_grid(path, &interleave_rows(&shown, &recon, cols)?, cols)
}

/// Alternates rows of `a` and `b`, padding short rows with black images.
pub(crate) fn interleave_rows(a: &ImageBatch<f32>, b: &ImageBatch<f32>, cols: usize) -> Result<ImageBatch<f32>> {
    let blank = vec![0.0; a.geometry().pixels()];
    let mut out = ImageBatch::empty(a.geometry());
    for start in (0..a.len()).step_by(cols) {
        let end = (start + cols).min(a.len());
        for src in [a, b] {
            for i in start..start + cols {
                out.push(if i < end { src.sample(i) } else { &blank })?;
            }
        }
    }
    Ok(out)
}
