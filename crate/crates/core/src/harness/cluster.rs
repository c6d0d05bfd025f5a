//! Biased clustering on colored MNIST: train a mixture-prior model per
//! variant and seed, then score digit clusters on the multi-color test set
//! and on each single-color test set.

use std::collections::BTreeMap;
use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use super::config::{ExperimentConfig, ExperimentKind};
use super::data::{colored_mnist, ColoredMnistData};
use super::feature::interleave_rows;
use super::png::write_grid;
use super::record::{claim_out_dir, median, RunEntry, RunMetrics, RunRecord};
use super::{rel, run_dir, run_error};
use crate::clustering::{assignments_csv, hard_labels, train_cluster_vae, ClusterModel};
use crate::error::Result;
use crate::io::write_atomic;
use crate::metrics::nmi;
use crate::models::{epoch_log_csv, Checkpoint, Variant};

pub const CLUSTER_STEM: &str = "cluster_model";
pub const CLUSTER_TABLE: &str = "table_clustering.csv";
pub const NMI_JSON: &str = "nmi.json";
pub const CLUSTER_RECORD: &str = "record_clustering.json";
/// Palette color used for the single-color reconstruction grid (yellow).
const GRID_COLOR: usize = 5;
const GRID_COLS: usize = 8;

/// Loads the run's clustering checkpoint if present, otherwise trains and
/// writes it. Evaluation always goes through the checkpoint's values.
pub fn train_or_load_cluster(
    cfg: &ExperimentConfig,
    variant: Variant,
    seed_index: u64,
    data: &ColoredMnistData,
) -> Result<(ClusterModel, PathBuf)> {
    let dir = run_dir(cfg, variant, seed_index);
    let stem = dir.join(CLUSTER_STEM);
    if !stem.with_extension("manifest").exists() {
        let seed = cfg.seed_for(variant.name(), seed_index, "train");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vc = cfg.variant_config(variant);
        let (model, logs) = train_cluster_vae(
            &data.train.images,
            &vc,
            cfg.arch.clone(),
            &cfg.train,
            &cfg.cluster,
            &mut rng,
            |_, _, _| Ok(()),
        )
        .map_err(|e| run_error(variant, seed_index, e))?;
        write_atomic(&dir.join("train_log.csv"), epoch_log_csv(&logs).as_bytes())?;
        model.checkpoint(vc, seed, cfg.train.epochs).write(&dir, CLUSTER_STEM)?;
    }
    let model = ClusterModel::from_checkpoint(&Checkpoint::read(&dir, CLUSTER_STEM)?)?;
    Ok((model, stem))
}

/// `variant,seed,multi_color_nmi,single_color_median,single_color_0..9`.
pub fn cluster_table(record: &RunRecord) -> String {
    let n_single = record.runs.first().map_or(0, |r| r.metrics.nmi_single.len());
    let mut out = String::from("variant,seed,multi_color_nmi,single_color_median");
    for c in 0..n_single {
        out.push_str(&format!(",single_color_{c}"));
    }
    out.push('\n');
    for r in &record.runs {
        let m = &r.metrics;
        out.push_str(&format!(
            "{},{},{},{}",
            r.variant,
            r.seed_index,
            m.nmi_multi.unwrap_or(f64::NAN),
            m.nmi_single_median.unwrap_or(f64::NAN)
        ));
        for v in &m.nmi_single {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    out
}

/// NMI values keyed by variant, then test mode (`multi` or `single`), then
/// color index, then seed.
pub fn nmi_json(record: &RunRecord) -> String {
    let mut by_variant: BTreeMap<String, (BTreeMap<String, f64>, BTreeMap<usize, BTreeMap<String, f64>>)> =
        BTreeMap::new();
    for r in &record.runs {
        let (multi, single) = by_variant.entry(r.variant.to_string()).or_default();
        let seed = r.seed_index.to_string();
        if let Some(v) = r.metrics.nmi_multi {
            multi.insert(seed.clone(), v);
        }
        for (c, &v) in r.metrics.nmi_single.iter().enumerate() {
            single.entry(c).or_default().insert(seed.clone(), v);
        }
    }
    let value: BTreeMap<String, Value> = by_variant
        .into_iter()
        .map(|(v, (multi, single))| {
            let single: BTreeMap<String, Value> = single.into_iter().map(|(c, m)| (c.to_string(), json!(m))).collect();
            (v, json!({ "multi": multi, "single": single }))
        })
        .collect();
    serde_json::to_string_pretty(&value).expect("json serializes")
}

pub fn run_clustering(cfg: &ExperimentConfig) -> Result<RunRecord> {
    claim_out_dir(cfg)?;
    let out = &cfg.out_dir;
    let data = colored_mnist(cfg)?;
    let mut record = RunRecord::new(cfg, ExperimentKind::Clustering);
    for s in cfg.selected_seeds() {
        for v in cfg.selected_variants() {
            let (model, stem) = train_or_load_cluster(cfg, v, s, &data)?;
            let dir = run_dir(cfg, v, s);
            let mut artifacts = Vec::new();

            let multi = model.assign(&data.test.images)?;
            let path = dir.join("assign_multi.csv");
            write_atomic(&path, assignments_csv(&multi).as_bytes())?;
            artifacts.push(rel(out, &path));
            let nmi_multi = nmi(&data.test.class_labels, &hard_labels(&multi))?;

            let mut nmi_single = Vec::with_capacity(data.single_color.len());
            for (c, set) in data.single_color.iter().enumerate() {
                let a = model.assign(&set.images)?;
                let path = dir.join(format!("assign_single_{c}.csv"));
                write_atomic(&path, assignments_csv(&a).as_bytes())?;
                artifacts.push(rel(out, &path));
                nmi_single.push(nmi(&set.class_labels, &hard_labels(&a))?);
            }

            let n_shown = (GRID_COLS * GRID_COLS / 2).min(data.test.len());
            for (name, images) in [
                ("recon_multi.png", &data.test.images),
                ("recon_single.png", &data.single_color[GRID_COLOR.min(data.single_color.len() - 1)].images),
            ] {
                let shown = images.range(0, n_shown);
                let recon = model.reconstruct_via_cluster(&shown)?;
                let path = dir.join(name);
                write_grid(&path, &interleave_rows(&shown, &recon, GRID_COLS)?, GRID_COLS)?;
                artifacts.push(rel(out, &path));
            }

            record.runs.push(RunEntry {
                variant: v,
                seed_index: s,
                train_seed: cfg.seed_for(v.name(), s, "train"),
                checkpoint: rel(out, &stem),
                metrics: RunMetrics {
                    mse: Some(model.model.reconstruction_mse(&data.test.images)?),
                    nmi_multi: Some(nmi_multi),
                    nmi_single_median: median(&nmi_single),
                    nmi_single,
                    ..RunMetrics::default()
                },
                artifacts,
            });
        }
    }
    record.merge_previous(cfg, &out.join(CLUSTER_RECORD))?;
    let table = out.join(CLUSTER_TABLE);
    write_atomic(&table, cluster_table(&record).as_bytes())?;
    let json_path = out.join(NMI_JSON);
    write_atomic(&json_path, nmi_json(&record).as_bytes())?;
    record.tables.push(rel(out, &table));
    record.tables.push(rel(out, &json_path));
    record.write(out, CLUSTER_RECORD)?;
    Ok(record)
}
