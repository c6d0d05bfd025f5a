//! End-to-end runs of the harness and CLI at toy scale.

use std::path::Path;
use std::process::Command;

use jigsaw_vae::harness::{
    median, report, run_clustering, run_dir, run_feature_inspection, ExperimentConfig, RunRecord, CLUSTER_RECORD,
    CLUSTER_TABLE, CONFIG_FILE, FEATURE_RECORD, FPM_TABLE,
};
use jigsaw_vae::models::Variant;

const TINY_FEATURE: &str = r#"
kind = "feature-inspection"
root_seed = 7
seeds = [0]
variants = ["jigsaw_vae"]
out_dir = "unused"

[dataset]
kind = "two_factor"
train_count = 200
test_count = 40
classifier_count = 200

[arch]
conv_channels = [4, 8]
latent_dim = 4

[train]
epochs = 1
batch_size = 32

[feature]
n_generated = 50
grid_images = 16

[feature.classifier]
epochs = 1
"#;

const TINY_CLUSTER: &str = r#"
kind = "clustering"
root_seed = 7
seeds = [0, 1]
variants = ["vae", "jigsaw_vae"]
out_dir = "unused"

[dataset]
kind = "colored_mnist"
train_count = 256
test_count = 64

[arch]
conv_channels = [4, 8]
latent_dim = 4

[train]
epochs = 2
batch_size = 64

[objective]
permute_channels = true

[cluster]
k = 4
warmup_epochs = 1
"#;

fn tiny(text: &str, out: &Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::from_toml(text).unwrap();
    cfg.out_dir = out.to_path_buf();
    cfg
}

#[test]
fn checked_in_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            n += 1;
        }
    }
    assert!(n >= 4);
}

#[test]
fn reference_config_spells_out_the_defaults() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/reference.toml");
    let reference = ExperimentConfig::load(&path).unwrap();
    let minimal = ExperimentConfig::from_toml(
        r#"
kind = "feature-inspection"
root_seed = 20210801
seeds = [0, 1, 2, 3, 4]
variants = ["vae", "beta_vae", "d_vae", "mixup_vae", "jigsaw_vae", "jigsaw_beta_vae"]
out_dir = "runs/reference"

[dataset]
kind = "two_factor"
"#,
    )
    .unwrap();
    assert_eq!(reference, minimal);
}

#[test]
fn feature_inspection_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tiny(TINY_FEATURE, &tmp.path().join("a"));
    let b = tiny(TINY_FEATURE, &tmp.path().join("b"));
    let rec = run_feature_inspection(&a).unwrap();
    run_feature_inspection(&b).unwrap();

    let table = std::fs::read_to_string(a.out_dir.join(FPM_TABLE)).unwrap();
    assert_eq!(table.lines().count(), 2);
    assert!(table.starts_with("variant,seed,mse,"));
    assert_eq!(table, std::fs::read_to_string(b.out_dir.join(FPM_TABLE)).unwrap());

    let dir = run_dir(&a, Variant::JigsawVae, 0);
    for f in ["fpm.csv", "model.manifest", "model.f32", "train_log.csv", "samples.png"] {
        assert!(dir.join(f).exists(), "{f} missing");
    }
    let entry = &rec.runs[0];
    let mean = entry.metrics.fpm.iter().map(|a| a.fpm).sum::<f64>() / entry.metrics.fpm.len() as f64;
    assert!((mean - entry.metrics.average_fpm.unwrap()).abs() < 1e-12);

    // Rerunning into the same directory reuses the checkpoint and changes
    // nothing.
    run_feature_inspection(&a).unwrap();
    assert_eq!(table, std::fs::read_to_string(a.out_dir.join(FPM_TABLE)).unwrap());
    let stored = RunRecord::read(&a.out_dir.join(FEATURE_RECORD)).unwrap();
    stored.verify(&a.out_dir).unwrap();
}

#[test]
fn clustering_run_records_single_color_medians() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tiny(TINY_CLUSTER, tmp.path());
    let rec = run_clustering(&cfg).unwrap();
    assert_eq!(rec.runs.len(), 4);
    for r in &rec.runs {
        assert_eq!(r.metrics.nmi_single.len(), 10);
        assert_eq!(median(&r.metrics.nmi_single), r.metrics.nmi_single_median);
        let dir = run_dir(&cfg, r.variant, r.seed_index);
        assert!(dir.join("assign_multi.csv").exists());
        assert!(dir.join("assign_single_9.csv").exists());
    }
    let table = std::fs::read_to_string(tmp.path().join(CLUSTER_TABLE)).unwrap();
    assert_eq!(table.lines().count(), 5);
    let text = report(tmp.path()).unwrap();
    assert!(text.contains("jigsaw_vae"));
    RunRecord::read(&tmp.path().join(CLUSTER_RECORD)).unwrap().verify(tmp.path()).unwrap();
}

#[test]
fn narrowed_runs_merge_into_one_record() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = tiny(TINY_CLUSTER, tmp.path());
    cfg.restrict_seed(1).unwrap();
    run_clustering(&cfg).unwrap();
    let mut cfg = tiny(TINY_CLUSTER, tmp.path());
    cfg.restrict_seed(0).unwrap();
    cfg.restrict_variant(Variant::Vae).unwrap();
    let rec = run_clustering(&cfg).unwrap();
    let order: Vec<(u64, Variant)> = rec.runs.iter().map(|r| (r.seed_index, r.variant)).collect();
    assert_eq!(order, vec![(0, Variant::Vae), (1, Variant::Vae), (1, Variant::JigsawVae)]);
}

#[test]
fn an_output_directory_keeps_its_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tiny(TINY_FEATURE, tmp.path());
    jigsaw_vae::harness::claim_out_dir(&cfg).unwrap();
    let mut other = cfg.clone();
    other.train.epochs = 2;
    assert!(jigsaw_vae::harness::claim_out_dir(&other).is_err());
}

#[test]
fn cli_runs_feature_inspection_and_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("tiny.toml");
    std::fs::write(&config, TINY_FEATURE).unwrap();
    let out = tmp.path().join("out");
    let bin = env!("CARGO_BIN_EXE_jigsaw-vae");

    let run = Command::new(bin)
        .args(["eval-fpm", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(String::from_utf8_lossy(&run.stdout).contains("minority FPM"));
    assert!(out.join(CONFIG_FILE).exists());

    let rep = Command::new(bin).args(["report", "--out"]).arg(&out).output().unwrap();
    assert!(rep.status.success());
    assert!(String::from_utf8_lossy(&rep.stdout).contains("jigsaw_vae"));

    let bad = Command::new(bin)
        .args(["train", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .args(["--variant", "vae"])
        .output()
        .unwrap();
    assert!(!bad.status.success());
}
