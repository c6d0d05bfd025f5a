use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use jigsaw_vae::harness::{
    claim_out_dir, colored_mnist, prepare_data, report, run_clustering, run_feature_inspection,
    run_interpolation, sample_grids, train_models, train_or_load_cluster, ExperimentConfig, ExperimentKind,
    CONFIG_FILE,
};
use jigsaw_vae::models::Variant;

#[derive(Parser, Debug)]
#[command(name = "jigsaw-vae", version, about = "Jigsaw-VAE experiments: feature inspection, biased clustering, interpolation")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment config (TOML)
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Run only this seed index
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory (overrides the config)
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Run only this variant
    #[arg(long, global = true)]
    variant: Option<Variant>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write dataset caches (manifest + f32 array) under the output directory
    PrepareData,
    /// Train (or reuse) a model per variant and seed
    Train,
    /// Write sample grids from trained checkpoints
    Sample,
    /// Feature inspection: train, sample, audit feature presence
    EvalFpm,
    /// Biased clustering on colored MNIST
    Cluster,
    /// Interpolation strips between two test images
    Interpolate,
    /// Summarize the records in the output directory
    Report,
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let path = match (&cli.config, &cli.out) {
        (Some(p), _) => p.clone(),
        (None, Some(out)) => out.join(CONFIG_FILE),
        (None, None) => bail!("pass --config PATH (or --out DIR holding a config.toml)"),
    };
    let mut cfg = ExperimentConfig::load(&path).with_context(|| format!("loading {}", path.display()))?;
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    if let Some(s) = cli.seed {
        cfg.restrict_seed(s)?;
    }
    if let Some(v) = cli.variant {
        cfg.restrict_variant(v)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn expect_kind(cfg: &ExperimentConfig, kind: ExperimentKind) -> Result<()> {
    if cfg.kind != kind {
        bail!("this command needs a {kind:?} config, got {:?}", cfg.kind);
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    if let Command::Report = cli.command {
        let dir = match (&cli.out, &cli.config) {
            (Some(out), _) => out.clone(),
            (None, Some(_)) => load_config(&cli)?.out_dir,
            (None, None) => bail!("pass --out DIR or --config PATH"),
        };
        print!("{}", report(&dir)?);
        return Ok(());
    }
    let cfg = load_config(&cli)?;
    match cli.command {
        Command::PrepareData => {
            for p in prepare_data(&cfg)? {
                println!("{}", p.display());
            }
        }
        Command::Train => match cfg.kind {
            ExperimentKind::Clustering => {
                claim_out_dir(&cfg)?;
                let data = colored_mnist(&cfg)?;
                for s in cfg.selected_seeds() {
                    for v in cfg.selected_variants() {
                        let (_, stem) = train_or_load_cluster(&cfg, v, s, &data)?;
                        println!("{}", stem.display());
                    }
                }
            }
            ExperimentKind::FeatureInspection => {
                for p in train_models(&cfg)? {
                    println!("{}", p.display());
                }
            }
            ExperimentKind::Interpolation => bail!("interpolation configs reuse checkpoints; train with their source config"),
        },
        Command::Sample => {
            for p in sample_grids(&cfg)? {
                println!("{}", p.display());
            }
        }
        Command::EvalFpm => {
            expect_kind(&cfg, ExperimentKind::FeatureInspection)?;
            run_feature_inspection(&cfg)?;
            print!("{}", report(&cfg.out_dir)?);
        }
        Command::Cluster => {
            expect_kind(&cfg, ExperimentKind::Clustering)?;
            run_clustering(&cfg)?;
            print!("{}", report(&cfg.out_dir)?);
        }
        Command::Interpolate => {
            expect_kind(&cfg, ExperimentKind::Interpolation)?;
            for strip in run_interpolation(&cfg, &cfg.interpolation.pair)? {
                println!(
                    "{} pair {:?} -> {}",
                    strip.variant,
                    strip.pair,
                    strip.path.display()
                );
            }
        }
        Command::Report => unreachable!("handled above"),
    }
    Ok(())
}
