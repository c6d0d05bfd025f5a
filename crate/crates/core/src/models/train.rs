//! Minibatch Adam on the negative bound.

use jvae_nn::{Adam, AdamConfig};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::elbo::{elbo_step, ElboReport, LatentPrior};
use super::model::ModelParams;
use super::variant::VariantConfig;
use crate::error::{Error, Result};
use crate::image::ImageBatch;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSettings {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
}

impl Default for TrainSettings {
    fn default() -> Self {
        Self {
            epochs: 30,
            batch_size: 128,
            learning_rate: 1e-3,
        }
    }
}

impl TrainSettings {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size must be positive"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning_rate must be positive"));
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            ..AdamConfig::default()
        }
    }
}

/// Sample-weighted averages of the per-step reports over one epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub recon_term: f64,
    pub kl_term: f64,
    pub objective: f64,
}

impl EpochLog {
    pub const CSV_HEADER: &'static str = "epoch,recon_term,kl_term,objective";

    pub fn csv_row(&self) -> String {
        format!("{},{},{},{}", self.epoch, self.recon_term, self.kl_term, self.objective)
    }
}

pub fn epoch_log_csv(logs: &[EpochLog]) -> String {
    let mut out = String::from(EpochLog::CSV_HEADER);
    out.push('\n');
    for log in logs {
        out.push_str(&log.csv_row());
        out.push('\n');
    }
    out
}

/// Optimizer state carried across epochs.
pub struct Trainer {
    pub model: ModelParams<f32>,
    pub settings: TrainSettings,
    adam: Adam<f32>,
    grads: Vec<f32>,
    epochs_done: usize,
}

impl Trainer {
    pub fn new(model: ModelParams<f32>, settings: TrainSettings) -> Result<Self> {
        settings.validate()?;
        let len = model.values.len();
        Ok(Self {
            adam: Adam::new(settings.adam(), len),
            grads: vec![0.0; len],
            model,
            settings,
            epochs_done: 0,
        })
    }

    pub fn epochs_done(&self) -> usize {
        self.epochs_done
    }

    /// One pass over `data` in a freshly shuffled order. `on_batch` sees the
    /// encoder rows (`[mean | log_variance]`) and dataset indices of every
    /// step, before the parameter update.
    pub fn run_epoch<P, R>(
        &mut self,
        data: &ImageBatch<f32>,
        config: &VariantConfig,
        prior: &P,
        rng: &mut R,
        mut on_batch: impl FnMut(&[usize], &[f32]),
    ) -> Result<EpochLog>
    where
        P: LatentPrior<f32> + ?Sized,
        R: Rng + ?Sized,
    {
        if data.is_empty() {
            return Err(Error::invalid("empty training set"));
        }
        let epoch = self.epochs_done + 1;
        let mut order: Vec<usize> = (0..data.len()).collect();
        order.shuffle(rng);
        let (mut recon, mut kl, mut objective) = (0.0, 0.0, 0.0);
        for (step, idx) in order.chunks(self.settings.batch_size).enumerate() {
            let batch = data.select(idx);
            self.grads.fill(0.0);
            let pass = elbo_step(
                &self.model.net,
                &self.model.values,
                &batch,
                config,
                prior,
                rng,
                Some(&mut self.grads),
            )?;
            let r: ElboReport = pass.report;
            if !r.objective.is_finite() || self.grads.iter().any(|g| !g.is_finite()) {
                return Err(Error::Diverged {
                    epoch,
                    step,
                    value: r.objective,
                });
            }
            on_batch(idx, &pass.encoder_rows);
            self.adam.step(&mut self.model.values, &self.grads);
            let w = idx.len() as f64;
            recon += r.recon_term * w;
            kl += r.kl_term * w;
            objective += r.objective * w;
        }
        self.epochs_done = epoch;
        let n = data.len() as f64;
        Ok(EpochLog {
            epoch,
            recon_term: recon / n,
            kl_term: kl / n,
            objective: objective / n,
        })
    }
}

/// Trains for `settings.epochs` epochs; `on_epoch` runs after each one
/// (checkpointing, logging) and may abort the run by returning an error.
pub fn train<P, R>(
    model: ModelParams<f32>,
    data: &ImageBatch<f32>,
    config: &VariantConfig,
    settings: &TrainSettings,
    prior: &P,
    rng: &mut R,
    mut on_epoch: impl FnMut(&ModelParams<f32>, &EpochLog) -> Result<()>,
) -> Result<(ModelParams<f32>, Vec<EpochLog>)>
where
    P: LatentPrior<f32> + ?Sized,
    R: Rng + ?Sized,
{
    config.validate()?;
    let mut trainer = Trainer::new(model, settings.clone())?;
    let mut logs = Vec::with_capacity(settings.epochs);
    for _ in 0..settings.epochs {
        let log = trainer.run_epoch(data, config, prior, rng, |_, _| {})?;
        on_epoch(&trainer.model, &log)?;
        logs.push(log);
    }
    Ok((trainer.model, logs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::Geometry;
    use crate::models::elbo::StandardNormalPrior;
    use crate::models::network::ArchConfig;
    use crate::models::variant::{Variant, VariantConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup() -> (ModelParams<f32>, ImageBatch<f32>) {
        let arch = ArchConfig {
            conv_channels: vec![4, 4],
            latent_dim: 2,
        };
        let g = Geometry::new(8, 8, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let model = ModelParams::init(g, arch, &mut rng).unwrap();
        let data = ImageBatch::new(g, (0..40 * 192).map(|_| rng.random::<f32>()).collect()).unwrap();
        (model, data)
    }

    fn settings(epochs: usize) -> TrainSettings {
        TrainSettings {
            epochs,
            batch_size: 16,
            learning_rate: 1e-3,
        }
    }

    #[test]
    fn zero_epochs_leaves_params() {
        let (model, data) = setup();
        let cfg = VariantConfig::new(Variant::Vae);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (out, logs) = train(model.clone(), &data, &cfg, &settings(0), &StandardNormalPrior, &mut rng, |_, _| Ok(())).unwrap();
        assert_eq!(out, model);
        assert!(logs.is_empty());
    }

    #[test]
    fn same_seed_same_params() {
        let (model, data) = setup();
        let cfg = VariantConfig::new(Variant::JigsawVae);
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            train(model.clone(), &data, &cfg, &settings(2), &StandardNormalPrior, &mut rng, |_, _| Ok(())).unwrap()
        };
        let (a, la) = run();
        let (b, lb) = run();
        assert_eq!(a.values, b.values);
        assert_eq!(la, lb);
        assert_ne!(a.values, model.values);
    }

    #[test]
    fn callback_errors_abort() {
        let (model, data) = setup();
        let cfg = VariantConfig::new(Variant::Vae);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = train(model, &data, &cfg, &settings(3), &StandardNormalPrior, &mut rng, |_, log| {
            if log.epoch == 2 {
                Err(Error::invalid("stop"))
            } else {
                Ok(())
            }
        });
        assert!(r.is_err());
    }

    #[test]
    fn nan_parameters_report_divergence() {
        let (mut model, data) = setup();
        model.values[0] = f32::NAN;
        let cfg = VariantConfig::new(Variant::Vae);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = train(model, &data, &cfg, &settings(1), &StandardNormalPrior, &mut rng, |_, _| Ok(()));
        assert!(matches!(r, Err(Error::Diverged { epoch: 1, step: 0, .. })));
    }

    #[test]
    fn log_csv_has_header_and_rows() {
        let logs = [EpochLog {
            epoch: 1,
            recon_term: -1.5,
            kl_term: 0.25,
            objective: -1.75,
        }];
        assert_eq!(epoch_log_csv(&logs), "epoch,recon_term,kl_term,objective\n1,-1.5,0.25,-1.75\n");
    }
}
