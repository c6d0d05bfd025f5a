//! Clustering with a Gaussian-mixture latent prior.
//!
//! Training runs a few warm-up epochs against `N(0, I)`, seeds the mixture
//! with k-means++ on the encoder means, then alternates epochs of gradient
//! steps on the mixture bound with a soft M-step on the posteriors seen
//! during that epoch. Components whose weight drops below the truncation
//! threshold are switched off for good. The variant's input layer (jigsaw,
//! noise, mixup) wraps the encoder during training exactly as for the plain
//! models; assignment uses clean inputs and the encoder mean.

mod kmeans;
mod mixture;

pub use kmeans::{kmeans, KMeans};
pub use mixture::{MixtureLatentState, MixturePrior};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::ImageBatch;
use crate::models::{
    ArchConfig, Checkpoint, EpochLog, ModelParams, StandardNormalPrior, TrainSettings, Trainer, VariantConfig,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterSettings {
    pub k: usize,
    pub warmup_epochs: usize,
    pub truncation_threshold: f64,
    pub kmeans_iterations: usize,
    pub variance_floor: f64,
}

impl Default for ClusterSettings {
    fn default() -> Self {
        Self {
            k: 10,
            warmup_epochs: 5,
            truncation_threshold: 0.01,
            kmeans_iterations: 20,
            variance_floor: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel {
    pub model: ModelParams<f32>,
    pub mixture: MixtureLatentState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAssignment {
    pub sample_id: usize,
    pub responsibilities: Vec<f64>,
    pub hard_label: usize,
}

impl ClusterAssignment {
    pub fn max_responsibility(&self) -> f64 {
        self.responsibilities[self.hard_label]
    }
}

fn argmax_lowest(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Mixture initialized from hard k-means clusters of posterior means.
fn init_mixture<R: Rng + ?Sized>(
    means: &[f64],
    log_variances: &[f64],
    dim: usize,
    settings: &ClusterSettings,
    rng: &mut R,
) -> Result<MixtureLatentState> {
    let mut state = MixtureLatentState::standard(settings.k, dim, settings.truncation_threshold)?;
    let km = kmeans(means, dim, settings.k, settings.kmeans_iterations, rng)?;
    let n = means.len() / dim;
    let mut counts = vec![0usize; settings.k];
    let mut sum_sq = vec![0.0; settings.k * dim];
    for i in 0..n {
        let c = km.labels[i];
        counts[c] += 1;
        for j in 0..dim {
            let diff = means[i * dim + j] - km.centroids[c * dim + j];
            sum_sq[c * dim + j] += log_variances[i * dim + j].exp() + diff * diff;
        }
    }
    for c in 0..settings.k {
        state.weights[c] = counts[c] as f64 / n as f64;
        for j in 0..dim {
            state.means[c * dim + j] = km.centroids[c * dim + j];
            let var = if counts[c] > 0 { sum_sq[c * dim + j] / counts[c] as f64 } else { 1.0 };
            state.log_variances[c * dim + j] = var.max(settings.variance_floor).ln();
        }
    }
    state.truncate();
    Ok(state)
}

fn rows_to_f64(m: &[f32]) -> Vec<f64> {
    m.iter().map(|&v| v as f64).collect()
}

/// Trains a mixture-prior VAE. `settings.epochs` counts all epochs,
/// warm-up included. `on_epoch` runs after every epoch; during warm-up the
/// mixture passed to it is `None`.
#[allow(clippy::too_many_arguments)]
pub fn train_cluster_vae<R: Rng + ?Sized>(
    data: &ImageBatch<f32>,
    variant: &VariantConfig,
    arch: ArchConfig,
    settings: &TrainSettings,
    cluster: &ClusterSettings,
    rng: &mut R,
    mut on_epoch: impl FnMut(&ModelParams<f32>, Option<&MixtureLatentState>, &EpochLog) -> Result<()>,
) -> Result<(ClusterModel, Vec<EpochLog>)> {
    variant.validate()?;
    if cluster.k < 2 {
        return Err(Error::invalid(format!("clustering needs K >= 2, got {}", cluster.k)));
    }
    if cluster.warmup_epochs >= settings.epochs {
        return Err(Error::invalid("clustering needs at least one epoch after warm-up"));
    }
    let model = ModelParams::init(data.geometry(), arch, rng)?;
    let dim = model.latent_dim();
    let mut trainer = Trainer::new(model, settings.clone())?;
    let mut logs = Vec::with_capacity(settings.epochs);
    for _ in 0..cluster.warmup_epochs {
        let log = trainer.run_epoch(data, variant, &StandardNormalPrior, rng, |_, _| {})?;
        on_epoch(&trainer.model, None, &log)?;
        logs.push(log);
    }
    let (m, lv) = trainer.model.encode_rows(data)?;
    let mut mixture = init_mixture(&rows_to_f64(&m), &rows_to_f64(&lv), dim, cluster, rng)?;

    let n = data.len();
    let mut seen_m = vec![0.0f64; n * dim];
    let mut seen_lv = vec![0.0f64; n * dim];
    for _ in cluster.warmup_epochs..settings.epochs {
        let prior = MixturePrior { state: &mixture };
        let log = trainer.run_epoch(data, variant, &prior, rng, |idx, rows| {
            for (r, &i) in idx.iter().enumerate() {
                let row = &rows[r * 2 * dim..(r + 1) * 2 * dim];
                for j in 0..dim {
                    seen_m[i * dim + j] = row[j] as f64;
                    seen_lv[i * dim + j] = row[dim + j] as f64;
                }
            }
        })?;
        mixture.m_step(&seen_m, &seen_lv, cluster.variance_floor);
        mixture.validate()?;
        on_epoch(&trainer.model, Some(&mixture), &log)?;
        logs.push(log);
    }
    Ok((
        ClusterModel {
            model: trainer.model,
            mixture,
        },
        logs,
    ))
}

impl ClusterModel {
    /// Responsibilities `∝ pi_k N(mean; mu_k, sigma_k^2)` at the encoder
    /// mean of each clean input; ties resolve to the lowest index.
    pub fn assign(&self, batch: &ImageBatch<f32>) -> Result<Vec<ClusterAssignment>> {
        let d = self.model.latent_dim();
        let means = self.model.encode_means(batch)?;
        Ok(means
            .chunks(d)
            .enumerate()
            .map(|(i, m)| {
                let z: Vec<f64> = m.iter().map(|&v| v as f64).collect();
                let responsibilities = self.mixture.point_responsibilities(&z);
                let hard_label = argmax_lowest(&responsibilities);
                ClusterAssignment {
                    sample_id: i,
                    responsibilities,
                    hard_label,
                }
            })
            .collect())
    }

    /// Decodes each input through its assigned component: the mode of the
    /// product of the posterior and that component's Gaussian.
    pub fn reconstruct_via_cluster(&self, batch: &ImageBatch<f32>) -> Result<ImageBatch<f32>> {
        let d = self.model.latent_dim();
        let (means, log_vars) = self.model.encode_rows(batch)?;
        let assignments = self.assign(batch)?;
        let mut z = Vec::with_capacity(means.len());
        for (i, a) in assignments.iter().enumerate() {
            let mu = self.mixture.mean(a.hard_label);
            let plv = self.mixture.log_variance(a.hard_label);
            for j in 0..d {
                let pq = (-(log_vars[i * d + j] as f64)).exp();
                let pp = (-plv[j]).exp();
                z.push(((means[i * d + j] as f64 * pq + mu[j] * pp) / (pq + pp)) as f32);
            }
        }
        self.model.decode(&z)
    }

    /// Decodes `n` draws from the mixture: a component by weight, then its
    /// Gaussian.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<ImageBatch<f32>> {
        let pick = WeightedIndex::new(&self.mixture.weights).map_err(|e| Error::invalid(e.to_string()))?;
        let d = self.model.latent_dim();
        let mut z = Vec::with_capacity(n * d);
        for _ in 0..n {
            let c = pick.sample(rng);
            let (mu, lv) = (self.mixture.mean(c), self.mixture.log_variance(c));
            for j in 0..d {
                let e: f64 = rng.sample(StandardNormal);
                z.push((mu[j] + (0.5 * lv[j]).exp() * e) as f32);
            }
        }
        self.model.decode(&z)
    }

    pub fn checkpoint(&self, variant: VariantConfig, seed: u64, epoch: usize) -> Checkpoint {
        Checkpoint {
            model: self.model.clone(),
            variant,
            seed,
            epoch,
            extras: self.mixture.to_arrays(),
        }
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        let get = |name: &str| {
            ck.extra(name).ok_or_else(|| Error::Format {
                what: "cluster checkpoint",
                detail: format!("missing `{name}`"),
            })
        };
        let means = get("mixture.means")?;
        let (k, dim) = (means.shape[0], means.shape[1]);
        let f = |a: &crate::models::NamedArray| a.values.iter().map(|&v| v as f64).collect::<Vec<f64>>();
        let mixture = MixtureLatentState {
            k,
            dim,
            means: f(means),
            log_variances: f(get("mixture.log_variances")?),
            weights: f(get("mixture.weights")?),
            active: get("mixture.active")?.values.iter().map(|&v| v != 0.0).collect(),
            truncation_threshold: get("mixture.truncation_threshold")?.values[0] as f64,
        };
        Ok(Self {
            model: ck.model.clone(),
            mixture,
        })
    }
}

pub fn hard_labels(assignments: &[ClusterAssignment]) -> Vec<u32> {
    assignments.iter().map(|a| a.hard_label as u32).collect()
}

/// `sample_id,hard_label,max_responsibility` rows.
pub fn assignments_csv(assignments: &[ClusterAssignment]) -> String {
    let mut out = String::from("sample_id,hard_label,max_responsibility\n");
    for a in assignments {
        out.push_str(&format!("{},{},{}\n", a.sample_id, a.hard_label, a.max_responsibility()));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_ties_go_low() {
        assert_eq!(argmax_lowest(&[0.2, 0.4, 0.4]), 1);
        assert_eq!(argmax_lowest(&[0.5, 0.5]), 0);
    }

    #[test]
    fn csv_format() {
        let a = ClusterAssignment {
            sample_id: 3,
            responsibilities: vec![0.25, 0.75],
            hard_label: 1,
        };
        assert_eq!(assignments_csv(&[a]), "sample_id,hard_label,max_responsibility\n3,1,0.75\n");
    }
}
