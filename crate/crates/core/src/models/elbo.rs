//! Single-sample ELBO estimates for every variant, with analytic gradients.
//!
//! A step is split in two: [`draw_stochastic`] draws everything random
//! (input corruption or permutation, mixup weights, reparameterization
//! noise) and [`evaluate`] is a deterministic function of the parameters
//! given those draws. Gradient checks freeze the draws and difference
//! `evaluate` alone.

use jvae_nn::Real;
use rand::Rng;
use rand::seq::SliceRandom;
use rand_distr::{Beta, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::latent::{kl_diag_gaussian, reparameterize, split_rows};
use super::network::VaeNet;
use super::variant::{Likelihood, Variant, VariantConfig};
use crate::error::{Error, Result};
use crate::image::ImageBatch;
use crate::permutation::{apply_per_sample, PermutationSpec};

/// Batch-averaged ELBO terms: `objective = recon_term - beta * kl_term`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElboReport {
    pub recon_term: f64,
    pub kl_term: f64,
    pub beta: f64,
    pub objective: f64,
}

impl ElboReport {
    pub fn new(recon_term: f64, kl_term: f64, beta: f64) -> Self {
        Self {
            recon_term,
            kl_term,
            beta,
            objective: recon_term - beta * kl_term,
        }
    }
}

/// Prior over the latent code, seen through the KL term of the bound.
pub trait LatentPrior<T: Real> {
    /// KL (or its bound) for one posterior row. With `grads`, adds
    /// `scale * dKL/dmean` and `scale * dKL/dlog_variance`.
    fn kl(&self, mean: &[T], log_variance: &[T], grads: Option<(&mut [T], &mut [T])>, scale: T) -> T;
}

/// `p(z) = N(0, I)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct StandardNormalPrior;

impl<T: Real> LatentPrior<T> for StandardNormalPrior {
    fn kl(&self, mean: &[T], log_variance: &[T], grads: Option<(&mut [T], &mut [T])>, scale: T) -> T {
        if let Some((dm, dlv)) = grads {
            let half = T::lit(0.5);
            for d in 0..mean.len() {
                dm[d] += scale * mean[d];
                dlv[d] += scale * half * (log_variance[d].exp() - T::one());
            }
        }
        kl_diag_gaussian(mean, log_variance)
    }
}

/// Everything random in one step.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticDraws<T> {
    /// What the encoder sees.
    pub input: ImageBatch<T>,
    /// What the decoder must reproduce.
    pub target: ImageBatch<T>,
    /// Reparameterization noise, `n x D`.
    pub noise: Vec<T>,
    pub specs: Vec<PermutationSpec>,
    pub mix_weights: Vec<f64>,
}

pub(crate) fn gaussian_noise<T: Real, R: Rng + ?Sized>(len: usize, std: f64, rng: &mut R) -> Vec<T> {
    (0..len)
        .map(|_| {
            let e: f64 = StandardNormal.sample(rng);
            T::lit(e * std)
        })
        .collect()
}

/// Mixes with explicit weights: `mixed = l * a + (1 - l) * b`, target is
/// `a` when `l >= 0.5`, else `b`.
pub fn mixup_with_weights<T: Real>(
    x_a: &ImageBatch<T>,
    x_b: &ImageBatch<T>,
    weights: &[f64],
) -> Result<(ImageBatch<T>, ImageBatch<T>)> {
    if x_a.geometry() != x_b.geometry() || x_a.len() != x_b.len() || weights.len() != x_a.len() {
        return Err(Error::dims("mixup needs two batches of equal geometry and length"));
    }
    let mut mixed = ImageBatch::zeros(x_a.geometry(), x_a.len());
    let mut target = ImageBatch::zeros(x_a.geometry(), x_a.len());
    for (i, &l) in weights.iter().enumerate() {
        let (a, b) = (x_a.sample(i), x_b.sample(i));
        let lam = T::lit(l);
        let rest = T::lit(1.0 - l);
        for (m, (&va, &vb)) in mixed.sample_mut(i).iter_mut().zip(a.iter().zip(b)) {
            *m = lam * va + rest * vb;
        }
        target.sample_mut(i).copy_from_slice(if l >= 0.5 { a } else { b });
    }
    Ok((mixed, target))
}

/// Draws `l ~ Beta(alpha, alpha)` per sample pair and applies
/// [`mixup_with_weights`]; returns `(mixed, target, weights)`.
pub fn mixup_batch<T: Real, R: Rng + ?Sized>(
    x_a: &ImageBatch<T>,
    x_b: &ImageBatch<T>,
    alpha: f64,
    rng: &mut R,
) -> Result<(ImageBatch<T>, ImageBatch<T>, Vec<f64>)> {
    let beta = Beta::new(alpha, alpha).map_err(|e| Error::invalid(format!("mixup alpha {alpha}: {e}")))?;
    let weights: Vec<f64> = (0..x_a.len()).map(|_| beta.sample(rng)).collect();
    let (mixed, target) = mixup_with_weights(x_a, x_b, &weights)?;
    Ok((mixed, target, weights))
}

pub fn draw_stochastic<T: Real, R: Rng + ?Sized>(
    batch: &ImageBatch<T>,
    config: &VariantConfig,
    latent_dim: usize,
    rng: &mut R,
) -> Result<StochasticDraws<T>> {
    config.validate()?;
    let mut specs = Vec::new();
    let mut mix_weights = Vec::new();
    let (input, target) = match config.variant {
        Variant::Vae | Variant::BetaVae => (batch.clone(), batch.clone()),
        Variant::DVae => {
            let mut noisy = batch.clone();
            let noise: Vec<T> = gaussian_noise(noisy.as_slice().len(), config.noise_std, rng);
            for (v, e) in noisy.as_mut_slice().iter_mut().zip(noise) {
                *v += e;
            }
            (noisy, batch.clone())
        }
        Variant::MixupVae => {
            let mut partner: Vec<usize> = (0..batch.len()).collect();
            partner.shuffle(rng);
            let x_b = batch.select(&partner);
            let (mixed, target, w) = mixup_batch(batch, &x_b, config.mixup_alpha, rng)?;
            mix_weights = w;
            (mixed, target)
        }
        Variant::JigsawVae | Variant::JigsawBetaVae => {
            let (grid, channels) = config
                .jigsaw_layer(batch.geometry())?
                .expect("jigsaw variant has a layer");
            let (permuted, drawn) = apply_per_sample(batch, grid, channels, rng)?;
            specs = drawn;
            (permuted, batch.clone())
        }
    };
    let noise = gaussian_noise(batch.len() * latent_dim, 1.0, rng);
    Ok(StochasticDraws {
        input,
        target,
        noise,
        specs,
        mix_weights,
    })
}

/// Result of one evaluation: the report plus raw encoder rows
/// (`[mean | log_variance]` per sample) for callers that need them.
#[derive(Debug, Clone)]
pub struct ElboPass<T> {
    pub report: ElboReport,
    pub encoder_rows: Vec<T>,
}

/// Evaluates the batch-mean bound. With `grads`, accumulates the gradient
/// of the loss `-objective` with respect to the network parameters.
pub fn evaluate<T: Real, P: LatentPrior<T> + ?Sized>(
    net: &VaeNet,
    params: &[T],
    draws: &StochasticDraws<T>,
    config: &VariantConfig,
    prior: &P,
    grads: Option<&mut [T]>,
) -> Result<ElboPass<T>> {
    let n = draws.input.len();
    let dim = net.latent_dim();
    if n == 0 {
        return Err(Error::invalid("empty batch"));
    }
    if draws.target.len() != n || draws.noise.len() != n * dim {
        return Err(Error::dims("draws are inconsistent with the batch"));
    }
    let beta = config.effective_beta();
    let var = config.likelihood_std * config.likelihood_std;
    let (rows, enc_tape) = net.encoder_forward(params, &draws.input)?;
    let (mean, log_var) = split_rows(dim, &rows);
    let z: Vec<T> = (0..n * dim)
        .map(|j| reparameterize(mean[j], log_var[j], draws.noise[j]))
        .collect();
    let (recon, dec_tape) = net.decoder_forward(params, &z)?;

    let recon_sum = match config.likelihood {
        Likelihood::Gaussian => {
            let log_norm = 0.5 * net.geometry.pixels() as f64 * (2.0 * std::f64::consts::PI * var).ln();
            recon
                .samples()
                .zip(draws.target.samples())
                .map(|(xh, x)| {
                    let sq: f64 = xh.iter().zip(x).map(|(&a, &b)| (a - b).as_f64().powi(2)).sum();
                    -0.5 * sq / var - log_norm
                })
                .sum::<f64>()
        }
        Likelihood::Bernoulli => {
            // x log(sigmoid(l)) + (1 - x) log(1 - sigmoid(l)) = x l - softplus(l)
            let logits = dec_tape.logits(net.geometry);
            logits
                .iter()
                .zip(draws.target.as_slice())
                .map(|(&l, &x)| {
                    let l = l.as_f64();
                    x.as_f64() * l - (l.max(0.0) + (-l.abs()).exp().ln_1p())
                })
                .sum::<f64>()
        }
    };

    let want_grads = grads.is_some();
    let scale = T::lit(beta / n as f64);
    let mut d_mean = vec![T::zero(); n * dim];
    let mut d_lv = vec![T::zero(); n * dim];
    let mut kl_sum = 0.0;
    for i in 0..n {
        let r = i * dim..(i + 1) * dim;
        let g = if want_grads {
            Some((&mut d_mean[r.clone()], &mut d_lv[r.clone()]))
        } else {
            None
        };
        kl_sum += prior.kl(&mean[r.clone()], &log_var[r.clone()], g, scale).as_f64();
    }
    let report = ElboReport::new(recon_sum / n as f64, kl_sum / n as f64, beta);

    if let Some(grads) = grads {
        let residual = |inv: T| -> Vec<T> {
            recon
                .as_slice()
                .iter()
                .zip(draws.target.as_slice())
                .map(|(&xh, &x)| (xh - x) * inv)
                .collect()
        };
        let dz = match config.likelihood {
            Likelihood::Gaussian => {
                let d_img = residual(T::lit(1.0 / (var * n as f64)));
                net.decoder_backward(params, &dec_tape, &d_img, grads)
            }
            Likelihood::Bernoulli => {
                let d_logits = residual(T::lit(1.0 / n as f64));
                net.decoder_backward_logits(params, &dec_tape, &d_logits, grads)
            }
        };
        let half = T::lit(0.5);
        let mut d_rows = vec![T::zero(); n * 2 * dim];
        for i in 0..n {
            for d in 0..dim {
                let j = i * dim + d;
                let sigma = (half * log_var[j]).exp();
                d_rows[i * 2 * dim + d] = d_mean[j] + dz[j];
                d_rows[i * 2 * dim + dim + d] = d_lv[j] + dz[j] * draws.noise[j] * half * sigma;
            }
        }
        net.encoder_backward(params, &enc_tape, &d_rows, grads);
    }
    Ok(ElboPass {
        report,
        encoder_rows: rows,
    })
}

/// Draw then evaluate: one Monte Carlo sample of the variant's bound.
pub fn elbo_step<T: Real, P: LatentPrior<T> + ?Sized, R: Rng + ?Sized>(
    net: &VaeNet,
    params: &[T],
    batch: &ImageBatch<T>,
    config: &VariantConfig,
    prior: &P,
    rng: &mut R,
    grads: Option<&mut [T]>,
) -> Result<ElboPass<T>> {
    let draws = draw_stochastic(batch, config, net.latent_dim(), rng)?;
    evaluate(net, params, &draws, config, prior, grads)
}
