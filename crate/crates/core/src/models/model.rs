//! Trained parameters plus the inference-time operations on them.

use jvae_nn::{cast_params, Real};
use rand::Rng;

use super::elbo::gaussian_noise;
use super::latent::{split_rows, GaussianLatent};
use super::network::{ArchConfig, VaeNet};
use crate::datasets::LabeledImageSet;
use crate::error::{Error, Result};
use crate::image::{Geometry, ImageBatch};

/// Images per forward pass when sweeping a whole dataset.
const EVAL_CHUNK: usize = 256;

/// Network plus flat parameter vector. The encoder (`phi`) occupies the
/// leading `encoder_len` values, the decoder (`theta`) the rest.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<T = f32> {
    pub net: VaeNet,
    pub values: Vec<T>,
}

impl<T: Real> ModelParams<T> {
    pub fn init<R: Rng + ?Sized>(geometry: Geometry, arch: ArchConfig, rng: &mut R) -> Result<Self> {
        let net = VaeNet::new(geometry, arch)?;
        let values = net.init_params(rng);
        Ok(Self { net, values })
    }

    pub fn from_values(net: VaeNet, values: Vec<T>) -> Result<Self> {
        if values.len() != net.param_count() {
            return Err(Error::dims(format!(
                "{} parameter values for a network of {}",
                values.len(),
                net.param_count()
            )));
        }
        Ok(Self { net, values })
    }

    pub fn geometry(&self) -> Geometry {
        self.net.geometry
    }

    pub fn latent_dim(&self) -> usize {
        self.net.latent_dim()
    }

    pub fn encoder_params(&self) -> &[T] {
        &self.values[..self.net.encoder_param_count()]
    }

    pub fn decoder_params(&self) -> &[T] {
        &self.values[self.net.encoder_param_count()..]
    }

    pub fn cast<U: Real>(&self) -> ModelParams<U> {
        ModelParams {
            net: self.net.clone(),
            values: cast_params(&self.values),
        }
    }

    /// Posterior parameters with the given noise (`n x D`).
    pub fn encode_with_noise(&self, batch: &ImageBatch<T>, noise: Vec<T>) -> Result<GaussianLatent<T>> {
        let (rows, _) = self.net.encoder_forward(&self.values, batch)?;
        GaussianLatent::from_encoder_rows(self.latent_dim(), &rows, noise)
    }

    /// Posterior parameters and one reparameterized draw with fresh noise.
    pub fn encode<R: Rng + ?Sized>(&self, batch: &ImageBatch<T>, rng: &mut R) -> Result<GaussianLatent<T>> {
        let noise = gaussian_noise(batch.len() * self.latent_dim(), 1.0, rng);
        self.encode_with_noise(batch, noise)
    }

    /// Encoder means (`n x D`), processed in chunks.
    pub fn encode_means(&self, batch: &ImageBatch<T>) -> Result<Vec<T>> {
        Ok(self.encode_rows(batch)?.0)
    }

    /// Encoder means and log-variances (`n x D` each), processed in chunks.
    pub fn encode_rows(&self, batch: &ImageBatch<T>) -> Result<(Vec<T>, Vec<T>)> {
        let d = self.latent_dim();
        let mut means = Vec::with_capacity(batch.len() * d);
        let mut log_vars = Vec::with_capacity(batch.len() * d);
        for start in (0..batch.len()).step_by(EVAL_CHUNK) {
            let chunk = batch.range(start, (start + EVAL_CHUNK).min(batch.len()));
            let (rows, _) = self.net.encoder_forward(&self.values, &chunk)?;
            let (m, lv) = split_rows(d, &rows);
            means.extend(m);
            log_vars.extend(lv);
        }
        Ok((means, log_vars))
    }

    pub fn decode(&self, z: &[T]) -> Result<ImageBatch<T>> {
        let mut out = ImageBatch::empty(self.geometry());
        let d = self.latent_dim();
        if z.len() % d != 0 {
            return Err(Error::dims(format!("latent array of {} is not a multiple of D = {d}", z.len())));
        }
        for chunk in z.chunks(EVAL_CHUNK * d) {
            let (images, _) = self.net.decoder_forward(&self.values, chunk)?;
            for image in images.samples() {
                out.push(image)?;
            }
        }
        Ok(out)
    }

    /// Decodes `n` draws from `N(0, I)`.
    pub fn sample_prior<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<ImageBatch<T>> {
        let z = gaussian_noise(n * self.latent_dim(), 1.0, rng);
        self.decode(&z)
    }

    /// Mean reconstruction: decode of the encoder mean.
    pub fn reconstruct(&self, batch: &ImageBatch<T>) -> Result<ImageBatch<T>> {
        let z = self.encode_means(batch)?;
        self.decode(&z)
    }

    /// Decodes `steps` evenly spaced points between the mean codes of `x_a`
    /// and `x_b` (single images). Every frame is decoded on its own, so the
    /// endpoints are bit-equal to single-image reconstructions.
    pub fn interpolate(&self, x_a: &[T], x_b: &[T], steps: usize) -> Result<ImageBatch<T>> {
        if steps < 2 {
            return Err(Error::invalid(format!("interpolation needs at least 2 steps, got {steps}")));
        }
        let g = self.geometry();
        let pair = ImageBatch::new(g, [x_a, x_b].concat())?;
        let z_a = self.encode_means(&pair.range(0, 1))?;
        let z_b = self.encode_means(&pair.range(1, 2))?;
        let mut out = ImageBatch::empty(g);
        for s in 0..steps {
            let t = s as f64 / (steps - 1) as f64;
            let z: Vec<T> = if s == 0 {
                z_a.clone()
            } else if s + 1 == steps {
                z_b.clone()
            } else {
                let (ta, tb) = (T::lit(1.0 - t), T::lit(t));
                z_a.iter().zip(&z_b).map(|(&a, &b)| ta * a + tb * b).collect()
            };
            out.push(self.decode(&z)?.sample(0))?;
        }
        Ok(out)
    }

    /// Mean squared error between inputs and their mean reconstructions.
    pub fn reconstruction_mse(&self, images: &ImageBatch<T>) -> Result<f64> {
        if images.is_empty() {
            return Err(Error::invalid("empty image set"));
        }
        let recon = self.reconstruct(images)?;
        Ok(mean_squared_error(images, &recon))
    }
}

impl ModelParams<f32> {
    pub fn reconstruction_mse_of_set(&self, set: &LabeledImageSet) -> Result<f64> {
        self.reconstruction_mse(&set.images)
    }
}

pub fn mean_squared_error<T: Real>(a: &ImageBatch<T>, b: &ImageBatch<T>) -> f64 {
    let sum: f64 = a
        .as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(&x, &y)| (x.as_f64() - y.as_f64()).powi(2))
        .sum();
    sum / a.as_slice().len() as f64
}
