//! Diagonal Gaussian posteriors and their KL divergence to priors.

use jvae_nn::Real;

use crate::error::{Error, Result};

/// A batch of diagonal Gaussian posteriors stored row-major (`n x dim`),
/// with the noise and sample of one reparameterized draw.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianLatent<T> {
    pub dim: usize,
    pub mean: Vec<T>,
    pub log_variance: Vec<T>,
    pub sample: Vec<T>,
    pub noise: Vec<T>,
}

#[inline]
pub fn reparameterize<T: Real>(mean: T, log_variance: T, noise: T) -> T {
    mean + (T::lit(0.5) * log_variance).exp() * noise
}

impl<T: Real> GaussianLatent<T> {
    pub fn from_parts(dim: usize, mean: Vec<T>, log_variance: Vec<T>, noise: Vec<T>) -> Result<Self> {
        if dim == 0 || mean.len() % dim != 0 || log_variance.len() != mean.len() || noise.len() != mean.len() {
            return Err(Error::dims(format!(
                "latent parts of lengths {}/{}/{} do not form rows of {dim}",
                mean.len(),
                log_variance.len(),
                noise.len()
            )));
        }
        let sample = mean
            .iter()
            .zip(&log_variance)
            .zip(&noise)
            .map(|((&m, &lv), &e)| reparameterize(m, lv, e))
            .collect();
        Ok(Self {
            dim,
            mean,
            log_variance,
            sample,
            noise,
        })
    }

    /// Splits encoder rows `[mean | log_variance]` and draws with `noise`.
    pub fn from_encoder_rows(dim: usize, rows: &[T], noise: Vec<T>) -> Result<Self> {
        let (mean, log_variance) = split_rows(dim, rows);
        Self::from_parts(dim, mean, log_variance, noise)
    }

    pub fn len(&self) -> usize {
        self.mean.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    pub fn row<'a>(&self, v: &'a [T], i: usize) -> &'a [T] {
        &v[i * self.dim..(i + 1) * self.dim]
    }

    pub fn kl_to_standard_normal(&self, i: usize) -> T {
        kl_diag_gaussian(self.row(&self.mean, i), self.row(&self.log_variance, i))
    }
}

pub fn split_rows<T: Real>(dim: usize, rows: &[T]) -> (Vec<T>, Vec<T>) {
    let mut mean = Vec::with_capacity(rows.len() / 2);
    let mut log_variance = Vec::with_capacity(rows.len() / 2);
    for row in rows.chunks(2 * dim) {
        mean.extend_from_slice(&row[..dim]);
        log_variance.extend_from_slice(&row[dim..]);
    }
    (mean, log_variance)
}

/// `KL(N(mean, exp(log_variance)) || N(0, I)) = -1/2 sum(1 + log s^2 - m^2 - s^2)`.
pub fn kl_diag_gaussian<T: Real>(mean: &[T], log_variance: &[T]) -> T {
    let half = T::lit(0.5);
    mean.iter()
        .zip(log_variance)
        .map(|(&m, &lv)| -half * (T::one() + lv - m * m - lv.exp()))
        .sum()
}

/// KL between two diagonal Gaussians, `q = N(m, exp(lv))` and
/// `p = N(mu, exp(plv))`, with its partial derivatives accumulated
/// (times `scale`) into the four gradient slices.
#[allow(clippy::too_many_arguments)]
pub fn kl_diag_pair<T: Real>(
    m: &[T],
    lv: &[T],
    mu: &[T],
    plv: &[T],
    mut grads: Option<(&mut [T], &mut [T], &mut [T], &mut [T])>,
    scale: T,
) -> T {
    let half = T::lit(0.5);
    let mut kl = T::zero();
    for d in 0..m.len() {
        let var_q = lv[d].exp();
        let inv_p = (-plv[d]).exp();
        let diff = m[d] - mu[d];
        let ratio = (var_q + diff * diff) * inv_p;
        kl += half * (plv[d] - lv[d] + ratio - T::one());
        if let Some((dm, dlv, dmu, dplv)) = grads.as_mut() {
            dm[d] += scale * diff * inv_p;
            dlv[d] += scale * half * (var_q * inv_p - T::one());
            dmu[d] -= scale * diff * inv_p;
            dplv[d] += scale * half * (T::one() - ratio);
        }
    }
    kl
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kl_examples() {
        assert_eq!(kl_diag_gaussian(&[0.0f64; 3], &[0.0; 3]), 0.0);
        assert!((kl_diag_gaussian(&[1.0f64], &[0.0]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn pair_kl_reduces_to_standard_normal_case() {
        let m = [0.3f64, -1.2];
        let lv = [0.4, -0.7];
        let pair = kl_diag_pair(&m, &lv, &[0.0; 2], &[0.0; 2], None, 1.0);
        assert!((pair - kl_diag_gaussian(&m, &lv)).abs() < 1e-14);
    }

    #[test]
    fn pair_kl_gradients_match_differences() {
        let base = [0.3f64, -0.2, 0.5, 0.1, -0.4, 0.7, 0.2, -0.3];
        let f = |v: &[f64]| kl_diag_pair(&v[0..2], &v[2..4], &v[4..6], &v[6..8], None, 1.0);
        let (mut a, mut b, mut c, mut d) = ([0.0; 2], [0.0; 2], [0.0; 2], [0.0; 2]);
        kl_diag_pair(&base[0..2], &base[2..4], &base[4..6], &base[6..8], Some((&mut a, &mut b, &mut c, &mut d)), 1.0);
        let analytic: Vec<f64> = [a, b, c, d].concat();
        for i in 0..8 {
            let mut up = base;
            let mut dn = base;
            up[i] += 1e-6;
            dn[i] -= 1e-6;
            let fd = (f(&up) - f(&dn)) / 2e-6;
            assert!((fd - analytic[i]).abs() < 1e-8, "coordinate {i}");
        }
    }

    #[test]
    fn zero_noise_gives_mean() {
        let l = GaussianLatent::from_parts(2, vec![0.5f64, -1.0], vec![3.0, -2.0], vec![0.0; 2]).unwrap();
        assert_eq!(l.sample, l.mean);
        assert!(GaussianLatent::from_parts(2, vec![0.0f64; 3], vec![0.0; 3], vec![0.0; 3]).is_err());
    }
}
