//! Gaussian-mixture prior over the latent code, with hard truncation of
//! low-weight components.

use jvae_nn::act::log_sum_exp;
use jvae_nn::Real;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{kl_diag_pair, LatentPrior, NamedArray};

/// Mixture `sum_k pi_k N(mu_k, diag(exp(log_var_k)))` over active
/// components. Inactive components have weight exactly zero and never
/// return.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureLatentState {
    pub k: usize,
    pub dim: usize,
    /// `k x dim`, row-major.
    pub means: Vec<f64>,
    /// `k x dim`, row-major.
    pub log_variances: Vec<f64>,
    pub weights: Vec<f64>,
    pub active: Vec<bool>,
    pub truncation_threshold: f64,
}

impl MixtureLatentState {
    /// `k` standard-normal components with equal weight.
    pub fn standard(k: usize, dim: usize, truncation_threshold: f64) -> Result<Self> {
        if k < 2 {
            return Err(Error::invalid(format!("a mixture prior needs K >= 2, got {k}")));
        }
        if !(truncation_threshold > 0.0 && truncation_threshold < 1.0) {
            return Err(Error::invalid("truncation threshold must lie in (0, 1)"));
        }
        Ok(Self {
            k,
            dim,
            means: vec![0.0; k * dim],
            log_variances: vec![0.0; k * dim],
            weights: vec![1.0 / k as f64; k],
            active: vec![true; k],
            truncation_threshold,
        })
    }

    pub fn mean(&self, c: usize) -> &[f64] {
        &self.means[c * self.dim..(c + 1) * self.dim]
    }

    pub fn log_variance(&self, c: usize) -> &[f64] {
        &self.log_variances[c * self.dim..(c + 1) * self.dim]
    }

    pub fn active_count(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }

    /// Deactivates every component whose weight is below the threshold and
    /// renormalizes the rest. The heaviest component always survives.
    pub fn truncate(&mut self) {
        let best = (0..self.k)
            .filter(|&c| self.active[c])
            .fold(None, |acc: Option<usize>, c| match acc {
                Some(b) if self.weights[b] >= self.weights[c] => Some(b),
                _ => Some(c),
            });
        for c in 0..self.k {
            if self.active[c] && self.weights[c] < self.truncation_threshold && Some(c) != best {
                self.active[c] = false;
            }
            if !self.active[c] {
                self.weights[c] = 0.0;
            }
        }
        let total: f64 = self.weights.iter().sum();
        for w in &mut self.weights {
            *w /= total;
        }
    }

    /// Posterior-side responsibilities for one posterior row: the weights
    /// `gamma_k ∝ pi_k exp(-KL(q || N_k))` of the mixture bound, written to
    /// `out`. Returns the bound `-log sum_k pi_k exp(-KL_k)`.
    pub fn bound_responsibilities(&self, mean: &[f64], log_variance: &[f64], out: &mut [f64]) -> f64 {
        let mut scores = vec![f64::NEG_INFINITY; self.k];
        for c in 0..self.k {
            if self.active[c] {
                let kl = kl_diag_pair(mean, log_variance, self.mean(c), self.log_variance(c), None, 1.0);
                scores[c] = self.weights[c].ln() - kl;
            }
        }
        let lse = log_sum_exp(&scores);
        for (o, s) in out.iter_mut().zip(&scores) {
            *o = (s - lse).exp();
        }
        -lse
    }

    /// `pi_k N(z; mu_k, sigma_k^2)` normalized over active components.
    pub fn point_responsibilities(&self, z: &[f64]) -> Vec<f64> {
        let log_2pi = (2.0 * std::f64::consts::PI).ln();
        let scores: Vec<f64> = (0..self.k)
            .map(|c| {
                if !self.active[c] {
                    return f64::NEG_INFINITY;
                }
                let ll: f64 = z
                    .iter()
                    .zip(self.mean(c))
                    .zip(self.log_variance(c))
                    .map(|((&x, &mu), &lv)| -0.5 * (log_2pi + lv + (x - mu).powi(2) * (-lv).exp()))
                    .sum();
                self.weights[c].ln() + ll
            })
            .collect();
        let lse = log_sum_exp(&scores);
        scores
            .iter()
            .map(|&s| if s == f64::NEG_INFINITY { 0.0 } else { (s - lse).exp() })
            .collect()
    }

    /// Soft M-step of the mixture bound given posterior rows (`n x dim`
    /// means and log-variances): weights, means and variances that maximize
    /// the bound with the responsibilities held fixed. Variances are floored
    /// at `variance_floor`. Truncates afterwards.
    pub fn m_step(&mut self, means: &[f64], log_variances: &[f64], variance_floor: f64) {
        let d = self.dim;
        let n = means.len() / d;
        let mut resp = vec![0.0; self.k];
        let mut mass = vec![0.0; self.k];
        let mut sum_m = vec![0.0; self.k * d];
        let mut sum_sq = vec![0.0; self.k * d];
        for i in 0..n {
            let m = &means[i * d..(i + 1) * d];
            let lv = &log_variances[i * d..(i + 1) * d];
            self.bound_responsibilities(m, lv, &mut resp);
            for c in 0..self.k {
                let g = resp[c];
                if g == 0.0 {
                    continue;
                }
                mass[c] += g;
                for j in 0..d {
                    sum_m[c * d + j] += g * m[j];
                    sum_sq[c * d + j] += g * (lv[j].exp() + m[j] * m[j]);
                }
            }
        }
        for c in 0..self.k {
            if !self.active[c] || mass[c] <= 0.0 {
                self.weights[c] = 0.0;
                continue;
            }
            self.weights[c] = mass[c] / n as f64;
            for j in 0..d {
                let mu = sum_m[c * d + j] / mass[c];
                let var = (sum_sq[c * d + j] / mass[c] - mu * mu).max(variance_floor);
                self.means[c * d + j] = mu;
                self.log_variances[c * d + j] = var.ln();
            }
        }
        self.truncate();
    }

    pub fn validate(&self) -> Result<()> {
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-6 || self.weights.iter().any(|&w| w < 0.0) {
            return Err(Error::invalid(format!("mixture weights are off the simplex (sum {total})")));
        }
        if self.means.len() != self.k * self.dim || self.log_variances.len() != self.k * self.dim {
            return Err(Error::dims("mixture arrays do not match K x D"));
        }
        Ok(())
    }

    pub fn to_arrays(&self) -> Vec<NamedArray> {
        let f = |v: &[f64]| v.iter().map(|&x| x as f32).collect::<Vec<f32>>();
        vec![
            NamedArray {
                name: "mixture.means".into(),
                shape: vec![self.k, self.dim],
                values: f(&self.means),
            },
            NamedArray {
                name: "mixture.log_variances".into(),
                shape: vec![self.k, self.dim],
                values: f(&self.log_variances),
            },
            NamedArray {
                name: "mixture.weights".into(),
                shape: vec![self.k],
                values: f(&self.weights),
            },
            NamedArray {
                name: "mixture.active".into(),
                shape: vec![self.k],
                values: self.active.iter().map(|&a| if a { 1.0 } else { 0.0 }).collect(),
            },
            NamedArray {
                name: "mixture.truncation_threshold".into(),
                shape: vec![1],
                values: vec![self.truncation_threshold as f32],
            },
        ]
    }
}

/// The mixture as a [`LatentPrior`]: the KL term is replaced by the upper
/// bound `-log sum_k pi_k exp(-KL(q || N_k))`. Its gradient with respect to
/// the posterior is `sum_k gamma_k dKL_k`, with `gamma` the normalized terms.
#[derive(Debug, Clone)]
pub struct MixturePrior<'a> {
    pub state: &'a MixtureLatentState,
}

impl<T: Real> LatentPrior<T> for MixturePrior<'_> {
    fn kl(&self, mean: &[T], log_variance: &[T], grads: Option<(&mut [T], &mut [T])>, scale: T) -> T {
        let s = self.state;
        let m: Vec<f64> = mean.iter().map(|v| v.as_f64()).collect();
        let lv: Vec<f64> = log_variance.iter().map(|v| v.as_f64()).collect();
        let mut gamma = vec![0.0; s.k];
        let bound = s.bound_responsibilities(&m, &lv, &mut gamma);
        if let Some((dm, dlv)) = grads {
            let d = s.dim;
            let mut gm = vec![0.0; d];
            let mut glv = vec![0.0; d];
            let mut scratch_mu = vec![0.0; d];
            let mut scratch_lv = vec![0.0; d];
            for c in 0..s.k {
                if gamma[c] > 0.0 {
                    kl_diag_pair(
                        &m,
                        &lv,
                        s.mean(c),
                        s.log_variance(c),
                        Some((&mut gm, &mut glv, &mut scratch_mu, &mut scratch_lv)),
                        gamma[c],
                    );
                }
            }
            for j in 0..d {
                dm[j] += scale * T::lit(gm[j]);
                dlv[j] += scale * T::lit(glv[j]);
            }
        }
        T::lit(bound)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_component() -> MixtureLatentState {
        let mut s = MixtureLatentState::standard(3, 2, 0.01).unwrap();
        s.means = vec![-3.0, 0.0, 3.0, 0.0, 0.0, 10.0];
        s.log_variances = vec![0.0, 0.0, -1.0, 0.5, 0.0, 0.0];
        s.weights = vec![0.3, 0.7, 0.0];
        s.active = vec![true, true, false];
        s
    }

    #[test]
    fn rejects_bad_k_and_threshold() {
        assert!(MixtureLatentState::standard(1, 2, 0.01).is_err());
        assert!(MixtureLatentState::standard(3, 2, 1.0).is_err());
    }

    #[test]
    fn single_effective_component_matches_pair_kl() {
        let mut s = two_component();
        s.weights = vec![1.0, 0.0, 0.0];
        s.active = vec![true, false, false];
        let m = [0.4, -0.2];
        let lv = [0.1, -0.3];
        let mut g = [0.0; 3];
        let bound = s.bound_responsibilities(&m, &lv, &mut g);
        let pair = kl_diag_pair(&m, &lv, s.mean(0), s.log_variance(0), None, 1.0);
        assert!((bound - pair).abs() < 1e-12);
        assert_eq!(g, [1.0, 0.0, 0.0]);
    }

    #[test]
    fn prior_gradient_matches_differences() {
        let s = two_component();
        let prior = MixturePrior { state: &s };
        let m = [1.0f64, 0.3];
        let lv = [-0.2f64, 0.4];
        let mut dm = [0.0; 2];
        let mut dlv = [0.0; 2];
        LatentPrior::<f64>::kl(&prior, &m, &lv, Some((&mut dm, &mut dlv)), 1.0);
        let h = 1e-6;
        for j in 0..2 {
            let f = |m: &[f64], lv: &[f64]| LatentPrior::<f64>::kl(&prior, m, lv, None, 1.0);
            let mut mp = m;
            mp[j] += h;
            let mut mm = m;
            mm[j] -= h;
            assert!(((f(&mp, &lv) - f(&mm, &lv)) / (2.0 * h) - dm[j]).abs() < 1e-7);
            let mut lp = lv;
            lp[j] += h;
            let mut lm = lv;
            lm[j] -= h;
            assert!(((f(&m, &lp) - f(&m, &lm)) / (2.0 * h) - dlv[j]).abs() < 1e-7);
        }
    }

    #[test]
    fn point_responsibilities_respect_truncation() {
        let s = two_component();
        let r = s.point_responsibilities(&[0.0, 10.0]);
        assert_eq!(r[2], 0.0);
        assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let r = s.point_responsibilities(&[-3.0, 0.0]);
        assert!(r[0] > 0.999);
    }

    #[test]
    fn m_step_keeps_weights_on_simplex_and_truncates() {
        let mut s = MixtureLatentState::standard(3, 1, 0.05).unwrap();
        s.means = vec![-5.0, 5.0, 40.0];
        let means: Vec<f64> = (0..100).map(|i| if i % 2 == 0 { -5.0 } else { 5.0 }).collect();
        let lvs = vec![0.0; 100];
        s.m_step(&means, &lvs, 1e-4);
        s.validate().unwrap();
        assert_eq!(s.active, vec![true, true, false]);
        assert!((s.weights[0] - 0.5).abs() < 1e-9);
        assert!((s.mean(1)[0] - 5.0).abs() < 1e-9);
        // variance = posterior variance (1) + spread (0)
        assert!(s.log_variance(0)[0].abs() < 1e-9);
    }

    #[test]
    fn raising_threshold_never_adds_components() {
        let base = {
            let mut s = MixtureLatentState::standard(4, 1, 0.01).unwrap();
            s.weights = vec![0.5, 0.3, 0.15, 0.05];
            s
        };
        let mut last = usize::MAX;
        for t in [0.01, 0.1, 0.2, 0.4, 0.9] {
            let mut s = base.clone();
            s.truncation_threshold = t;
            s.truncate();
            s.validate().unwrap();
            assert!(s.active_count() <= last);
            last = s.active_count();
        }
        assert_eq!(last, 1);
    }
}
