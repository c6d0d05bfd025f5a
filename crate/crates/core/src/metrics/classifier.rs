//! Small convolutional presence classifier for one binary feature.
//!
//! Two strided convs with ELU, then a dense layer to one logit, trained with
//! binary cross-entropy. The labeled set is split 70/15/15 into train,
//! validation and held-out parts; the decision threshold maximizes balanced
//! accuracy on validation and is frozen before any auditing.

use jvae_nn::act::{elu_backward, elu_inplace, sigmoid};
use jvae_nn::reshape::{cnhw_to_rows, nhwc_to_cnhw, rows_to_cnhw};
use jvae_nn::{Adam, AdamConfig, Conv2d, Dense, ParamLayout};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::datasets::LabeledImageSet;
use crate::error::{Error, Result};
use crate::image::{Geometry, ImageBatch};

const CHUNK: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierSettings {
    pub conv_channels: [usize; 2],
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
}

impl Default for ClassifierSettings {
    fn default() -> Self {
        Self {
            conv_channels: [8, 16],
            epochs: 20,
            batch_size: 64,
            learning_rate: 2e-3,
        }
    }
}

#[derive(Debug, Clone)]
struct ClassifierNet {
    geometry: Geometry,
    convs: [Conv2d; 2],
    head: Dense,
    flat: (usize, usize),
    layout: ParamLayout,
}

struct Tape {
    cols: [Vec<f32>; 2],
    acts: [Vec<f32>; 2],
    flat: Vec<f32>,
}

impl ClassifierNet {
    fn new(geometry: Geometry, channels: [usize; 2]) -> Self {
        let mut layout = ParamLayout::new();
        let c0 = Conv2d::new(&mut layout, "conv0", geometry.channels, channels[0], 4, 2, 1, geometry.height, geometry.width);
        let (h, w) = c0.out_hw();
        let c1 = Conv2d::new(&mut layout, "conv1", channels[0], channels[1], 4, 2, 1, h, w);
        let (h, w) = c1.out_hw();
        let head = Dense::new(&mut layout, "head", channels[1] * h * w, 1);
        Self {
            geometry,
            convs: [c0, c1],
            head,
            flat: (channels[1], h * w),
            layout,
        }
    }

    fn forward(&self, p: &[f32], x: &ImageBatch<f32>) -> (Vec<f32>, Tape) {
        let g = self.geometry;
        let n = x.len();
        let h0 = nhwc_to_cnhw(x.as_slice(), n, g.height, g.width, g.channels);
        let (cols0, mut a0) = self.convs[0].forward(p, &h0, n);
        elu_inplace(&mut a0);
        let (cols1, mut a1) = self.convs[1].forward(p, &a0, n);
        elu_inplace(&mut a1);
        let flat = cnhw_to_rows(&a1, n, self.flat.0, self.flat.1);
        let logits = self.head.forward(p, &flat, n);
        (
            logits,
            Tape {
                cols: [cols0, cols1],
                acts: [a0, a1],
                flat,
            },
        )
    }

    fn backward(&self, p: &[f32], tape: &Tape, d_logits: &[f32], grads: &mut [f32]) {
        let n = d_logits.len();
        let d_flat = self.head.backward(p, &tape.flat, d_logits, n, grads, true).expect("dx requested");
        let mut d = rows_to_cnhw(&d_flat, n, self.flat.0, self.flat.1);
        elu_backward(&tape.acts[1], &mut d);
        let mut d = self.convs[1]
            .backward(p, &tape.cols[1], &d, n, grads, true)
            .expect("dx requested");
        elu_backward(&tape.acts[0], &mut d);
        self.convs[0].backward(p, &tape.cols[0], &d, n, grads, false);
    }
}

#[derive(Debug, Clone)]
pub struct PresenceClassifier {
    pub feature: String,
    pub threshold: f64,
    pub validation_balanced_accuracy: f64,
    pub held_out_accuracy: f64,
    net: ClassifierNet,
    params: Vec<f32>,
}

fn balanced_accuracy(probs: &[f32], labels: &[bool], threshold: f64) -> f64 {
    let (mut tp, mut pos, mut tn, mut neg) = (0usize, 0usize, 0usize, 0usize);
    for (&p, &y) in probs.iter().zip(labels) {
        let hit = p as f64 >= threshold;
        if y {
            pos += 1;
            tp += hit as usize;
        } else {
            neg += 1;
            tn += !hit as usize;
        }
    }
    let tpr = if pos == 0 { 1.0 } else { tp as f64 / pos as f64 };
    let tnr = if neg == 0 { 1.0 } else { tn as f64 / neg as f64 };
    0.5 * (tpr + tnr)
}

/// Threshold on a fixed 0.01 grid maximizing balanced accuracy; ties go to
/// the candidate closest to 0.5.
fn choose_threshold(probs: &[f32], labels: &[bool]) -> (f64, f64) {
    let mut best: (f64, f64) = (0.5, balanced_accuracy(probs, labels, 0.5));
    for k in 1..100 {
        let t = k as f64 / 100.0;
        let acc = balanced_accuracy(probs, labels, t);
        if acc > best.1 || (acc == best.1 && (t - 0.5).abs() < (best.0 - 0.5).abs()) {
            best = (t, acc);
        }
    }
    best
}

impl PresenceClassifier {
    /// Trains on the real labeled images for `feature`.
    pub fn train<R: Rng + ?Sized>(
        set: &LabeledImageSet,
        feature: &str,
        settings: &ClassifierSettings,
        rng: &mut R,
    ) -> Result<Self> {
        let flags = set.feature(feature)?;
        let positives = flags.iter().filter(|&&b| b).count();
        if positives == 0 || positives == flags.len() {
            return Err(Error::invalid(format!(
                "feature `{feature}` needs both present and absent examples to train a classifier"
            )));
        }
        if settings.batch_size == 0 {
            return Err(Error::invalid("batch_size must be positive"));
        }
        let mut order: Vec<usize> = (0..set.len()).collect();
        order.shuffle(rng);
        let n_train = set.len() * 70 / 100;
        let n_val = set.len() * 15 / 100;
        let (train_idx, rest) = order.split_at(n_train);
        let (val_idx, test_idx) = rest.split_at(n_val);
        if train_idx.is_empty() || val_idx.is_empty() || test_idx.is_empty() {
            return Err(Error::invalid("labeled set too small to split 70/15/15"));
        }

        let net = ClassifierNet::new(set.images.geometry(), settings.conv_channels);
        let mut params: Vec<f32> = net.layout.init(rng);
        let mut adam = Adam::new(
            AdamConfig {
                learning_rate: settings.learning_rate,
                ..AdamConfig::default()
            },
            params.len(),
        );
        let mut grads = vec![0.0f32; params.len()];
        let mut epoch_order = train_idx.to_vec();
        for _ in 0..settings.epochs {
            epoch_order.shuffle(rng);
            for idx in epoch_order.chunks(settings.batch_size) {
                let x = set.images.select(idx);
                let (logits, tape) = net.forward(&params, &x);
                let inv = 1.0 / idx.len() as f32;
                // d(BCE)/d(logit) = sigmoid(logit) - y
                let d: Vec<f32> = logits
                    .iter()
                    .zip(idx)
                    .map(|(&l, &i)| (sigmoid(l) - if flags[i] { 1.0 } else { 0.0 }) * inv)
                    .collect();
                grads.fill(0.0);
                net.backward(&params, &tape, &d, &mut grads);
                adam.step(&mut params, &grads);
            }
        }

        let mut clf = Self {
            feature: feature.to_string(),
            threshold: 0.5,
            validation_balanced_accuracy: 0.0,
            held_out_accuracy: 0.0,
            net,
            params,
        };
        let val_probs = clf.probabilities(&set.images.select(val_idx))?;
        let val_labels: Vec<bool> = val_idx.iter().map(|&i| flags[i]).collect();
        let (threshold, val_acc) = choose_threshold(&val_probs, &val_labels);
        clf.threshold = threshold;
        clf.validation_balanced_accuracy = val_acc;
        let decisions = clf.predict(&set.images.select(test_idx))?;
        let correct = decisions.iter().zip(test_idx).filter(|&(&d, &i)| d == flags[i]).count();
        clf.held_out_accuracy = correct as f64 / test_idx.len() as f64;
        Ok(clf)
    }

    pub fn probabilities(&self, images: &ImageBatch<f32>) -> Result<Vec<f32>> {
        images.ensure_geometry(self.net.geometry)?;
        let mut out = Vec::with_capacity(images.len());
        for start in (0..images.len()).step_by(CHUNK) {
            let chunk = images.range(start, (start + CHUNK).min(images.len()));
            let (logits, _) = self.net.forward(&self.params, &chunk);
            out.extend(logits.into_iter().map(sigmoid));
        }
        Ok(out)
    }

    /// Hard presence decisions at the frozen threshold.
    pub fn predict(&self, images: &ImageBatch<f32>) -> Result<Vec<bool>> {
        Ok(self
            .probabilities(images)?
            .into_iter()
            .map(|p| p as f64 >= self.threshold)
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_selection() {
        let probs = [0.1, 0.2, 0.3, 0.8, 0.9];
        let labels = [false, false, true, true, true];
        let (t, acc) = choose_threshold(&probs, &labels);
        assert_eq!(acc, 1.0);
        assert!(t > 0.2 && t <= 0.3, "{t}");
        assert_eq!(balanced_accuracy(&probs, &labels, 0.0), 0.5);
    }
}
