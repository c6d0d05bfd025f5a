//! Strided conv encoder / transposed-conv decoder.
//!
//! Encoder: `conv(k4, s2, p1) + ELU` per entry of `conv_channels`, flatten,
//! dense to `2 * latent_dim` (mean then log-variance). Decoder mirrors it:
//! dense + ELU, transposed convs back to the input geometry, ELU between
//! layers and a sigmoid on the output so every pixel lies in [0, 1].

use jvae_nn::act::{elu_backward, elu_inplace, sigmoid_backward, sigmoid_inplace};
use jvae_nn::reshape::{cnhw_to_nhwc, cnhw_to_rows, nhwc_to_cnhw, rows_to_cnhw};
use jvae_nn::{conv_out_len, Conv2d, ConvTranspose2d, Dense, ParamLayout, Real};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{Geometry, ImageBatch};

pub const KERNEL: usize = 4;
pub const STRIDE: usize = 2;
pub const PAD: usize = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArchConfig {
    pub conv_channels: Vec<usize>,
    pub latent_dim: usize,
}

impl Default for ArchConfig {
    fn default() -> Self {
        Self {
            conv_channels: vec![16, 32, 32, 64],
            latent_dim: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VaeNet {
    pub geometry: Geometry,
    pub arch: ArchConfig,
    layout: ParamLayout,
    convs: Vec<Conv2d>,
    enc_head: Dense,
    dec_head: Dense,
    deconvs: Vec<ConvTranspose2d>,
    /// Channels and spatial size of the deepest conv activation.
    bottleneck: (usize, usize, usize),
}

pub struct EncoderTape<T> {
    n: usize,
    cols: Vec<Vec<T>>,
    acts: Vec<Vec<T>>,
    flat: Vec<T>,
}

pub struct DecoderTape<T> {
    n: usize,
    z: Vec<T>,
    head_act: Vec<T>,
    /// Input of every transposed conv, channel-major.
    inputs: Vec<Vec<T>>,
    /// ELU outputs of all but the last transposed conv.
    acts: Vec<Vec<T>>,
    /// Pre-sigmoid output, channel-major.
    logits: Vec<T>,
    output: Vec<T>,
}

impl<T: Real> DecoderTape<T> {
    /// Pre-sigmoid outputs in image layout (NHWC).
    pub fn logits(&self, geometry: Geometry) -> Vec<T> {
        cnhw_to_nhwc(&self.logits, self.n, geometry.height, geometry.width, geometry.channels)
    }
}

impl VaeNet {
    pub fn new(geometry: Geometry, arch: ArchConfig) -> Result<Self> {
        if arch.conv_channels.is_empty() || arch.latent_dim == 0 {
            return Err(Error::invalid("need at least one conv layer and a positive latent size"));
        }
        let mut layout = ParamLayout::new();
        let mut sizes = vec![(geometry.height, geometry.width)];
        let mut convs = Vec::new();
        let mut in_c = geometry.channels;
        for (i, &out_c) in arch.conv_channels.iter().enumerate() {
            let (h, w) = *sizes.last().unwrap();
            if h + 2 * PAD < KERNEL || w + 2 * PAD < KERNEL {
                return Err(Error::dims(format!(
                    "{geometry} input is too small for {} conv layers",
                    arch.conv_channels.len()
                )));
            }
            let conv = Conv2d::new(&mut layout, &format!("encoder.conv{i}"), in_c, out_c, KERNEL, STRIDE, PAD, h, w);
            sizes.push((conv_out_len(h, KERNEL, STRIDE, PAD), conv_out_len(w, KERNEL, STRIDE, PAD)));
            convs.push(conv);
            in_c = out_c;
        }
        let (bh, bw) = *sizes.last().unwrap();
        let flat = in_c * bh * bw;
        let enc_head = Dense::new(&mut layout, "encoder.head", flat, 2 * arch.latent_dim);
        let dec_head = Dense::new(&mut layout, "decoder.head", arch.latent_dim, flat);
        let mut deconvs = Vec::new();
        let layers = arch.conv_channels.len();
        for i in 0..layers {
            let from = arch.conv_channels[layers - 1 - i];
            let to = if i + 1 == layers {
                geometry.channels
            } else {
                arch.conv_channels[layers - 2 - i]
            };
            deconvs.push(ConvTranspose2d::new(
                &mut layout,
                &format!("decoder.deconv{i}"),
                from,
                to,
                KERNEL,
                STRIDE,
                PAD,
                sizes[layers - i],
                sizes[layers - 1 - i],
            ));
        }
        Ok(Self {
            geometry,
            arch,
            layout,
            convs,
            enc_head,
            dec_head,
            deconvs,
            bottleneck: (in_c, bh, bw),
        })
    }

    pub fn latent_dim(&self) -> usize {
        self.arch.latent_dim
    }

    pub fn param_count(&self) -> usize {
        self.layout.len()
    }

    pub fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    /// Number of leading parameters that belong to the encoder.
    pub fn encoder_param_count(&self) -> usize {
        self.layout
            .tensors()
            .iter()
            .filter(|t| t.name.starts_with("encoder."))
            .map(|t| t.slot.len)
            .sum()
    }

    pub fn init_params<T: Real, R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<T> {
        self.layout.init(rng)
    }

    /// Returns `n x 2D` rows of `[mean | log_variance]`.
    pub fn encoder_forward<T: Real>(&self, p: &[T], x: &ImageBatch<T>) -> Result<(Vec<T>, EncoderTape<T>)> {
        x.ensure_geometry(self.geometry)?;
        let g = self.geometry;
        let n = x.len();
        let mut h = nhwc_to_cnhw(x.as_slice(), n, g.height, g.width, g.channels);
        let mut cols = Vec::with_capacity(self.convs.len());
        let mut acts = Vec::with_capacity(self.convs.len());
        for conv in &self.convs {
            let (c, mut y) = conv.forward(p, &h, n);
            elu_inplace(&mut y);
            cols.push(c);
            acts.push(y.clone());
            h = y;
        }
        let (bc, bh, bw) = self.bottleneck;
        let flat = cnhw_to_rows(&h, n, bc, bh * bw);
        let out = self.enc_head.forward(p, &flat, n);
        Ok((out, EncoderTape { n, cols, acts, flat }))
    }

    /// Accumulates encoder parameter gradients given `d(loss)/d[mean | log_variance]`.
    pub fn encoder_backward<T: Real>(&self, p: &[T], tape: &EncoderTape<T>, d_out: &[T], grads: &mut [T]) {
        let n = tape.n;
        let d_flat = self
            .enc_head
            .backward(p, &tape.flat, d_out, n, grads, true)
            .expect("dx requested");
        let (bc, bh, bw) = self.bottleneck;
        let mut d = rows_to_cnhw(&d_flat, n, bc, bh * bw);
        for i in (0..self.convs.len()).rev() {
            elu_backward(&tape.acts[i], &mut d);
            match self.convs[i].backward(p, &tape.cols[i], &d, n, grads, i > 0) {
                Some(dx) => d = dx,
                None => break,
            }
        }
    }

    /// Decodes `n x D` latent rows into images with pixel means in [0, 1].
    pub fn decoder_forward<T: Real>(&self, p: &[T], z: &[T]) -> Result<(ImageBatch<T>, DecoderTape<T>)> {
        let d = self.latent_dim();
        if z.len() % d != 0 {
            return Err(Error::dims(format!("latent array of {} is not a multiple of D = {d}", z.len())));
        }
        let n = z.len() / d;
        let g = self.geometry;
        let mut head_act = self.dec_head.forward(p, z, n);
        elu_inplace(&mut head_act);
        let (bc, bh, bw) = self.bottleneck;
        let mut h = rows_to_cnhw(&head_act, n, bc, bh * bw);
        let mut inputs = Vec::with_capacity(self.deconvs.len());
        let mut acts = Vec::with_capacity(self.deconvs.len());
        let last = self.deconvs.len() - 1;
        let mut logits = Vec::new();
        for (i, deconv) in self.deconvs.iter().enumerate() {
            let mut y = deconv.forward(p, &h, n);
            inputs.push(h);
            if i == last {
                logits = y.clone();
                sigmoid_inplace(&mut y);
            } else {
                elu_inplace(&mut y);
                acts.push(y.clone());
            }
            h = y;
        }
        let images = ImageBatch::new(g, cnhw_to_nhwc(&h, n, g.height, g.width, g.channels))?;
        Ok((
            images,
            DecoderTape {
                n,
                z: z.to_vec(),
                head_act,
                inputs,
                acts,
                logits,
                output: h,
            },
        ))
    }

    /// Accumulates decoder parameter gradients given `d(loss)/d(images)`;
    /// returns `d(loss)/dz`.
    pub fn decoder_backward<T: Real>(&self, p: &[T], tape: &DecoderTape<T>, d_images: &[T], grads: &mut [T]) -> Vec<T> {
        self.decoder_backward_inner(p, tape, d_images, grads, true)
    }

    /// Same, but the incoming gradient is with respect to the pre-sigmoid
    /// logits.
    pub fn decoder_backward_logits<T: Real>(
        &self,
        p: &[T],
        tape: &DecoderTape<T>,
        d_logits: &[T],
        grads: &mut [T],
    ) -> Vec<T> {
        self.decoder_backward_inner(p, tape, d_logits, grads, false)
    }

    fn decoder_backward_inner<T: Real>(
        &self,
        p: &[T],
        tape: &DecoderTape<T>,
        d_out: &[T],
        grads: &mut [T],
        through_sigmoid: bool,
    ) -> Vec<T> {
        let n = tape.n;
        let g = self.geometry;
        let mut d = nhwc_to_cnhw(d_out, n, g.height, g.width, g.channels);
        let last = self.deconvs.len() - 1;
        for i in (0..self.deconvs.len()).rev() {
            if i == last {
                if through_sigmoid {
                    sigmoid_backward(&tape.output, &mut d);
                }
            } else {
                elu_backward(&tape.acts[i], &mut d);
            }
            d = self.deconvs[i]
                .backward(p, &tape.inputs[i], &d, n, grads, true)
                .expect("dx requested");
        }
        let (bc, bh, bw) = self.bottleneck;
        let mut d_rows = cnhw_to_rows(&d, n, bc, bh * bw);
        elu_backward(&tape.head_act, &mut d_rows);
        self.dec_head
            .backward(p, &tape.z, &d_rows, n, grads, true)
            .expect("dx requested")
    }
}
