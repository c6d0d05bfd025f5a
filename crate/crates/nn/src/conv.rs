//! 2-D convolution and transposed convolution over channel-major batches.
//!
//! Activations are laid out `C x N x H x W` so that one GEMM covers the whole
//! batch: `im2col` produces a `(C*k*k) x (N*H'*W')` matrix and the output of
//! `W * cols` is already in `C x N x H' x W'` order.

use crate::params::{ParamLayout, Slot};
use crate::real::{gemm, Real};

pub fn conv_out_len(input: usize, kernel: usize, stride: usize, pad: usize) -> usize {
    assert!(input + 2 * pad >= kernel, "kernel larger than padded input");
    (input + 2 * pad - kernel) / stride + 1
}

/// Geometry shared by a convolution and its adjoint.
///
/// `big_*` is the convolution input (transposed-conv output), `small_*` the
/// convolution output (transposed-conv input).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PatchGeom {
    pub channels: usize,
    pub big_h: usize,
    pub big_w: usize,
    pub small_h: usize,
    pub small_w: usize,
    pub kernel: usize,
    pub stride: usize,
    pub pad: usize,
}

impl PatchGeom {
    pub fn rows(&self) -> usize {
        self.channels * self.kernel * self.kernel
    }

    pub fn small_len(&self) -> usize {
        self.small_h * self.small_w
    }

    pub fn big_len(&self) -> usize {
        self.big_h * self.big_w
    }

    /// Input index touched by output index `o` and kernel tap `k`, if inside.
    #[inline]
    fn source(o: usize, k: usize, stride: usize, pad: usize, len: usize) -> Option<usize> {
        let pos = (o * stride + k) as isize - pad as isize;
        if pos >= 0 && (pos as usize) < len {
            Some(pos as usize)
        } else {
            None
        }
    }

    /// `x` is `C x N x big_h x big_w`; returns `(C*k*k) x (N*small_h*small_w)`.
    pub fn im2col<T: Real>(&self, x: &[T], n: usize) -> Vec<T> {
        let k = self.kernel;
        let cols_w = n * self.small_len();
        assert_eq!(x.len(), self.channels * n * self.big_len(), "im2col input size");
        let mut cols = vec![T::zero(); self.rows() * cols_w];
        for c in 0..self.channels {
            for ki in 0..k {
                for kj in 0..k {
                    let row = (c * k + ki) * k + kj;
                    let dst_row = &mut cols[row * cols_w..(row + 1) * cols_w];
                    for s in 0..n {
                        let src = &x[(c * n + s) * self.big_len()..(c * n + s + 1) * self.big_len()];
                        for oh in 0..self.small_h {
                            let Some(ih) = Self::source(oh, ki, self.stride, self.pad, self.big_h) else {
                                continue;
                            };
                            let base = (s * self.small_h + oh) * self.small_w;
                            for ow in 0..self.small_w {
                                if let Some(iw) = Self::source(ow, kj, self.stride, self.pad, self.big_w) {
                                    dst_row[base + ow] = src[ih * self.big_w + iw];
                                }
                            }
                        }
                    }
                }
            }
        }
        cols
    }

    /// Adjoint of [`im2col`](Self::im2col): accumulates columns back into `C x N x big_h x big_w`.
    pub fn col2im<T: Real>(&self, cols: &[T], n: usize) -> Vec<T> {
        let k = self.kernel;
        let cols_w = n * self.small_len();
        assert_eq!(cols.len(), self.rows() * cols_w, "col2im input size");
        let mut x = vec![T::zero(); self.channels * n * self.big_len()];
        for c in 0..self.channels {
            for ki in 0..k {
                for kj in 0..k {
                    let row = (c * k + ki) * k + kj;
                    let src_row = &cols[row * cols_w..(row + 1) * cols_w];
                    for s in 0..n {
                        let off = (c * n + s) * self.big_len();
                        let dst = &mut x[off..off + self.big_len()];
                        for oh in 0..self.small_h {
                            let Some(ih) = Self::source(oh, ki, self.stride, self.pad, self.big_h) else {
                                continue;
                            };
                            let base = (s * self.small_h + oh) * self.small_w;
                            for ow in 0..self.small_w {
                                if let Some(iw) = Self::source(ow, kj, self.stride, self.pad, self.big_w) {
                                    dst[ih * self.big_w + iw] += src_row[base + ow];
                                }
                            }
                        }
                    }
                }
            }
        }
        x
    }
}

fn add_channel_bias<T: Real>(y: &mut [T], bias: &[T]) {
    let per = y.len() / bias.len();
    for (chunk, &b) in y.chunks_mut(per).zip(bias) {
        for v in chunk {
            *v += b;
        }
    }
}

fn accumulate_channel_bias<T: Real>(dy: &[T], db: &mut [T]) {
    let per = dy.len() / db.len();
    for (chunk, g) in dy.chunks(per).zip(db.iter_mut()) {
        *g += chunk.iter().copied().sum::<T>();
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Conv2d {
    pub in_channels: usize,
    pub out_channels: usize,
    pub geom: PatchGeom,
    weight: Slot,
    bias: Slot,
}

impl Conv2d {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        layout: &mut ParamLayout,
        name: &str,
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        pad: usize,
        in_h: usize,
        in_w: usize,
    ) -> Self {
        let geom = PatchGeom {
            channels: in_channels,
            big_h: in_h,
            big_w: in_w,
            small_h: conv_out_len(in_h, kernel, stride, pad),
            small_w: conv_out_len(in_w, kernel, stride, pad),
            kernel,
            stride,
            pad,
        };
        let fan_in = (in_channels * kernel * kernel) as f64;
        let bound = 1.0 / fan_in.sqrt();
        let weight = layout.register(
            format!("{name}.weight"),
            &[out_channels, in_channels, kernel, kernel],
            bound,
        );
        let bias = layout.register(format!("{name}.bias"), &[out_channels], bound);
        Self {
            in_channels,
            out_channels,
            geom,
            weight,
            bias,
        }
    }

    pub fn out_hw(&self) -> (usize, usize) {
        (self.geom.small_h, self.geom.small_w)
    }

    /// Returns `(cols, y)`; `cols` is needed again by [`backward`](Self::backward).
    pub fn forward<T: Real>(&self, params: &[T], x: &[T], n: usize) -> (Vec<T>, Vec<T>) {
        let cols = self.geom.im2col(x, n);
        let width = n * self.geom.small_len();
        let mut y = vec![T::zero(); self.out_channels * width];
        gemm(
            false,
            false,
            self.out_channels,
            width,
            self.geom.rows(),
            T::one(),
            self.weight.of(params),
            &cols,
            T::zero(),
            &mut y,
        );
        add_channel_bias(&mut y, self.bias.of(params));
        (cols, y)
    }

    /// Accumulates parameter gradients into `grads`; returns `dx` when asked.
    pub fn backward<T: Real>(
        &self,
        params: &[T],
        cols: &[T],
        dy: &[T],
        n: usize,
        grads: &mut [T],
        need_dx: bool,
    ) -> Option<Vec<T>> {
        let width = n * self.geom.small_len();
        let rows = self.geom.rows();
        gemm(
            false,
            true,
            self.out_channels,
            rows,
            width,
            T::one(),
            dy,
            cols,
            T::one(),
            self.weight.of_mut(grads),
        );
        accumulate_channel_bias(dy, self.bias.of_mut(grads));
        if !need_dx {
            return None;
        }
        let mut dcols = vec![T::zero(); rows * width];
        gemm(
            true,
            false,
            rows,
            width,
            self.out_channels,
            T::one(),
            self.weight.of(params),
            dy,
            T::zero(),
            &mut dcols,
        );
        Some(self.geom.col2im(&dcols, n))
    }
}

/// Transposed convolution (the adjoint of [`Conv2d`] with the same geometry).
#[derive(Debug, Clone, PartialEq)]
pub struct ConvTranspose2d {
    pub in_channels: usize,
    pub out_channels: usize,
    pub geom: PatchGeom,
    weight: Slot,
    bias: Slot,
}

impl ConvTranspose2d {
    /// `out_h`/`out_w` select the output size among those the stride allows
    /// (the usual "output padding"); a convolution with the same kernel,
    /// stride and padding must map `out` back to `in`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        layout: &mut ParamLayout,
        name: &str,
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        pad: usize,
        in_hw: (usize, usize),
        out_hw: (usize, usize),
    ) -> Self {
        assert_eq!(conv_out_len(out_hw.0, kernel, stride, pad), in_hw.0, "transposed conv height");
        assert_eq!(conv_out_len(out_hw.1, kernel, stride, pad), in_hw.1, "transposed conv width");
        let geom = PatchGeom {
            channels: out_channels,
            big_h: out_hw.0,
            big_w: out_hw.1,
            small_h: in_hw.0,
            small_w: in_hw.1,
            kernel,
            stride,
            pad,
        };
        let fan_in = (in_channels * kernel * kernel) as f64;
        let bound = 1.0 / fan_in.sqrt();
        let weight = layout.register(
            format!("{name}.weight"),
            &[in_channels, out_channels, kernel, kernel],
            bound,
        );
        let bias = layout.register(format!("{name}.bias"), &[out_channels], bound);
        Self {
            in_channels,
            out_channels,
            geom,
            weight,
            bias,
        }
    }

    pub fn out_hw(&self) -> (usize, usize) {
        (self.geom.big_h, self.geom.big_w)
    }

    pub fn forward<T: Real>(&self, params: &[T], x: &[T], n: usize) -> Vec<T> {
        let width = n * self.geom.small_len();
        let rows = self.geom.rows();
        assert_eq!(x.len(), self.in_channels * width, "transposed conv input size");
        let mut cols = vec![T::zero(); rows * width];
        gemm(
            true,
            false,
            rows,
            width,
            self.in_channels,
            T::one(),
            self.weight.of(params),
            x,
            T::zero(),
            &mut cols,
        );
        let mut y = self.geom.col2im(&cols, n);
        add_channel_bias(&mut y, self.bias.of(params));
        y
    }

    pub fn backward<T: Real>(
        &self,
        params: &[T],
        x: &[T],
        dy: &[T],
        n: usize,
        grads: &mut [T],
        need_dx: bool,
    ) -> Option<Vec<T>> {
        let width = n * self.geom.small_len();
        let rows = self.geom.rows();
        accumulate_channel_bias(dy, self.bias.of_mut(grads));
        let dcols = self.geom.im2col(dy, n);
        gemm(
            false,
            true,
            self.in_channels,
            rows,
            width,
            T::one(),
            x,
            &dcols,
            T::one(),
            self.weight.of_mut(grads),
        );
        if !need_dx {
            return None;
        }
        let mut dx = vec![T::zero(); self.in_channels * width];
        gemm(
            false,
            false,
            self.in_channels,
            width,
            rows,
            T::one(),
            self.weight.of(params),
            &dcols,
            T::zero(),
            &mut dx,
        );
        Some(dx)
    }
}
