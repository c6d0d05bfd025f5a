//! Fully connected layer over row-major `N x features` batches.

use crate::params::{ParamLayout, Slot};
use crate::real::{gemm, Real};

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    weight: Slot,
    bias: Slot,
}

impl Dense {
    pub fn new(layout: &mut ParamLayout, name: &str, inputs: usize, outputs: usize) -> Self {
        let bound = 1.0 / (inputs as f64).sqrt();
        let weight = layout.register(format!("{name}.weight"), &[outputs, inputs], bound);
        let bias = layout.register(format!("{name}.bias"), &[outputs], bound);
        Self {
            inputs,
            outputs,
            weight,
            bias,
        }
    }

    pub fn forward<T: Real>(&self, params: &[T], x: &[T], n: usize) -> Vec<T> {
        assert_eq!(x.len(), n * self.inputs, "dense input size");
        let mut y = vec![T::zero(); n * self.outputs];
        for row in y.chunks_mut(self.outputs) {
            row.copy_from_slice(self.bias.of(params));
        }
        gemm(
            false,
            true,
            n,
            self.outputs,
            self.inputs,
            T::one(),
            x,
            self.weight.of(params),
            T::one(),
            &mut y,
        );
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
        gemm(
            true,
            false,
            self.outputs,
            self.inputs,
            n,
            T::one(),
            dy,
            x,
            T::one(),
            self.weight.of_mut(grads),
        );
        let db = self.bias.of_mut(grads);
        for row in dy.chunks(self.outputs) {
            for (g, &d) in db.iter_mut().zip(row) {
                *g += d;
            }
        }
        if !need_dx {
            return None;
        }
        let mut dx = vec![T::zero(); n * self.inputs];
        gemm(
            false,
            false,
            n,
            self.inputs,
            self.outputs,
            T::one(),
            dy,
            self.weight.of(params),
            T::zero(),
            &mut dx,
        );
        Some(dx)
    }
}
