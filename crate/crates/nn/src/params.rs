//! Flat parameter storage.
//!
//! Every trainable tensor of a network lives in one contiguous vector. Layers
//! keep a [`Slot`] into it, which fixes the on-disk parameter ordering to the
//! order in which tensors were registered.

use rand::Rng;

use crate::real::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Slot {
    pub offset: usize,
    pub len: usize,
}

impl Slot {
    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len
    }

    pub fn of<'a, T>(&self, flat: &'a [T]) -> &'a [T] {
        &flat[self.range()]
    }

    pub fn of_mut<'a, T>(&self, flat: &'a mut [T]) -> &'a mut [T] {
        &mut flat[self.range()]
    }
}

/// A named tensor entry in a [`ParamLayout`].
#[derive(Debug, Clone, PartialEq)]
pub struct TensorInfo {
    pub name: String,
    pub shape: Vec<usize>,
    pub slot: Slot,
    /// Bound of the uniform initializer, `U(-bound, bound)`.
    pub init_bound: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamLayout {
    tensors: Vec<TensorInfo>,
    len: usize,
}

impl ParamLayout {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, name: impl Into<String>, shape: &[usize], init_bound: f64) -> Slot {
        let len = shape.iter().product();
        let slot = Slot {
            offset: self.len,
            len,
        };
        self.len += len;
        self.tensors.push(TensorInfo {
            name: name.into(),
            shape: shape.to_vec(),
            slot,
            init_bound,
        });
        slot
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn tensors(&self) -> &[TensorInfo] {
        &self.tensors
    }

    /// Uniform fan-in initialization, drawn tensor by tensor in registration order.
    pub fn init<T: Real, R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<T> {
        let mut out = vec![T::zero(); self.len];
        for t in &self.tensors {
            for v in t.slot.of_mut(&mut out) {
                let u: f64 = rng.random::<f64>() * 2.0 - 1.0;
                *v = T::lit(u * t.init_bound);
            }
        }
        out
    }
}

pub fn cast_params<A: Real, B: Real>(src: &[A]) -> Vec<B> {
    src.iter().map(|v| B::lit(v.as_f64())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn slots_are_contiguous_in_registration_order() {
        let mut layout = ParamLayout::new();
        let a = layout.register("a", &[2, 3], 0.1);
        let b = layout.register("b", &[4], 0.1);
        assert_eq!(a, Slot { offset: 0, len: 6 });
        assert_eq!(b, Slot { offset: 6, len: 4 });
        assert_eq!(layout.len(), 10);
    }

    #[test]
    fn init_respects_bounds_and_seed() {
        let mut layout = ParamLayout::new();
        layout.register("w", &[100], 0.25);
        let p1: Vec<f32> = layout.init(&mut ChaCha8Rng::seed_from_u64(3));
        let p2: Vec<f32> = layout.init(&mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(p1, p2);
        assert!(p1.iter().all(|v| v.abs() <= 0.25));
    }
}
