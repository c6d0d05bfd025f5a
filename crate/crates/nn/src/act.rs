//! Element-wise activations. Backward passes work from the stored outputs.

use crate::real::Real;

/// ELU with `alpha = 1`; continuously differentiable, which keeps finite
/// difference checks well-behaved.
pub fn elu_inplace<T: Real>(v: &mut [T]) {
    for x in v {
        if *x < T::zero() {
            *x = x.exp_m1();
        }
    }
}

/// `dy` is overwritten with `dx` given ELU outputs `y`.
pub fn elu_backward<T: Real>(y: &[T], dy: &mut [T]) {
    for (g, &out) in dy.iter_mut().zip(y) {
        if out < T::zero() {
            *g *= out + T::one();
        }
    }
}

pub fn sigmoid<T: Real>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

pub fn sigmoid_inplace<T: Real>(v: &mut [T]) {
    for x in v {
        *x = sigmoid(*x);
    }
}

pub fn sigmoid_backward<T: Real>(y: &[T], dy: &mut [T]) {
    for (g, &out) in dy.iter_mut().zip(y) {
        *g *= out * (T::one() - out);
    }
}

pub fn log_sum_exp<T: Real>(v: &[T]) -> T {
    let max = v.iter().copied().fold(T::neg_infinity(), T::max);
    if max == T::neg_infinity() {
        return max;
    }
    max + v.iter().map(|&x| (x - max).exp()).sum::<T>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn elu_derivative_matches_difference_quotient() {
        for &x in &[-2.0f64, -0.3, 0.4, 1.5] {
            let h = 1e-6;
            let mut a = [x + h];
            let mut b = [x - h];
            elu_inplace(&mut a);
            elu_inplace(&mut b);
            let mut y = [x];
            elu_inplace(&mut y);
            let mut g = [1.0];
            elu_backward(&y, &mut g);
            assert!(((a[0] - b[0]) / (2.0 * h) - g[0]).abs() < 1e-8);
        }
    }

    #[test]
    fn sigmoid_is_stable_at_extremes() {
        assert_eq!(sigmoid(-1000.0f64), 0.0);
        assert_eq!(sigmoid(1000.0f64), 1.0);
        assert!((sigmoid(0.0f32) - 0.5).abs() < 1e-7);
    }

    #[test]
    fn log_sum_exp_of_equal_terms() {
        let v = [0.0f64; 4];
        assert!((log_sum_exp(&v) - 4f64.ln()).abs() < 1e-12);
        assert_eq!(log_sum_exp::<f64>(&[f64::NEG_INFINITY; 2]), f64::NEG_INFINITY);
    }
}
