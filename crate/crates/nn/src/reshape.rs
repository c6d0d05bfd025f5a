//! Layout conversions between image batches (`N x H x W x C`), channel-major
//! conv activations (`C x N x H x W`) and flat feature rows (`N x (C*H*W)`).

pub fn nhwc_to_cnhw<T: Copy + Default>(x: &[T], n: usize, h: usize, w: usize, c: usize) -> Vec<T> {
    assert_eq!(x.len(), n * h * w * c);
    let mut out = vec![T::default(); x.len()];
    for s in 0..n {
        for p in 0..h * w {
            for ch in 0..c {
                out[(ch * n + s) * h * w + p] = x[(s * h * w + p) * c + ch];
            }
        }
    }
    out
}

pub fn cnhw_to_nhwc<T: Copy + Default>(x: &[T], n: usize, h: usize, w: usize, c: usize) -> Vec<T> {
    assert_eq!(x.len(), n * h * w * c);
    let mut out = vec![T::default(); x.len()];
    for s in 0..n {
        for p in 0..h * w {
            for ch in 0..c {
                out[(s * h * w + p) * c + ch] = x[(ch * n + s) * h * w + p];
            }
        }
    }
    out
}

/// `C x N x HW` to `N x (C*HW)`.
pub fn cnhw_to_rows<T: Copy + Default>(x: &[T], n: usize, c: usize, hw: usize) -> Vec<T> {
    assert_eq!(x.len(), n * c * hw);
    let mut out = vec![T::default(); x.len()];
    for ch in 0..c {
        for s in 0..n {
            let src = &x[(ch * n + s) * hw..(ch * n + s + 1) * hw];
            out[(s * c + ch) * hw..(s * c + ch + 1) * hw].copy_from_slice(src);
        }
    }
    out
}

pub fn rows_to_cnhw<T: Copy + Default>(x: &[T], n: usize, c: usize, hw: usize) -> Vec<T> {
    assert_eq!(x.len(), n * c * hw);
    let mut out = vec![T::default(); x.len()];
    for ch in 0..c {
        for s in 0..n {
            let src = &x[(s * c + ch) * hw..(s * c + ch + 1) * hw];
            out[(ch * n + s) * hw..(ch * n + s + 1) * hw].copy_from_slice(src);
        }
    }
    out
}
