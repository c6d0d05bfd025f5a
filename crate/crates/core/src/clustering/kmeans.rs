//! k-means++ seeding followed by Lloyd iterations.

use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct KMeans {
    /// `k x dim`, row-major.
    pub centroids: Vec<f64>,
    pub labels: Vec<usize>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centroids: &[f64], dim: usize) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.chunks(dim).enumerate() {
        let d = sq_dist(point, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// Clusters `n x dim` points into `k` groups. Empty clusters keep their
/// previous centroid.
pub fn kmeans<R: Rng + ?Sized>(points: &[f64], dim: usize, k: usize, iterations: usize, rng: &mut R) -> Result<KMeans> {
    if dim == 0 || points.len() % dim != 0 {
        return Err(Error::dims("points do not form rows of the given dimension"));
    }
    let n = points.len() / dim;
    if k == 0 || n < k {
        return Err(Error::invalid(format!("cannot form {k} clusters from {n} points")));
    }
    let row = |i: usize| &points[i * dim..(i + 1) * dim];
    let mut centroids = Vec::with_capacity(k * dim);
    centroids.extend_from_slice(row(rng.random_range(0..n)));
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(row(i), &centroids[..dim])).collect();
    while centroids.len() < k * dim {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        let start = centroids.len();
        centroids.extend_from_slice(row(pick));
        for i in 0..n {
            d2[i] = d2[i].min(sq_dist(row(i), &centroids[start..]));
        }
    }
    let mut labels = vec![0usize; n];
    for _ in 0..=iterations {
        for (i, label) in labels.iter_mut().enumerate() {
            *label = nearest(row(i), &centroids, dim).0;
        }
        let mut sums = vec![0.0; k * dim];
        let mut counts = vec![0usize; k];
        for i in 0..n {
            counts[labels[i]] += 1;
            for j in 0..dim {
                sums[labels[i] * dim + j] += points[i * dim + j];
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                for j in 0..dim {
                    centroids[c * dim + j] = sums[c * dim + j] / counts[c] as f64;
                }
            }
        }
    }
    for (i, label) in labels.iter_mut().enumerate() {
        *label = nearest(row(i), &centroids, dim).0;
    }
    Ok(KMeans { centroids, labels })
}
