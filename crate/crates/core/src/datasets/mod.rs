//! Labeled image sets: colored MNIST and the synthetic two-factor set.

mod cache;
mod mnist;
mod palette;
mod synthetic;

pub use cache::{read_cache, write_cache, CacheMeta};
pub use mnist::{
    build_colored_mnist, build_single_color_test, bundled_mnist, parse_idx_images, parse_idx_labels,
    read_idx_pair,
};
pub use palette::ColorPalette;
pub use synthetic::{build_two_factor_synthetic, Factor, ImbalanceConfig, Shape, SYNTHETIC_SIDE};

use crate::error::{Error, Result};
use crate::image::ImageBatch;

/// A named ground-truth flag, one entry per image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Feature {
    pub name: String,
    pub flags: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledImageSet {
    pub images: ImageBatch<f32>,
    pub class_labels: Vec<u32>,
    pub features: Vec<Feature>,
}

impl LabeledImageSet {
    pub fn new(images: ImageBatch<f32>, class_labels: Vec<u32>, features: Vec<Feature>) -> Result<Self> {
        let n = images.len();
        if class_labels.len() != n {
            return Err(Error::dims(format!("{} labels for {n} images", class_labels.len())));
        }
        for f in &features {
            if f.flags.len() != n {
                return Err(Error::dims(format!(
                    "feature `{}` has {} flags for {n} images",
                    f.name,
                    f.flags.len()
                )));
            }
        }
        let mut names: Vec<&str> = features.iter().map(|f| f.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("duplicate feature names"));
        }
        if images.as_slice().iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::invalid("pixel values must lie in [0, 1]"));
        }
        Ok(Self {
            images,
            class_labels,
            features,
        })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn feature(&self, name: &str) -> Result<&[bool]> {
        self.features
            .iter()
            .find(|f| f.name == name)
            .map(|f| f.flags.as_slice())
            .ok_or_else(|| Error::UnknownFeature(name.to_string()))
    }

    pub fn feature_names(&self) -> Vec<&str> {
        self.features.iter().map(|f| f.name.as_str()).collect()
    }

    pub fn count_with(&self, name: &str) -> Result<usize> {
        Ok(self.feature(name)?.iter().filter(|&&b| b).count())
    }

    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            images: self.images.select(indices),
            class_labels: indices.iter().map(|&i| self.class_labels[i]).collect(),
            features: self
                .features
                .iter()
                .map(|f| Feature {
                    name: f.name.clone(),
                    flags: indices.iter().map(|&i| f.flags[i]).collect(),
                })
                .collect(),
        }
    }

    /// First `n` images and the rest.
    pub fn split_at(&self, n: usize) -> (Self, Self) {
        let n = n.min(self.len());
        let head: Vec<usize> = (0..n).collect();
        let tail: Vec<usize> = (n..self.len()).collect();
        (self.select(&head), self.select(&tail))
    }
}

/// `N_tf / N_t` for a ground-truth feature.
pub fn train_feature_frequency(set: &LabeledImageSet, feature: &str) -> Result<f64> {
    let flags = set.feature(feature)?;
    if flags.is_empty() {
        return Err(Error::invalid("empty set has no feature frequency"));
    }
    let with = flags.iter().filter(|&&b| b).count();
    Ok(with as f64 / flags.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::Geometry;

    fn set(flags: Vec<bool>) -> LabeledImageSet {
        let n = flags.len();
        LabeledImageSet::new(
            ImageBatch::zeros(Geometry::new(2, 2, 1), n),
            vec![0; n],
            vec![Feature {
                name: "f".into(),
                flags,
            }],
        )
        .unwrap()
    }

    #[test]
    fn frequency_examples() {
        assert_eq!(train_feature_frequency(&set(vec![true; 5]), "f").unwrap(), 1.0);
        assert_eq!(train_feature_frequency(&set(vec![false; 5]), "f").unwrap(), 0.0);
        let mut flags = vec![false; 10_000];
        flags.iter_mut().take(228).for_each(|b| *b = true);
        assert!((train_feature_frequency(&set(flags), "f").unwrap() - 0.0228).abs() < 1e-15);
        assert!(matches!(
            train_feature_frequency(&set(vec![true]), "g"),
            Err(Error::UnknownFeature(_))
        ));
    }

    #[test]
    fn inconsistent_lengths_are_rejected() {
        let r = LabeledImageSet::new(ImageBatch::zeros(Geometry::new(2, 2, 1), 3), vec![0; 2], vec![]);
        assert!(r.is_err());
    }
}
