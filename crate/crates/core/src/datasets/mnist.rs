//! IDX parsing and per-class colorization.

use std::io::Read;
use std::path::Path;

use flate2::read::GzDecoder;

use super::{ColorPalette, Feature, LabeledImageSet};
use crate::error::{Error, Result};
use crate::image::{Geometry, ImageBatch};

static BUNDLED_IMAGES: &[u8] = include_bytes!("../../data/mnist10k-images-idx3-ubyte.gz");
static BUNDLED_LABELS: &[u8] = include_bytes!("../../data/mnist10k-labels-idx1-ubyte.gz");

fn maybe_gunzip(bytes: &[u8]) -> Result<Vec<u8>> {
    if bytes.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(bytes).read_to_end(&mut out).map_err(|e| Error::Format {
            what: "gzip stream",
            detail: e.to_string(),
        })?;
        Ok(out)
    } else {
        Ok(bytes.to_vec())
    }
}

fn be_u32(b: &[u8], at: usize) -> Result<usize> {
    b.get(at..at + 4)
        .map(|s| u32::from_be_bytes([s[0], s[1], s[2], s[3]]) as usize)
        .ok_or_else(|| Error::Format {
            what: "IDX header",
            detail: "truncated".into(),
        })
}

/// IDX3 (`0x00000803`) image file, optionally gzipped; pixels scaled to [0, 1].
pub fn parse_idx_images(bytes: &[u8]) -> Result<ImageBatch<f32>> {
    let raw = maybe_gunzip(bytes)?;
    if be_u32(&raw, 0)? != 0x803 {
        return Err(Error::Format {
            what: "IDX image file",
            detail: "bad magic".into(),
        });
    }
    let (n, h, w) = (be_u32(&raw, 4)?, be_u32(&raw, 8)?, be_u32(&raw, 12)?);
    let body = &raw[16..];
    if body.len() != n * h * w {
        return Err(Error::Format {
            what: "IDX image file",
            detail: format!("expected {} pixels, found {}", n * h * w, body.len()),
        });
    }
    let data = body.iter().map(|&p| p as f32 / 255.0).collect();
    ImageBatch::new(Geometry::new(h, w, 1), data)
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u32>> {
    let raw = maybe_gunzip(bytes)?;
    if be_u32(&raw, 0)? != 0x801 {
        return Err(Error::Format {
            what: "IDX label file",
            detail: "bad magic".into(),
        });
    }
    let n = be_u32(&raw, 4)?;
    let body = &raw[8..];
    if body.len() != n {
        return Err(Error::Format {
            what: "IDX label file",
            detail: format!("expected {n} labels, found {}", body.len()),
        });
    }
    Ok(body.iter().map(|&l| l as u32).collect())
}

fn digit_set(images: ImageBatch<f32>, labels: Vec<u32>) -> Result<LabeledImageSet> {
    if let Some(bad) = labels.iter().find(|&&l| l > 9) {
        return Err(Error::invalid(format!("digit label {bad} outside 0-9")));
    }
    LabeledImageSet::new(images, labels, Vec::new())
}

pub fn read_idx_pair(images: &Path, labels: &Path) -> Result<LabeledImageSet> {
    let read = |p: &Path| std::fs::read(p).map_err(|e| Error::io(p, e));
    digit_set(parse_idx_images(&read(images)?)?, parse_idx_labels(&read(labels)?)?)
}

/// The 10,000 grayscale digits shipped with the crate (shuffled, class-mixed).
pub fn bundled_mnist() -> Result<LabeledImageSet> {
    digit_set(parse_idx_images(BUNDLED_IMAGES)?, parse_idx_labels(BUNDLED_LABELS)?)
}

fn colorize(gray: &LabeledImageSet, color_of: impl Fn(u32) -> Result<[f32; 3]>) -> Result<ImageBatch<f32>> {
    let g = gray.images.geometry();
    if g.channels != 1 {
        return Err(Error::dims(format!("expected grayscale images, got {g}")));
    }
    let mut data = Vec::with_capacity(gray.len() * g.height * g.width * 3);
    for (img, &label) in gray.images.samples().zip(&gray.class_labels) {
        let color = color_of(label)?;
        for &v in img {
            data.extend(color.iter().map(|c| v * c));
        }
    }
    ImageBatch::new(Geometry::new(g.height, g.width, 3), data)
}

fn color_features(n_colors: usize, code_of: impl Fn(usize) -> usize, n: usize) -> Vec<Feature> {
    (0..n_colors)
        .map(|k| Feature {
            name: ColorPalette::feature_name(k),
            flags: (0..n).map(|i| code_of(i) == k).collect(),
        })
        .collect()
}

/// Each digit class gets its palette color: `rgb = intensity * color`.
pub fn build_colored_mnist(gray: &LabeledImageSet, palette: &ColorPalette) -> Result<LabeledImageSet> {
    palette.validate()?;
    let images = colorize(gray, |l| palette.color(l))?;
    let labels = gray.class_labels.clone();
    let features = color_features(palette.colors.len(), |i| labels[i] as usize, labels.len());
    LabeledImageSet::new(images, labels, features)
}

/// Every image takes `palette[chosen_class]`; true digit labels are kept.
pub fn build_single_color_test(
    gray: &LabeledImageSet,
    palette: &ColorPalette,
    chosen_class: u32,
) -> Result<LabeledImageSet> {
    palette.validate()?;
    let color = palette.color(chosen_class)?;
    let images = colorize(gray, |_| Ok(color))?;
    let features = color_features(palette.colors.len(), |_| chosen_class as usize, gray.len());
    LabeledImageSet::new(images, gray.class_labels.clone(), features)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gray(values: Vec<f32>, labels: Vec<u32>) -> LabeledImageSet {
        let n = labels.len();
        let per = values.len() / n;
        let side = (per as f64).sqrt() as usize;
        LabeledImageSet::new(
            ImageBatch::new(Geometry::new(side, side, 1), values).unwrap(),
            labels,
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn bundled_digits_load() {
        let set = bundled_mnist().unwrap();
        assert_eq!(set.len(), 10_000);
        assert_eq!(set.images.geometry(), Geometry::new(28, 28, 1));
        for d in 0..10 {
            assert!(set.class_labels.iter().filter(|&&l| l == d).count() > 800);
        }
    }

    #[test]
    fn zero_image_stays_zero_and_white_takes_color() {
        let palette = ColorPalette::default();
        let set = gray(vec![0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0], vec![3, 5]);
        let out = build_colored_mnist(&set, &palette).unwrap();
        assert!(out.images.sample(0).iter().all(|&v| v == 0.0));
        assert_eq!(&out.images.sample(1)[..3], &[1.0, 1.0, 0.0]);
        assert_eq!(out.feature("color_5").unwrap(), &[false, true]);
        assert_eq!(out.feature("color_3").unwrap(), &[true, false]);
    }

    #[test]
    fn same_class_same_color() {
        let palette = ColorPalette::default();
        let set = gray(vec![1.0; 12], vec![5, 5, 3]);
        let out = build_colored_mnist(&set, &palette).unwrap();
        assert_eq!(out.images.sample(0), out.images.sample(1));
        assert_ne!(out.images.sample(0), out.images.sample(2));
    }

    #[test]
    fn single_color_uses_chosen_code() {
        let palette = ColorPalette::default();
        let set = gray(vec![0.5; 12], vec![0, 5, 9]);
        let out = build_single_color_test(&set, &palette, 5).unwrap();
        assert_eq!(out.len(), 3);
        assert_eq!(out.class_labels, vec![0, 5, 9]);
        for i in 0..3 {
            assert_eq!(&out.images.sample(i)[..3], &[0.5, 0.5, 0.0]);
        }
        let set_flags: Vec<_> = out
            .features
            .iter()
            .filter(|f| f.flags.iter().any(|&b| b))
            .map(|f| f.name.as_str())
            .collect();
        assert_eq!(set_flags, vec!["color_5"]);
        // own class: identical to the multi-color build
        let own = build_colored_mnist(&set, &palette).unwrap();
        assert_eq!(out.images.sample(1), own.images.sample(1));
        assert!(build_single_color_test(&set, &palette, 10).is_err());
    }

    #[test]
    fn bad_idx_is_rejected() {
        assert!(parse_idx_images(&[0, 0, 8, 1, 0, 0, 0, 0]).is_err());
        assert!(parse_idx_labels(&[0, 0, 8, 1, 0, 0, 0, 2, 1]).is_err());
    }
}
