//! Two-factor synthetic images: a filled glyph (shape) drawn in a flat color
//! on black, with combination frequencies set by an [`ImbalanceConfig`].

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Feature, LabeledImageSet};
use crate::error::{Error, Result};
use crate::image::{Geometry, ImageBatch};

pub const SYNTHETIC_SIDE: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Shape {
    Square,
    Disc,
    Triangle,
    Cross,
}

impl Shape {
    pub const ALL: [Shape; 4] = [Shape::Square, Shape::Disc, Shape::Triangle, Shape::Cross];

    pub fn name(self) -> &'static str {
        match self {
            Shape::Square => "square",
            Shape::Disc => "disc",
            Shape::Triangle => "triangle",
            Shape::Cross => "cross",
        }
    }

    pub fn from_name(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|sh| sh.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown shape `{s}`")))
    }

    /// Whether offset `(u, v)` from the glyph center is inside a glyph of radius `r`.
    fn covers(self, u: f32, v: f32, r: f32) -> bool {
        match self {
            Shape::Square => u.abs() <= 0.8 * r && v.abs() <= 0.8 * r,
            Shape::Disc => u * u + v * v <= r * r,
            Shape::Triangle => v >= -r && v <= 0.8 * r && u.abs() <= (v + r) / 1.8,
            Shape::Cross => {
                (u.abs() <= 0.3 * r && v.abs() <= r) || (v.abs() <= 0.3 * r && u.abs() <= r)
            }
        }
    }
}

const NAMED_COLORS: [(&str, [f32; 3]); 4] = [
    ("red", [1.0, 0.0, 0.0]),
    ("green", [0.0, 1.0, 0.0]),
    ("blue", [0.0, 0.0, 1.0]),
    ("yellow", [1.0, 1.0, 0.0]),
];

fn color_by_name(s: &str) -> Result<[f32; 3]> {
    NAMED_COLORS
        .iter()
        .find(|(n, _)| *n == s)
        .map(|(_, c)| *c)
        .ok_or_else(|| Error::invalid(format!("unknown color `{s}`")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Factor {
    pub name: String,
    pub levels: Vec<String>,
}

/// Sampling weights over every (shape, color) combination, row-major with
/// the shape as the outer factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImbalanceConfig {
    pub factors: Vec<Factor>,
    pub weights: Vec<f64>,
}

impl ImbalanceConfig {
    fn default_factors() -> Vec<Factor> {
        vec![
            Factor {
                name: "shape".into(),
                levels: Shape::ALL.iter().map(|s| s.name().to_string()).collect(),
            },
            Factor {
                name: "color".into(),
                levels: NAMED_COLORS.iter().map(|(n, _)| n.to_string()).collect(),
            },
        ]
    }

    pub fn new(factors: Vec<Factor>, weights: Vec<f64>) -> Result<Self> {
        let cfg = Self { factors, weights };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn uniform() -> Self {
        let factors = Self::default_factors();
        let n = factors.iter().map(|f| f.levels.len()).product::<usize>();
        Self {
            factors,
            weights: vec![1.0 / n as f64; n],
        }
    }

    /// Shape `minority` appears with probability `fraction`, the remaining
    /// shapes share the rest equally; colors are uniform and independent.
    pub fn minority_shape(minority: Shape, fraction: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&fraction) {
            return Err(Error::invalid("minority fraction must lie in [0, 1]"));
        }
        let factors = Self::default_factors();
        let n_shapes = factors[0].levels.len();
        let n_colors = factors[1].levels.len();
        let mut weights = Vec::with_capacity(n_shapes * n_colors);
        for s in Shape::ALL {
            let ws = if s == minority {
                fraction
            } else {
                (1.0 - fraction) / (n_shapes - 1) as f64
            };
            weights.extend(std::iter::repeat_n(ws / n_colors as f64, n_colors));
        }
        Self::new(factors, weights)
    }

    pub fn validate(&self) -> Result<()> {
        if self.factors.len() != 2 || self.factors[0].name != "shape" || self.factors[1].name != "color" {
            return Err(Error::invalid("factors must be [shape, color]"));
        }
        for l in &self.factors[0].levels {
            Shape::from_name(l)?;
        }
        for l in &self.factors[1].levels {
            color_by_name(l)?;
        }
        let combos: usize = self.factors.iter().map(|f| f.levels.len()).product();
        if combos == 0 || self.weights.len() != combos {
            return Err(Error::invalid(format!(
                "{} weights for {combos} factor combinations",
                self.weights.len()
            )));
        }
        if self.weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::invalid("weights must be nonnegative"));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("weights sum to {total}, not 1")));
        }
        Ok(())
    }

    pub fn shapes(&self) -> Vec<Shape> {
        self.factors[0].levels.iter().map(|l| Shape::from_name(l).unwrap()).collect()
    }

    pub fn color_names(&self) -> &[String] {
        &self.factors[1].levels
    }

    pub fn feature_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.factors[0].levels.iter().map(|l| format!("shape_{l}")).collect();
        names.extend(self.factors[1].levels.iter().map(|l| format!("color_{l}")));
        names
    }
}

fn render(shape: Shape, color: [f32; 3], rng: &mut (impl Rng + ?Sized), out: &mut [f32]) {
    let side = SYNTHETIC_SIDE as f32;
    let cx = side / 2.0 + rng.random_range(-4.0f32..=4.0);
    let cy = side / 2.0 + rng.random_range(-4.0f32..=4.0);
    let r = rng.random_range(6.0f32..=9.0);
    let brightness = rng.random_range(0.7f32..=1.0);
    for y in 0..SYNTHETIC_SIDE {
        for x in 0..SYNTHETIC_SIDE {
            let (u, v) = (x as f32 + 0.5 - cx, y as f32 + 0.5 - cy);
            if shape.covers(u, v, r) {
                let p = (y * SYNTHETIC_SIDE + x) * 3;
                for c in 0..3 {
                    out[p + c] = brightness * color[c];
                }
            }
        }
    }
}

/// `n` images of 32x32x3; class label is `shape_index * n_colors + color_index`.
pub fn build_two_factor_synthetic<R: Rng + ?Sized>(
    config: &ImbalanceConfig,
    n: usize,
    rng: &mut R,
) -> Result<LabeledImageSet> {
    config.validate()?;
    if n == 0 {
        return Err(Error::invalid("synthetic set size must be positive"));
    }
    let shapes = config.shapes();
    let colors: Vec<[f32; 3]> = config
        .color_names()
        .iter()
        .map(|c| color_by_name(c))
        .collect::<Result<_>>()?;
    let n_colors = colors.len();
    let pick = WeightedIndex::new(&config.weights).map_err(|e| Error::invalid(e.to_string()))?;
    let geometry = Geometry::new(SYNTHETIC_SIDE, SYNTHETIC_SIDE, 3);
    let mut images = ImageBatch::zeros(geometry, n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let combo = pick.sample(rng);
        let (s, c) = (combo / n_colors, combo % n_colors);
        render(shapes[s], colors[c], rng, images.sample_mut(i));
        labels.push(combo as u32);
    }
    let mut features = Vec::new();
    for (s, level) in config.factors[0].levels.iter().enumerate() {
        features.push(Feature {
            name: format!("shape_{level}"),
            flags: labels.iter().map(|&l| l as usize / n_colors == s).collect(),
        });
    }
    for (c, level) in config.factors[1].levels.iter().enumerate() {
        features.push(Feature {
            name: format!("color_{level}"),
            flags: labels.iter().map(|&l| l as usize % n_colors == c).collect(),
        });
    }
    LabeledImageSet::new(images, labels, features)
}
