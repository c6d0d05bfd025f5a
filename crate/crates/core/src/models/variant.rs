use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Geometry;
use crate::permutation::{make_grid, TileGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Vae,
    BetaVae,
    DVae,
    MixupVae,
    JigsawVae,
    JigsawBetaVae,
}

impl Variant {
    pub const ALL: [Variant; 6] = [
        Variant::Vae,
        Variant::BetaVae,
        Variant::DVae,
        Variant::MixupVae,
        Variant::JigsawVae,
        Variant::JigsawBetaVae,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Vae => "vae",
            Variant::BetaVae => "beta_vae",
            Variant::DVae => "d_vae",
            Variant::MixupVae => "mixup_vae",
            Variant::JigsawVae => "jigsaw_vae",
            Variant::JigsawBetaVae => "jigsaw_beta_vae",
        }
    }

    pub fn is_jigsaw(self) -> bool {
        matches!(self, Variant::JigsawVae | Variant::JigsawBetaVae)
    }

    pub fn uses_beta(self) -> bool {
        matches!(self, Variant::BetaVae | Variant::JigsawBetaVae)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown variant `{s}`")))
    }
}

/// Per-pixel observation model `p(x | z)`; the decoder output is its mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Likelihood {
    /// Continuous Bernoulli-style cross-entropy on [0, 1] pixels.
    Bernoulli,
    /// Gaussian with fixed standard deviation `likelihood_std`.
    Gaussian,
}

impl Likelihood {
    pub fn name(self) -> &'static str {
        match self {
            Likelihood::Bernoulli => "bernoulli",
            Likelihood::Gaussian => "gaussian",
        }
    }
}

impl fmt::Display for Likelihood {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Likelihood {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bernoulli" => Ok(Likelihood::Bernoulli),
            "gaussian" => Ok(Likelihood::Gaussian),
            _ => Err(Error::invalid(format!("unknown likelihood `{s}`"))),
        }
    }
}

/// Objective settings. Fields a variant does not use are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VariantConfig {
    pub variant: Variant,
    pub beta: f64,
    pub noise_std: f64,
    pub mixup_alpha: f64,
    pub grid_divisions: usize,
    pub permute_channels: bool,
    pub likelihood: Likelihood,
    /// Standard deviation of the Gaussian likelihood.
    pub likelihood_std: f64,
}

impl Default for VariantConfig {
    fn default() -> Self {
        Self {
            variant: Variant::Vae,
            beta: 4.0,
            noise_std: 0.1,
            mixup_alpha: 1.0,
            grid_divisions: 4,
            permute_channels: false,
            likelihood: Likelihood::Bernoulli,
            likelihood_std: 1.0,
        }
    }
}

impl VariantConfig {
    pub fn new(variant: Variant) -> Self {
        Self {
            variant,
            ..Self::default()
        }
    }

    /// KL weight actually used: `beta` for the beta variants, 1 otherwise.
    pub fn effective_beta(&self) -> f64 {
        if self.variant.uses_beta() {
            self.beta
        } else {
            1.0
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.variant.uses_beta() && !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::invalid("beta must be positive"));
        }
        if self.variant == Variant::DVae && !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::invalid("noise_std must be nonnegative"));
        }
        if self.variant == Variant::MixupVae && !(self.mixup_alpha > 0.0 && self.mixup_alpha.is_finite()) {
            return Err(Error::invalid("mixup_alpha must be positive"));
        }
        if !(self.likelihood_std > 0.0 && self.likelihood_std.is_finite()) {
            return Err(Error::invalid("likelihood_std must be positive"));
        }
        if self.variant.is_jigsaw() && self.grid_divisions == 0 {
            return Err(Error::invalid("grid_divisions must be positive"));
        }
        Ok(())
    }

    /// Tile grid and channel count for the jigsaw layer, if this variant has one.
    pub fn jigsaw_layer(&self, geometry: Geometry) -> Result<Option<(TileGrid, Option<usize>)>> {
        if !self.variant.is_jigsaw() {
            return Ok(None);
        }
        let grid = make_grid(geometry.height, geometry.width, self.grid_divisions)?;
        Ok(Some((grid, self.permute_channels.then_some(geometry.channels))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
        }
        assert!("vampprior".parse::<Variant>().is_err());
    }

    #[test]
    fn beta_only_for_beta_variants() {
        let mut c = VariantConfig::new(Variant::Vae);
        c.beta = 7.0;
        assert_eq!(c.effective_beta(), 1.0);
        c.variant = Variant::JigsawBetaVae;
        assert_eq!(c.effective_beta(), 7.0);
        c.beta = 0.0;
        assert!(c.validate().is_err());
    }
}
