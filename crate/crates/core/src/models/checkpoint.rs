//! Checkpoints: `<stem>.manifest` plus `<stem>.f32`.
//!
//! The array file holds the network parameters as little-endian `f32` in
//! tensor registration order (encoder convs, encoder head, decoder head,
//! decoder transposed convs), row-major within each tensor. The manifest
//! lists every tensor as `tensor.<name>: <shape> @ <offset>`. Extra named
//! arrays (the clustering prior, for instance) follow the parameters and
//! are listed as `extra.<name>` in the same way.

use std::path::{Path, PathBuf};

use super::model::ModelParams;
use super::network::{ArchConfig, VaeNet};
use super::variant::VariantConfig;
use crate::error::{Error, Result};
use crate::image::Geometry;
use crate::io::{f32_from_le_bytes, f32_to_le_bytes, join_display, parse_list, read_file, write_atomic, Manifest};

const FORMAT: &str = "jigsaw-vae-checkpoint/1";

#[derive(Debug, Clone, PartialEq)]
pub struct NamedArray {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: ModelParams<f32>,
    pub variant: VariantConfig,
    pub seed: u64,
    pub epoch: usize,
    pub extras: Vec<NamedArray>,
}

fn shape_record(shape: &[usize], offset: usize) -> String {
    format!("{} @ {offset}", join_display(shape, "x"))
}

fn parse_shape_record(s: &str) -> Result<(Vec<usize>, usize)> {
    let bad = || Error::Format {
        what: "checkpoint manifest",
        detail: format!("bad shape record `{s}`"),
    };
    let (shape, offset) = s.split_once('@').ok_or_else(bad)?;
    let shape = shape
        .trim()
        .split('x')
        .map(|d| d.parse().map_err(|_| bad()))
        .collect::<Result<Vec<usize>>>()?;
    Ok((shape, offset.trim().parse().map_err(|_| bad())?))
}

fn paths(dir: &Path, stem: &str) -> (PathBuf, PathBuf) {
    (dir.join(format!("{stem}.manifest")), dir.join(format!("{stem}.f32")))
}

impl Checkpoint {
    pub fn extra(&self, name: &str) -> Option<&NamedArray> {
        self.extras.iter().find(|a| a.name == name)
    }

    pub fn manifest(&self, stem: &str) -> Manifest {
        let g = self.model.geometry();
        let v = &self.variant;
        let mut m = Manifest::new();
        m.set("format", FORMAT)
            .set("height", g.height)
            .set("width", g.width)
            .set("channels", g.channels)
            .set("conv_channels", join_display(&self.model.net.arch.conv_channels, ","))
            .set("latent_dim", self.model.latent_dim())
            .set("variant", v.variant)
            .set("beta", v.beta)
            .set("noise_std", v.noise_std)
            .set("mixup_alpha", v.mixup_alpha)
            .set("grid_divisions", v.grid_divisions)
            .set("permute_channels", v.permute_channels)
            .set("likelihood", v.likelihood)
            .set("likelihood_std", v.likelihood_std)
            .set("seed", self.seed)
            .set("epoch", self.epoch)
            .set("dtype", "f32le")
            .set("data_file", format!("{stem}.f32"))
            .set("param_count", self.model.values.len());
        for t in self.model.net.layout().tensors() {
            m.set(&format!("tensor.{}", t.name), shape_record(&t.shape, t.slot.offset));
        }
        let mut offset = self.model.values.len();
        for a in &self.extras {
            m.set(&format!("extra.{}", a.name), shape_record(&a.shape, offset));
            offset += a.values.len();
        }
        m
    }

    pub fn write(&self, dir: &Path, stem: &str) -> Result<PathBuf> {
        let (manifest_path, data_path) = paths(dir, stem);
        let mut values = self.model.values.clone();
        for a in &self.extras {
            if a.shape.iter().product::<usize>() != a.values.len() {
                return Err(Error::dims(format!("extra array `{}` does not match its shape", a.name)));
            }
            values.extend_from_slice(&a.values);
        }
        write_atomic(&data_path, &f32_to_le_bytes(&values))?;
        self.manifest(stem).write(&manifest_path)?;
        Ok(manifest_path)
    }

    pub fn read(dir: &Path, stem: &str) -> Result<Self> {
        let (manifest_path, _) = paths(dir, stem);
        let m = Manifest::read(&manifest_path)?;
        if m.require("format")? != FORMAT {
            return Err(Error::Format {
                what: "checkpoint manifest",
                detail: format!("unsupported format `{}`", m.require("format")?),
            });
        }
        let geometry = Geometry::new(m.parse_value("height")?, m.parse_value("width")?, m.parse_value("channels")?);
        let arch = ArchConfig {
            conv_channels: parse_list(m.require("conv_channels")?, "conv_channels")?,
            latent_dim: m.parse_value("latent_dim")?,
        };
        let variant = VariantConfig {
            variant: m.parse_value("variant")?,
            beta: m.parse_value("beta")?,
            noise_std: m.parse_value("noise_std")?,
            mixup_alpha: m.parse_value("mixup_alpha")?,
            grid_divisions: m.parse_value("grid_divisions")?,
            permute_channels: m.parse_value("permute_channels")?,
            likelihood: m.parse_value("likelihood")?,
            likelihood_std: m.parse_value("likelihood_std")?,
        };
        let net = VaeNet::new(geometry, arch)?;
        let count: usize = m.parse_value("param_count")?;
        if count != net.param_count() {
            return Err(Error::Format {
                what: "checkpoint manifest",
                detail: format!("param_count {count} but the architecture has {}", net.param_count()),
            });
        }
        let mut all = f32_from_le_bytes(&read_file(&dir.join(m.require("data_file")?))?)?;
        let mut extras = Vec::new();
        for (key, value) in m.entries() {
            if let Some(name) = key.strip_prefix("extra.") {
                let (shape, offset) = parse_shape_record(value)?;
                let len: usize = shape.iter().product();
                let values = all.get(offset..offset + len).ok_or_else(|| Error::Format {
                    what: "checkpoint array",
                    detail: format!("extra `{name}` runs past the end of the file"),
                })?;
                extras.push(NamedArray {
                    name: name.to_string(),
                    shape,
                    values: values.to_vec(),
                });
            }
        }
        let expected = count + extras.iter().map(|a| a.values.len()).sum::<usize>();
        if all.len() != expected {
            return Err(Error::Format {
                what: "checkpoint array",
                detail: format!("{} values, expected {expected}", all.len()),
            });
        }
        all.truncate(count);
        Ok(Self {
            model: ModelParams::from_values(net, all)?,
            variant,
            seed: m.parse_value("seed")?,
            epoch: m.parse_value("epoch")?,
            extras,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::variant::Variant;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip_is_bit_exact() {
        let arch = ArchConfig {
            conv_channels: vec![2, 3],
            latent_dim: 2,
        };
        let model = ModelParams::init(Geometry::new(8, 8, 3), arch, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let mut variant = VariantConfig::new(Variant::JigsawBetaVae);
        variant.beta = 0.1 + 0.2;
        variant.permute_channels = true;
        let ck = Checkpoint {
            model,
            variant,
            seed: u64::MAX,
            epoch: 3,
            extras: vec![NamedArray {
                name: "mixture.weights".into(),
                shape: vec![3],
                values: vec![0.2, 0.3, f32::MIN_POSITIVE],
            }],
        };
        let dir = tempfile::tempdir().unwrap();
        ck.write(dir.path(), "ck").unwrap();
        let back = Checkpoint::read(dir.path(), "ck").unwrap();
        assert_eq!(back, ck);
        let text = std::fs::read_to_string(dir.path().join("ck.manifest")).unwrap();
        assert!(text.contains("tensor.encoder.conv0.weight: 2x3x4x4 @ 0"), "{text}");
    }

    #[test]
    fn truncated_array_is_rejected() {
        let arch = ArchConfig {
            conv_channels: vec![2],
            latent_dim: 2,
        };
        let model = ModelParams::init(Geometry::new(4, 4, 1), arch, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let ck = Checkpoint {
            model,
            variant: VariantConfig::default(),
            seed: 0,
            epoch: 0,
            extras: vec![],
        };
        let dir = tempfile::tempdir().unwrap();
        ck.write(dir.path(), "ck").unwrap();
        let data = dir.path().join("ck.f32");
        let bytes = std::fs::read(&data).unwrap();
        std::fs::write(&data, &bytes[..bytes.len() - 4]).unwrap();
        assert!(Checkpoint::read(dir.path(), "ck").is_err());
    }
}
