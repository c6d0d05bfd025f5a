//! On-disk dataset cache: `<stem>.manifest` (key: value lines) next to
//! `<stem>.f32` (raw little-endian float32, `N x H x W x C`).

use std::path::{Path, PathBuf};

use super::{ColorPalette, Feature, LabeledImageSet};
use crate::error::{Error, Result};
use crate::image::{Geometry, ImageBatch};
use crate::io::{f32_from_le_bytes, f32_to_le_bytes, join_display, parse_list, read_file, write_atomic, Manifest};

const FORMAT: &str = "jigsaw-vae-dataset/1";

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CacheMeta {
    pub description: String,
    pub seed: u64,
    pub palette: Option<ColorPalette>,
}

fn paths(dir: &Path, stem: &str) -> (PathBuf, PathBuf) {
    (dir.join(format!("{stem}.manifest")), dir.join(format!("{stem}.f32")))
}

pub fn write_cache(dir: &Path, stem: &str, set: &LabeledImageSet, meta: &CacheMeta) -> Result<PathBuf> {
    let (manifest_path, data_path) = paths(dir, stem);
    let g = set.images.geometry();
    let mut m = Manifest::new();
    m.set("format", FORMAT)
        .set("description", &meta.description)
        .set("count", set.len())
        .set("height", g.height)
        .set("width", g.width)
        .set("channels", g.channels)
        .set("dtype", "f32le")
        .set("layout", "NHWC")
        .set("data_file", format!("{stem}.f32"))
        .set("seed", meta.seed);
    if let Some(p) = &meta.palette {
        m.set("palette", p.to_record());
    }
    m.set("labels", join_display(&set.class_labels, ","));
    m.set(
        "features",
        join_display(&set.features.iter().map(|f| f.name.clone()).collect::<Vec<_>>(), ","),
    );
    for f in &set.features {
        let bits: String = f.flags.iter().map(|&b| if b { '1' } else { '0' }).collect();
        m.set(&format!("feature.{}", f.name), bits);
    }
    write_atomic(&data_path, &f32_to_le_bytes(set.images.as_slice()))?;
    m.write(&manifest_path)?;
    Ok(manifest_path)
}

pub fn read_cache(dir: &Path, stem: &str) -> Result<(LabeledImageSet, CacheMeta)> {
    let (manifest_path, _) = paths(dir, stem);
    let m = Manifest::read(&manifest_path)?;
    if m.require("format")? != FORMAT {
        return Err(Error::Format {
            what: "dataset manifest",
            detail: format!("unsupported format `{}`", m.require("format")?),
        });
    }
    let g = Geometry::new(m.parse_value("height")?, m.parse_value("width")?, m.parse_value("channels")?);
    let count: usize = m.parse_value("count")?;
    let data = f32_from_le_bytes(&read_file(&dir.join(m.require("data_file")?))?)?;
    if data.len() != count * g.pixels() {
        return Err(Error::Format {
            what: "dataset array",
            detail: format!("{} values for {count} images of {g}", data.len()),
        });
    }
    let labels: Vec<u32> = parse_list(m.require("labels")?, "labels")?;
    let names: Vec<String> = parse_list(m.require("features")?, "features")?;
    let mut features = Vec::new();
    for name in names {
        let bits = m.require(&format!("feature.{name}"))?;
        let flags = bits
            .chars()
            .map(|c| match c {
                '1' => Ok(true),
                '0' => Ok(false),
                _ => Err(Error::Format {
                    what: "feature flags",
                    detail: format!("bad flag `{c}`"),
                }),
            })
            .collect::<Result<Vec<_>>>()?;
        features.push(Feature { name, flags });
    }
    let set = LabeledImageSet::new(ImageBatch::new(g, data)?, labels, features)?;
    let meta = CacheMeta {
        description: m.get("description").unwrap_or_default().to_string(),
        seed: m.parse_value("seed")?,
        palette: m.get("palette").map(ColorPalette::from_record).transpose()?,
    };
    Ok((set, meta))
}
