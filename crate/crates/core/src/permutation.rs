//! Jigsaw permutations: the stochastic input layer.
//!
//! An image is cut into a `rows x cols` grid of equal tiles, indexed
//! row-major. A [`PermutationSpec`] reorders the tiles (output tile `k` is
//! input tile `tile_order[k]`) and optionally the color channels (output
//! channel `c` is input channel `channel_order[c]`). Pixel values are never
//! changed, only moved.
//!
//! Every spec is derived from a single `seed_id`, so a log line holding the
//! grid, channel count and seed is enough to replay it.

use std::fmt;
use std::str::FromStr;

use jvae_nn::Real;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::image::ImageBatch;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TileGrid {
    pub rows: usize,
    pub cols: usize,
    pub tile_height: usize,
    pub tile_width: usize,
}

impl TileGrid {
    pub fn new(rows: usize, cols: usize, tile_height: usize, tile_width: usize) -> Result<Self> {
        if rows == 0 || cols == 0 || tile_height == 0 || tile_width == 0 {
            return Err(Error::invalid("tile grid dimensions must be positive"));
        }
        Ok(Self {
            rows,
            cols,
            tile_height,
            tile_width,
        })
    }

    pub fn tiles(&self) -> usize {
        self.rows * self.cols
    }

    pub fn image_height(&self) -> usize {
        self.rows * self.tile_height
    }

    pub fn image_width(&self) -> usize {
        self.cols * self.tile_width
    }

    /// Number of distinct specs: `(rows*cols)!`, times `C!` with channel
    /// permutation. `None` on `u128` overflow.
    pub fn support_size(&self, channels: Option<usize>) -> Option<u128> {
        let spatial = factorial(self.tiles())?;
        match channels {
            Some(c) => spatial.checked_mul(factorial(c)?),
            None => Some(spatial),
        }
    }
}

fn factorial(n: usize) -> Option<u128> {
    (1..=n as u128).try_fold(1u128, |acc, k| acc.checked_mul(k))
}

/// Square `divisions x divisions` grid covering the image exactly.
pub fn make_grid(image_height: usize, image_width: usize, divisions: usize) -> Result<TileGrid> {
    if divisions == 0 {
        return Err(Error::invalid("divisions must be positive"));
    }
    if image_height % divisions != 0 || image_width % divisions != 0 {
        return Err(Error::dims(format!(
            "{image_height}x{image_width} image is not divisible into {divisions}x{divisions} tiles"
        )));
    }
    TileGrid::new(divisions, divisions, image_height / divisions, image_width / divisions)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PermutationSpec {
    pub grid: TileGrid,
    pub tile_order: Vec<usize>,
    pub channel_order: Option<Vec<usize>>,
    pub seed_id: u64,
}

fn is_bijection(order: &[usize]) -> bool {
    let mut seen = vec![false; order.len()];
    for &i in order {
        if i >= order.len() || seen[i] {
            return false;
        }
        seen[i] = true;
    }
    true
}

impl PermutationSpec {
    pub fn new(
        grid: TileGrid,
        tile_order: Vec<usize>,
        channel_order: Option<Vec<usize>>,
        seed_id: u64,
    ) -> Result<Self> {
        if tile_order.len() != grid.tiles() || !is_bijection(&tile_order) {
            return Err(Error::invalid(format!(
                "tile order {tile_order:?} is not a permutation of {} tiles",
                grid.tiles()
            )));
        }
        if let Some(ch) = &channel_order {
            if ch.is_empty() || !is_bijection(ch) {
                return Err(Error::invalid(format!("channel order {ch:?} is not a permutation")));
            }
        }
        Ok(Self {
            grid,
            tile_order,
            channel_order,
            seed_id,
        })
    }

    pub fn identity(grid: TileGrid, channels: Option<usize>) -> Self {
        Self {
            grid,
            tile_order: (0..grid.tiles()).collect(),
            channel_order: channels.map(|c| (0..c).collect()),
            seed_id: 0,
        }
    }

    /// Deterministically expands a seed into a spec: Fisher-Yates over the
    /// tiles, then (independently) over the channels.
    pub fn from_seed(grid: TileGrid, channels: Option<usize>, seed_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed_id);
        let mut tile_order: Vec<usize> = (0..grid.tiles()).collect();
        tile_order.shuffle(&mut rng);
        let channel_order = channels.map(|c| {
            let mut order: Vec<usize> = (0..c).collect();
            order.shuffle(&mut rng);
            order
        });
        Self {
            grid,
            tile_order,
            channel_order,
            seed_id,
        }
    }

    pub fn is_identity(&self) -> bool {
        let ident = |o: &[usize]| o.iter().enumerate().all(|(i, &v)| i == v);
        ident(&self.tile_order) && self.channel_order.as_deref().is_none_or(ident)
    }
}

/// Uniform draw over all tile orderings (and channel orderings when
/// `channels` is given). The identity is part of the support.
pub fn sample_permutation<R: Rng + ?Sized>(
    grid: TileGrid,
    channels: Option<usize>,
    rng: &mut R,
) -> PermutationSpec {
    PermutationSpec::from_seed(grid, channels, rng.random())
}

fn check_compatible<T: Real>(spec: &PermutationSpec, batch: &ImageBatch<T>) -> Result<()> {
    let g = batch.geometry();
    if g.height != spec.grid.image_height() || g.width != spec.grid.image_width() {
        return Err(Error::dims(format!(
            "grid covers {}x{} pixels but images are {}x{}",
            spec.grid.image_height(),
            spec.grid.image_width(),
            g.height,
            g.width
        )));
    }
    if let Some(ch) = &spec.channel_order {
        if ch.len() != g.channels {
            return Err(Error::dims(format!(
                "channel order has {} entries, images have {} channels",
                ch.len(),
                g.channels
            )));
        }
    }
    Ok(())
}

/// Moves pixels of one image from `src` to `dst` according to `spec`.
fn permute_image<T: Copy>(spec: &PermutationSpec, src: &[T], dst: &mut [T], width: usize, channels: usize) {
    let grid = &spec.grid;
    let row_len = grid.tile_width * channels;
    for (k, &from) in spec.tile_order.iter().enumerate() {
        let (dst_r, dst_c) = (k / grid.cols, k % grid.cols);
        let (src_r, src_c) = (from / grid.cols, from % grid.cols);
        for y in 0..grid.tile_height {
            let src_off = ((src_r * grid.tile_height + y) * width + src_c * grid.tile_width) * channels;
            let dst_off = ((dst_r * grid.tile_height + y) * width + dst_c * grid.tile_width) * channels;
            match &spec.channel_order {
                None => dst[dst_off..dst_off + row_len].copy_from_slice(&src[src_off..src_off + row_len]),
                Some(order) => {
                    for x in 0..grid.tile_width {
                        let s = src_off + x * channels;
                        let d = dst_off + x * channels;
                        for (c, &from_c) in order.iter().enumerate() {
                            dst[d + c] = src[s + from_c];
                        }
                    }
                }
            }
        }
    }
}

/// Applies one spec to every image of the batch.
pub fn apply<T: Real>(spec: &PermutationSpec, batch: &ImageBatch<T>) -> Result<ImageBatch<T>> {
    check_compatible(spec, batch)?;
    let g = batch.geometry();
    let mut out = ImageBatch::zeros(g, batch.len());
    for i in 0..batch.len() {
        permute_image(spec, batch.sample(i), out.sample_mut(i), g.width, g.channels);
    }
    Ok(out)
}

pub fn invert(spec: &PermutationSpec) -> PermutationSpec {
    let inverse = |order: &[usize]| {
        let mut inv = vec![0; order.len()];
        for (k, &from) in order.iter().enumerate() {
            inv[from] = k;
        }
        inv
    };
    PermutationSpec {
        grid: spec.grid,
        tile_order: inverse(&spec.tile_order),
        channel_order: spec.channel_order.as_deref().map(inverse),
        seed_id: spec.seed_id,
    }
}

/// Draws an independent spec for every sample and applies it.
pub fn apply_per_sample<T: Real, R: Rng + ?Sized>(
    batch: &ImageBatch<T>,
    grid: TileGrid,
    channels: Option<usize>,
    rng: &mut R,
) -> Result<(ImageBatch<T>, Vec<PermutationSpec>)> {
    let g = batch.geometry();
    let mut out = ImageBatch::zeros(g, batch.len());
    let mut specs = Vec::with_capacity(batch.len());
    for i in 0..batch.len() {
        let spec = sample_permutation(grid, channels, rng);
        if i == 0 {
            check_compatible(&spec, batch)?;
        }
        permute_image(&spec, batch.sample(i), out.sample_mut(i), g.width, g.channels);
        specs.push(spec);
    }
    Ok((out, specs))
}

/// Applies a previously drawn spec per sample (replay of [`apply_per_sample`]).
pub fn apply_specs<T: Real>(batch: &ImageBatch<T>, specs: &[PermutationSpec]) -> Result<ImageBatch<T>> {
    if specs.len() != batch.len() {
        return Err(Error::dims(format!(
            "{} specs for a batch of {}",
            specs.len(),
            batch.len()
        )));
    }
    let g = batch.geometry();
    let mut out = ImageBatch::zeros(g, batch.len());
    for (i, spec) in specs.iter().enumerate() {
        check_compatible(spec, batch)?;
        permute_image(spec, batch.sample(i), out.sample_mut(i), g.width, g.channels);
    }
    Ok(out)
}

fn join(v: &[usize]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

/// Plain-text record, e.g.
/// `grid=2x2 tile=14x14 tiles=3,2,1,0 channels=1,0,2 seed=42`
/// (`channels=-` when channels are not permuted).
impl fmt::Display for PermutationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "grid={}x{} tile={}x{} tiles={} channels={} seed={}",
            self.grid.rows,
            self.grid.cols,
            self.grid.tile_height,
            self.grid.tile_width,
            join(&self.tile_order),
            self.channel_order.as_deref().map_or_else(|| "-".to_string(), join),
            self.seed_id
        )
    }
}

impl FromStr for PermutationSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |detail: String| Error::Format {
            what: "permutation record",
            detail,
        };
        let mut fields = std::collections::HashMap::new();
        for part in s.split_whitespace() {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| bad(format!("field `{part}` has no `=`")))?;
            fields.insert(k, v);
        }
        let get = |k: &str| fields.get(k).copied().ok_or_else(|| bad(format!("missing `{k}`")));
        let pair = |v: &str| -> Result<(usize, usize)> {
            let (a, b) = v.split_once('x').ok_or_else(|| bad(format!("`{v}` is not AxB")))?;
            Ok((
                a.parse().map_err(|_| bad(format!("bad integer `{a}`")))?,
                b.parse().map_err(|_| bad(format!("bad integer `{b}`")))?,
            ))
        };
        let list = |v: &str| -> Result<Vec<usize>> {
            v.split(',')
                .map(|x| x.parse().map_err(|_| bad(format!("bad index `{x}`"))))
                .collect()
        };
        let (rows, cols) = pair(get("grid")?)?;
        let (th, tw) = pair(get("tile")?)?;
        let grid = TileGrid::new(rows, cols, th, tw)?;
        let tiles = list(get("tiles")?)?;
        let channels = match get("channels")? {
            "-" => None,
            v => Some(list(v)?),
        };
        let seed = get("seed")?
            .parse()
            .map_err(|_| bad("bad seed".to_string()))?;
        PermutationSpec::new(grid, tiles, channels, seed)
    }
}
