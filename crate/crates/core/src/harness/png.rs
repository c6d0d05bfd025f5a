//! PNG grids and strips of image batches.

use std::io::Cursor;
use std::path::Path;

use ::image::{ImageFormat, Rgb, RgbImage};

use crate::error::{Error, Result};
use crate::image::ImageBatch;
use crate::io::write_atomic;

const GAP: u32 = 1;

fn to_byte(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Tiles `images` row-major into `cols` columns with a one-pixel gap.
pub fn tile(images: &ImageBatch<f32>, cols: usize) -> Result<RgbImage> {
    if images.is_empty() || cols == 0 {
        return Err(Error::invalid("nothing to tile"));
    }
    let g = images.geometry();
    if g.channels != 1 && g.channels != 3 {
        return Err(Error::dims(format!("cannot render {g} as RGB")));
    }
    let rows = images.len().div_ceil(cols);
    let (h, w) = (g.height as u32, g.width as u32);
    let mut out = RgbImage::from_pixel(
        cols as u32 * (w + GAP) - GAP,
        rows as u32 * (h + GAP) - GAP,
        Rgb([48, 48, 48]),
    );
    for (i, img) in images.samples().enumerate() {
        let (x0, y0) = ((i % cols) as u32 * (w + GAP), (i / cols) as u32 * (h + GAP));
        for y in 0..g.height {
            for x in 0..g.width {
                let p = &img[(y * g.width + x) * g.channels..][..g.channels];
                let rgb = if g.channels == 1 {
                    [to_byte(p[0]); 3]
                } else {
                    [to_byte(p[0]), to_byte(p[1]), to_byte(p[2])]
                };
                out.put_pixel(x0 + x as u32, y0 + y as u32, Rgb(rgb));
            }
        }
    }
    Ok(out)
}

pub fn write_png(path: &Path, picture: &RgbImage) -> Result<()> {
    let mut bytes = Cursor::new(Vec::new());
    picture.write_to(&mut bytes, ImageFormat::Png)?;
    write_atomic(path, bytes.get_ref())
}

pub fn write_grid(path: &Path, images: &ImageBatch<f32>, cols: usize) -> Result<()> {
    write_png(path, &tile(images, cols)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::Geometry;

    #[test]
    fn tile_layout_and_colors() {
        let g = Geometry::new(2, 2, 3);
        let mut data = vec![0.0f32; 3 * 12];
        data[12..24].chunks_mut(3).for_each(|p| p.copy_from_slice(&[1.0, 0.5, 0.0]));
        let batch = ImageBatch::new(g, data).unwrap();
        let pic = tile(&batch, 2).unwrap();
        assert_eq!(pic.dimensions(), (5, 5));
        assert_eq!(pic.get_pixel(0, 0), &Rgb([0, 0, 0]));
        assert_eq!(pic.get_pixel(3, 0), &Rgb([255, 128, 0]));
        assert_eq!(pic.get_pixel(2, 0), &Rgb([48, 48, 48]));
    }

    #[test]
    fn png_file_is_written() {
        let dir = tempfile::tempdir().unwrap();
        let batch = ImageBatch::new(Geometry::new(3, 3, 1), vec![0.5f32; 18]).unwrap();
        let path = dir.path().join("g.png");
        write_grid(&path, &batch, 1).unwrap();
        let back = ::image::open(&path).unwrap().to_rgb8();
        assert_eq!(back.dimensions(), (3, 7));
    }
}
