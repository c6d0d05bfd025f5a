//! Batches of `H x W x C` images stored sample-major (`N x H x W x C`).

use jvae_nn::Real;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Geometry {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
}

impl Geometry {
    pub fn new(height: usize, width: usize, channels: usize) -> Self {
        Self {
            height,
            width,
            channels,
        }
    }

    pub fn pixels(&self) -> usize {
        self.height * self.width * self.channels
    }
}

impl std::fmt::Display for Geometry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}x{}", self.height, self.width, self.channels)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageBatch<T = f32> {
    geometry: Geometry,
    data: Vec<T>,
}

impl<T: Real> ImageBatch<T> {
    pub fn new(geometry: Geometry, data: Vec<T>) -> Result<Self> {
        let per = geometry.pixels();
        if per == 0 {
            return Err(Error::dims(format!("degenerate geometry {geometry}")));
        }
        if data.len() % per != 0 {
            return Err(Error::dims(format!(
                "{} values is not a whole number of {geometry} images",
                data.len()
            )));
        }
        Ok(Self { geometry, data })
    }

    pub fn zeros(geometry: Geometry, n: usize) -> Self {
        Self {
            geometry,
            data: vec![T::zero(); n * geometry.pixels()],
        }
    }

    pub fn empty(geometry: Geometry) -> Self {
        Self::zeros(geometry, 0)
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.geometry.pixels()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn sample(&self, i: usize) -> &[T] {
        let per = self.geometry.pixels();
        &self.data[i * per..(i + 1) * per]
    }

    pub fn sample_mut(&mut self, i: usize) -> &mut [T] {
        let per = self.geometry.pixels();
        &mut self.data[i * per..(i + 1) * per]
    }

    pub fn samples(&self) -> std::slice::Chunks<'_, T> {
        self.data.chunks(self.geometry.pixels())
    }

    pub fn push(&mut self, image: &[T]) -> Result<()> {
        if image.len() != self.geometry.pixels() {
            return Err(Error::dims(format!(
                "image has {} values, batch geometry {} needs {}",
                image.len(),
                self.geometry,
                self.geometry.pixels()
            )));
        }
        self.data.extend_from_slice(image);
        Ok(())
    }

    pub fn select(&self, indices: &[usize]) -> Self {
        let mut data = Vec::with_capacity(indices.len() * self.geometry.pixels());
        for &i in indices {
            data.extend_from_slice(self.sample(i));
        }
        Self {
            geometry: self.geometry,
            data,
        }
    }

    pub fn range(&self, start: usize, end: usize) -> Self {
        let per = self.geometry.pixels();
        Self {
            geometry: self.geometry,
            data: self.data[start * per..end * per].to_vec(),
        }
    }

    pub fn cast<U: Real>(&self) -> ImageBatch<U> {
        ImageBatch {
            geometry: self.geometry,
            data: self.data.iter().map(|v| U::lit(v.as_f64())).collect(),
        }
    }

    pub fn ensure_geometry(&self, expected: Geometry) -> Result<()> {
        if self.geometry != expected {
            return Err(Error::dims(format!(
                "batch geometry {} does not match expected {expected}",
                self.geometry
            )));
        }
        Ok(())
    }
}
