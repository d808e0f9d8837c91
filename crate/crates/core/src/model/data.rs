use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ImagingGrid, Timing};

/// Detector × time pressure data in arbitrary units.
///
/// Stored row-major: sample `k` of detector `d` is `data[d * n_samples + k]`,
/// which is also the row index of the forward model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sinogram {
    n_detectors: usize,
    timing: Timing,
    data: Vec<f64>,
}

impl Sinogram {
    pub fn zeros(n_detectors: usize, timing: Timing) -> Self {
        Sinogram { n_detectors, timing, data: vec![0.0; n_detectors * timing.n_samples] }
    }

    pub fn from_data(n_detectors: usize, timing: Timing, data: Vec<f64>) -> Result<Self> {
        if data.len() != n_detectors * timing.n_samples {
            return Err(Error::shape(format!(
                "sinogram data has {} values, expected {} x {}",
                data.len(),
                n_detectors,
                timing.n_samples
            )));
        }
        Ok(Sinogram { n_detectors, timing, data })
    }

    pub fn n_detectors(&self) -> usize {
        self.n_detectors
    }

    pub fn n_samples(&self) -> usize {
        self.timing.n_samples
    }

    pub fn timing(&self) -> &Timing {
        &self.timing
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn trace(&self, d: usize) -> &[f64] {
        let n = self.timing.n_samples;
        &self.data[d * n..(d + 1) * n]
    }

    pub fn trace_mut(&mut self, d: usize) -> &mut [f64] {
        let n = self.timing.n_samples;
        &mut self.data[d * n..(d + 1) * n]
    }

    pub fn traces(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.timing.n_samples)
    }

    pub fn same_shape(&self, other: &Sinogram) -> bool {
        self.n_detectors == other.n_detectors && self.timing.n_samples == other.timing.n_samples
    }

    pub fn check_same_shape(&self, other: &Sinogram) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::shape(format!(
                "sinogram {}x{} vs {}x{}",
                self.n_detectors,
                self.n_samples(),
                other.n_detectors,
                other.n_samples()
            )))
        }
    }

    pub fn norm(&self) -> f64 {
        norm2(&self.data)
    }

    pub fn dot(&self, other: &Sinogram) -> f64 {
        dot(&self.data, &other.data)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `self += s * other`
    pub fn add_scaled(&mut self, s: f64, other: &Sinogram) -> Result<()> {
        self.check_same_shape(other)?;
        axpy(s, &other.data, &mut self.data);
        Ok(())
    }
}

/// Scalar field on an imaging grid, row-major (`j * nx + i`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Image {
    grid: ImagingGrid,
    values: Vec<f64>,
}

impl Image {
    pub fn zeros(grid: ImagingGrid) -> Self {
        Image { grid, values: vec![0.0; grid.n_pixels()] }
    }

    pub fn from_values(grid: ImagingGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_pixels() {
            return Err(Error::shape(format!(
                "image has {} values, grid {}x{} needs {}",
                values.len(),
                grid.nx(),
                grid.ny(),
                grid.n_pixels()
            )));
        }
        Ok(Image { grid, values })
    }

    pub fn grid(&self) -> &ImagingGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.grid.nx() + i]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let nx = self.grid.nx();
        self.values[j * nx + i] = v;
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// True when every value is `>= 0`, i.e. the image is a valid absorption map.
    pub fn is_nonnegative(&self) -> bool {
        self.values.iter().all(|&v| v >= 0.0)
    }

    pub fn norm(&self) -> f64 {
        norm2(&self.values)
    }

    pub fn dot(&self, other: &Image) -> f64 {
        dot(&self.values, &other.values)
    }

    pub fn check_same_grid(&self, other: &Image) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::shape("images live on different grids"))
        }
    }

    /// Pixelwise sum of images sharing a grid.
    pub fn sum<'a>(images: impl IntoIterator<Item = &'a Image>) -> Result<Image> {
        let mut it = images.into_iter();
        let first = it.next().ok_or_else(|| Error::param("cannot sum zero images"))?;
        let mut acc = first.clone();
        for img in it {
            acc.check_same_grid(img)?;
            axpy(1.0, &img.values, &mut acc.values);
        }
        Ok(acc)
    }

    pub fn scaled(&self, s: f64) -> Image {
        Image { grid: self.grid, values: self.values.iter().map(|v| v * s).collect() }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn axpy(s: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += s * xi;
    }
}
