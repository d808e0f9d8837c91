//! Display rendering: quantile clipping and colour-coded band composites.
//!
//! Rendering always works on copies; the raw reconstructions are never
//! modified.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Image;

/// Fraction of highest pixel values saturated for display.
pub const DEFAULT_HIGH_CLIP: f64 = 0.005;
/// Fraction of lowest pixel values saturated for display.
pub const DEFAULT_LOW_CLIP: f64 = 0.0002;

pub const BLUE: [f64; 3] = [0.0, 0.45, 1.0];
pub const YELLOW: [f64; 3] = [1.0, 0.85, 0.0];
pub const GREEN: [f64; 3] = [0.0, 1.0, 0.0];
pub const RED: [f64; 3] = [1.0, 0.0, 0.0];
pub const WHITE: [f64; 3] = [1.0, 1.0, 1.0];

/// Floating-point RGB raster; row 0 is the smallest y, matching [`Image`] indexing.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    data: Vec<[f64; 3]>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize) -> Self {
        RgbImage { width, height, data: vec![[0.0; 3]; width * height] }
    }

    pub fn from_pixels(width: usize, height: usize, data: Vec<[f64; 3]>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::shape(format!("{} pixels for a {width}x{height} image", data.len())));
        }
        Ok(RgbImage { width, height, data })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixel(&self, col: usize, row: usize) -> [f64; 3] {
        self.data[row * self.width + col]
    }

    pub fn pixels(&self) -> &[[f64; 3]] {
        &self.data
    }

    pub fn pixels_mut(&mut self) -> &mut [[f64; 3]] {
        &mut self.data
    }

    /// ITU-R BT.601 luma of every pixel, row-major.
    pub fn luminance(&self) -> Vec<f64> {
        self.data.iter().map(|p| 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]).collect()
    }

    /// 8-bit RGBA, top row first (largest y), for canvas display.
    pub fn to_rgba8(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.data.len() * 4);
        for row in (0..self.height).rev() {
            for col in 0..self.width {
                for c in self.pixel(col, row) {
                    out.push((c.clamp(0.0, 1.0) * 255.0).round() as u8);
                }
                out.push(255);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Clipped {
    /// Values in `[0, 1]`.
    pub image: Image,
    pub lo: f64,
    pub hi: f64,
    /// Set when the clipped range is empty and the output is all zeros.
    pub degenerate: bool,
}

/// Saturates values outside the `[low_frac, 1 - high_frac]` quantiles and
/// rescales to `[0, 1]`. Quantiles are order statistics of the sorted pixels:
/// the lower bound is element `⌊low_frac·n⌋`, the upper element `n-1-⌊high_frac·n⌋`.
pub fn clip_normalize(img: &Image, high_frac: f64, low_frac: f64) -> Result<Clipped> {
    for f in [high_frac, low_frac] {
        if !(0.0..0.5).contains(&f) {
            return Err(Error::param(format!("clip fraction {f} must lie in [0, 0.5)")));
        }
    }
    let mut sorted = img.values().to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let lo = sorted[(low_frac * n as f64).floor() as usize];
    let hi = sorted[n - 1 - (high_frac * n as f64).floor() as usize];
    let mut out = Image::zeros(*img.grid());
    let degenerate = !(hi > lo);
    if !degenerate {
        let scale = 1.0 / (hi - lo);
        for (o, &v) in out.values_mut().iter_mut().zip(img.values()) {
            *o = (v.clamp(lo, hi) - lo) * scale;
        }
    }
    Ok(Clipped { image: out, lo, hi, degenerate })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompositeSpec {
    pub colors: Vec<[f64; 3]>,
    #[serde(default = "default_high")]
    pub high_clip: f64,
    #[serde(default = "default_low")]
    pub low_clip: f64,
}

fn default_high() -> f64 {
    DEFAULT_HIGH_CLIP
}

fn default_low() -> f64 {
    DEFAULT_LOW_CLIP
}

/// Low band blue and high band yellow for two bands; blue, green, red for
/// three; white for one. Other counts cycle through a fixed list.
pub fn default_palette(n: usize) -> Vec<[f64; 3]> {
    match n {
        1 => vec![WHITE],
        2 => vec![BLUE, YELLOW],
        3 => vec![BLUE, GREEN, RED],
        _ => [BLUE, GREEN, RED, YELLOW, [1.0, 0.0, 1.0], [0.0, 1.0, 1.0]].iter().cycle().take(n).copied().collect(),
    }
}

impl CompositeSpec {
    pub fn for_bands(n: usize) -> Self {
        CompositeSpec { colors: default_palette(n), high_clip: DEFAULT_HIGH_CLIP, low_clip: DEFAULT_LOW_CLIP }
    }

    /// Same palette with no clipping.
    pub fn unclipped(n: usize) -> Self {
        CompositeSpec { colors: default_palette(n), high_clip: 0.0, low_clip: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.colors.iter().flatten().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(Error::param("composite colours must lie in [0, 1]"));
        }
        for f in [self.high_clip, self.low_clip] {
            if !(0.0..0.5).contains(&f) {
                return Err(Error::param(format!("clip fraction {f} must lie in [0, 0.5)")));
            }
        }
        Ok(())
    }
}

/// Additive blend of clipped bands, clamped to `[0, 1]` per channel.
pub fn composite(bands: &[Image], spec: &CompositeSpec) -> Result<RgbImage> {
    spec.validate()?;
    if bands.is_empty() || bands.len() != spec.colors.len() {
        return Err(Error::shape(format!("{} bands for {} colours", bands.len(), spec.colors.len())));
    }
    let grid = *bands[0].grid();
    for b in &bands[1..] {
        b.check_same_grid(&bands[0])?;
    }
    let mut out = RgbImage::new(grid.nx(), grid.ny());
    for (band, color) in bands.iter().zip(&spec.colors) {
        let c = clip_normalize(band, spec.high_clip, spec.low_clip)?;
        for (px, &v) in out.data.iter_mut().zip(c.image.values()) {
            for ch in 0..3 {
                px[ch] += v * color[ch];
            }
        }
    }
    for px in &mut out.data {
        for ch in px.iter_mut() {
            *ch = ch.clamp(0.0, 1.0);
        }
    }
    Ok(out)
}

/// Grayscale display of a single image, replicated over the channels.
pub fn grayscale(img: &Image, high_frac: f64, low_frac: f64) -> Result<RgbImage> {
    composite(std::slice::from_ref(img), &CompositeSpec { colors: vec![WHITE], high_clip: high_frac, low_clip: low_frac })
}
