//! Blockwise no-reference perceptual quality score.
//!
//! The luminance image (0–255) is turned into mean-subtracted
//! contrast-normalised (MSCN) coefficients with a 7×7 Gaussian (σ = 7/6,
//! replicated borders, stabiliser 1). The image is cropped to whole 16×16
//! blocks; a block is active when its MSCN variance exceeds 0.1. An active
//! block shows a noticeable artifact when any 6-sample segment along one of its
//! four edges has standard deviation below 0.1, and noise when its standard
//! deviation σ exceeds twice `β = |σ - r| / max(σ, r)`, where `r` is the ratio
//! of the standard deviation of the two centre columns to that of the
//! remaining columns. The block distortion is `(1 - ν)` for an artifact plus
//! `ν` for noise, `ν` being the block variance, and the score is
//! `100 · (Σ distortion + 1) / (active blocks + 1)`.

use crate::error::{Error, Result};
use crate::render::RgbImage;

use super::ssim::gaussian_taps;

pub const BLOCK: usize = 16;
pub const ACTIVITY_THRESHOLD: f64 = 0.1;
pub const SEGMENT_LEN: usize = 6;
pub const EDGE_THRESHOLD: f64 = 0.1;
const MSCN_WINDOW: usize = 7;
const MSCN_SIGMA: f64 = 7.0 / 6.0;
const MSCN_C: f64 = 1.0;
const MIN_SIDE: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct PiqeResult {
    /// Score in `[0, 100]`, lower is better.
    pub score: f64,
    pub active_blocks: usize,
    pub artifact_blocks: usize,
    pub noise_blocks: usize,
    /// Set when no block is active; the score is then 100.
    pub no_active_blocks: bool,
}

fn gray_255(img: &RgbImage) -> Vec<f64> {
    img.pixels()
        .iter()
        .map(|p| 255.0 * (0.2989 * p[0] + 0.5870 * p[1] + 0.1140 * p[2]))
        .collect()
}

/// Same-size separable filtering with replicated borders.
fn filter_replicate(v: &[f64], nx: usize, ny: usize, taps: &[f64]) -> Vec<f64> {
    let h = taps.len() / 2;
    let clamp = |i: isize, n: usize| i.clamp(0, n as isize - 1) as usize;
    let mut rows = vec![0.0; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            rows[j * nx + i] =
                taps.iter().enumerate().map(|(t, w)| w * v[j * nx + clamp(i as isize + t as isize - h as isize, nx)]).sum();
        }
    }
    let mut out = vec![0.0; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            out[j * nx + i] =
                taps.iter().enumerate().map(|(t, w)| w * rows[clamp(j as isize + t as isize - h as isize, ny) * nx + i]).sum();
        }
    }
    out
}

fn mscn(gray: &[f64], nx: usize, ny: usize) -> Vec<f64> {
    let taps = gaussian_taps(MSCN_WINDOW, MSCN_SIGMA);
    let mu = filter_replicate(gray, nx, ny, &taps);
    let sq: Vec<f64> = gray.iter().map(|v| v * v).collect();
    let e2 = filter_replicate(&sq, nx, ny, &taps);
    gray.iter()
        .zip(mu.iter().zip(&e2))
        .map(|(&g, (&m, &e))| (g - m) / ((e - m * m).abs().sqrt() + MSCN_C))
        .collect()
}

/// Sample standard deviation (divisor `n - 1`).
fn std_dev(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

fn has_flat_edge_segment(block: &[f64]) -> bool {
    let b = BLOCK;
    let edges: [Vec<f64>; 4] = [
        (0..b).map(|i| block[i]).collect(),
        (0..b).map(|i| block[(b - 1) * b + i]).collect(),
        (0..b).map(|j| block[j * b]).collect(),
        (0..b).map(|j| block[j * b + b - 1]).collect(),
    ];
    edges.iter().any(|e| e.windows(SEGMENT_LEN).any(|s| std_dev(s) < EDGE_THRESHOLD))
}

fn is_noisy(block: &[f64], variance: f64) -> bool {
    let b = BLOCK;
    let (c1, c2) = (b / 2 - 1, b / 2);
    let mut center = Vec::with_capacity(2 * b);
    let mut surround = Vec::with_capacity(b * (b - 2));
    for j in 0..b {
        for i in 0..b {
            if i == c1 || i == c2 {
                center.push(block[j * b + i]);
            } else {
                surround.push(block[j * b + i]);
            }
        }
    }
    let s = std_dev(&surround);
    let ratio = if s > 0.0 { std_dev(&center) / s } else { 0.0 };
    let sigma = variance.sqrt();
    let m = sigma.max(ratio);
    let beta = if m > 0.0 { (sigma - ratio).abs() / m } else { 0.0 };
    sigma > 2.0 * beta
}

pub fn piqe(img: &RgbImage) -> Result<PiqeResult> {
    let (nx, ny) = (img.width(), img.height());
    if nx < MIN_SIDE || ny < MIN_SIDE {
        return Err(Error::shape(format!("PIQE needs at least {MIN_SIDE} pixels per side")));
    }
    let coeffs = mscn(&gray_255(img), nx, ny);
    let (bx, by) = (nx / BLOCK, ny / BLOCK);
    let mut total = 0.0;
    let (mut active, mut artifacts, mut noisy) = (0, 0, 0);
    let mut block = vec![0.0; BLOCK * BLOCK];
    for bj in 0..by {
        for bi in 0..bx {
            for j in 0..BLOCK {
                for i in 0..BLOCK {
                    block[j * BLOCK + i] = coeffs[(bj * BLOCK + j) * nx + bi * BLOCK + i];
                }
            }
            let variance = std_dev(&block).powi(2);
            if variance <= ACTIVITY_THRESHOLD {
                continue;
            }
            active += 1;
            let mut d = 0.0;
            if has_flat_edge_segment(&block) {
                artifacts += 1;
                d += 1.0 - variance;
            }
            if is_noisy(&block, variance) {
                noisy += 1;
                d += variance;
            }
            total += d;
        }
    }
    let score = (100.0 * (total + 1.0) / (active as f64 + 1.0)).clamp(0.0, 100.0);
    Ok(PiqeResult {
        score,
        active_blocks: active,
        artifact_blocks: artifacts,
        noise_blocks: noisy,
        no_active_blocks: active == 0,
    })
}
