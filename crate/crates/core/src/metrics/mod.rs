//! Image and signal quality measures.

mod piqe;
mod ssim;

pub use piqe::{piqe, PiqeResult, ACTIVITY_THRESHOLD, BLOCK, EDGE_THRESHOLD, SEGMENT_LEN};
pub use ssim::{ssim, ssim_shared_range, ssim_with_range, SSIM_K1, SSIM_K2, SSIM_SIGMA, SSIM_WINDOW};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ForwardModel, Image, Sinogram};
use crate::render::RgbImage;
use crate::spectrum::power_spectrum;

pub const ENTROPY_BINS: usize = 256;

/// `‖p − M Σx_j‖₂`.
pub fn residual_norm(model: &ForwardModel, sino: &Sinogram, components: &[Image]) -> Result<f64> {
    let sum = Image::sum(components)?;
    let mut r = model.apply(&sum)?;
    sino.check_same_shape(&r)?;
    r.add_scaled(-1.0, sino)?;
    Ok(r.norm())
}

/// Data residual relative to a reference residual, normally that of MB.
pub fn normalized_residual(model: &ForwardModel, sino: &Sinogram, components: &[Image], reference_residual: f64) -> Result<f64> {
    if !(reference_residual > 0.0) {
        return Err(Error::param("reference residual must be positive"));
    }
    Ok(residual_norm(model, sino, components)? / reference_residual)
}

/// Shannon entropy in bits of a 256-bin histogram of min-max normalised values.
pub fn entropy_of(values: &[f64]) -> f64 {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if values.is_empty() || !(hi > lo) {
        return 0.0;
    }
    let mut counts = [0usize; ENTROPY_BINS];
    let scale = 1.0 / (hi - lo);
    for &v in values {
        let b = (((v - lo) * scale) * ENTROPY_BINS as f64) as usize;
        counts[b.min(ENTROPY_BINS - 1)] += 1;
    }
    let n = values.len() as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

pub fn entropy(img: &Image) -> f64 {
    entropy_of(img.values())
}

/// Entropy of the BT.601 luminance of an RGB image.
pub fn rgb_entropy(img: &RgbImage) -> f64 {
    entropy_of(&img.luminance())
}

/// Mean per-detector power spectrum of a sinogram, normalised to its peak.
pub fn mean_power_spectrum(sino: &Sinogram) -> (Vec<f64>, Vec<f64>) {
    let fs = sino.timing().sample_rate;
    let n = sino.n_samples();
    let mut mean = vec![0.0; n / 2 + 1];
    let mut freqs = Vec::new();
    for trace in sino.traces() {
        let (f, p) = power_spectrum(trace, fs, n);
        for (m, v) in mean.iter_mut().zip(&p) {
            *m += v;
        }
        freqs = f;
    }
    let peak = mean.iter().copied().fold(0.0, f64::max);
    if peak > 0.0 {
        mean.iter_mut().for_each(|v| *v /= peak);
    }
    (freqs, mean)
}

/// Spectrum of the signals a component explains: `mean_power_spectrum(M x)`.
pub fn band_power_spectrum(model: &ForwardModel, component: &Image) -> Result<(Vec<f64>, Vec<f64>)> {
    Ok(mean_power_spectrum(&model.apply(component)?))
}

/// Largest contiguous frequency interval containing `around` on which both
/// normalised spectra exceed `threshold`.
pub fn shared_interval(freqs: &[f64], a: &[f64], b: &[f64], threshold: f64, around: f64) -> Option<(f64, f64)> {
    let both = |k: usize| a[k] > threshold && b[k] > threshold;
    let k0 = freqs.iter().position(|&f| f >= around)?;
    // the bin at or just above `around`, or the one below it
    let k = if both(k0) {
        k0
    } else if k0 > 0 && both(k0 - 1) {
        k0 - 1
    } else {
        return None;
    };
    let mut lo = k;
    while lo > 0 && both(lo - 1) {
        lo -= 1;
    }
    let mut hi = k;
    while hi + 1 < freqs.len() && both(hi + 1) {
        hi += 1;
    }
    Some((freqs[lo], freqs[hi]))
}

/// One row of the comparison table. Metrics that were disabled or are
/// undefined for the data are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodMetrics {
    pub method: String,
    pub normalized_residual: Option<f64>,
    /// SSIM of the summed components against the MB reference.
    pub ssim: Option<f64>,
    /// Entropy of the raw composite and of its rendering.
    pub entropy: Option<f64>,
    pub rendered_entropy: Option<f64>,
    pub piqe: Option<f64>,
    pub piqe_active_blocks: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub rows: Vec<MethodMetrics>,
}

fn csv_cell(v: Option<f64>) -> String {
    v.map_or(String::new(), |v| format!("{v:.12e}"))
}

fn text_cell(v: Option<f64>, width: usize, prec: usize) -> String {
    match v {
        Some(v) => format!("{v:>width$.prec$}"),
        None => format!("{:>width$}", "-"),
    }
}

impl MetricsReport {
    pub fn get(&self, method: &str) -> Option<&MethodMetrics> {
        self.rows.iter().find(|r| r.method == method)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,normalized_residual,ssim,entropy,rendered_entropy,piqe,piqe_active_blocks\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.method,
                csv_cell(r.normalized_residual),
                csv_cell(r.ssim),
                csv_cell(r.entropy),
                csv_cell(r.rendered_entropy),
                csv_cell(r.piqe),
                r.piqe_active_blocks.map_or(String::new(), |n| n.to_string())
            ));
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{:<14} {:>10} {:>8} {:>9} {:>9} {:>8}\n",
            "method", "residual", "ssim", "entropy", "rendered", "piqe"
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{:<14} {} {} {} {} {}\n",
                r.method,
                text_cell(r.normalized_residual, 10, 4),
                text_cell(r.ssim, 8, 4),
                text_cell(r.entropy, 9, 4),
                text_cell(r.rendered_entropy, 9, 4),
                text_cell(r.piqe, 8, 2)
            ));
        }
        out
    }
}
