use crate::error::{Error, Result};
use crate::model::Image;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

/// Normalised 1D Gaussian taps of length `n`.
pub(crate) fn gaussian_taps(n: usize, sigma: f64) -> Vec<f64> {
    let c = (n as f64 - 1.0) / 2.0;
    let w: Vec<f64> = (0..n).map(|k| (-(k as f64 - c).powi(2) / (2.0 * sigma * sigma)).exp()).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

/// Separable weighted sum over every fully contained `k × k` window.
fn filter_valid(v: &[f64], nx: usize, ny: usize, taps: &[f64]) -> Vec<f64> {
    let k = taps.len();
    let (ox, oy) = (nx - k + 1, ny - k + 1);
    let mut rows = vec![0.0; ox * ny];
    for j in 0..ny {
        for i in 0..ox {
            rows[j * ox + i] = (0..k).map(|t| taps[t] * v[j * nx + i + t]).sum();
        }
    }
    let mut out = vec![0.0; ox * oy];
    for j in 0..oy {
        for i in 0..ox {
            out[j * ox + i] = (0..k).map(|t| taps[t] * rows[(j + t) * ox + i]).sum();
        }
    }
    out
}

/// Mean local SSIM with dynamic range `range`.
pub fn ssim_with_range(a: &Image, b: &Image, range: f64) -> Result<f64> {
    a.check_same_grid(b)?;
    let (nx, ny) = (a.grid().nx(), a.grid().ny());
    if nx < SSIM_WINDOW || ny < SSIM_WINDOW {
        return Err(Error::shape(format!("SSIM needs at least {SSIM_WINDOW}x{SSIM_WINDOW} pixels")));
    }
    if !(range > 0.0) {
        if a.values() == b.values() {
            return Ok(1.0);
        }
        return Err(Error::Domain("SSIM dynamic range is zero".into()));
    }
    let taps = gaussian_taps(SSIM_WINDOW, SSIM_SIGMA);
    let (av, bv) = (a.values(), b.values());
    let aa: Vec<f64> = av.iter().map(|x| x * x).collect();
    let bb: Vec<f64> = bv.iter().map(|x| x * x).collect();
    let ab: Vec<f64> = av.iter().zip(bv).map(|(x, y)| x * y).collect();
    let mu_a = filter_valid(av, nx, ny, &taps);
    let mu_b = filter_valid(bv, nx, ny, &taps);
    let e_aa = filter_valid(&aa, nx, ny, &taps);
    let e_bb = filter_valid(&bb, nx, ny, &taps);
    let e_ab = filter_valid(&ab, nx, ny, &taps);
    let c1 = (SSIM_K1 * range).powi(2);
    let c2 = (SSIM_K2 * range).powi(2);
    let mut sum = 0.0;
    for k in 0..mu_a.len() {
        let (ma, mb) = (mu_a[k], mu_b[k]);
        let va = e_aa[k] - ma * ma;
        let vb = e_bb[k] - mb * mb;
        let cov = e_ab[k] - ma * mb;
        sum += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
    Ok(sum / mu_a.len() as f64)
}

/// SSIM of `img` against `reference`, with the dynamic range of the reference.
pub fn ssim(reference: &Image, img: &Image) -> Result<f64> {
    ssim_with_range(reference, img, reference.max() - reference.min())
}

/// SSIM with the joint range of both images; symmetric in its arguments.
pub fn ssim_shared_range(a: &Image, b: &Image) -> Result<f64> {
    let range = a.max().max(b.max()) - a.min().min(b.min());
    ssim_with_range(a, b, range)
}
