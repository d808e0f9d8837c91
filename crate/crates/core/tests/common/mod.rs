//! Dense reference constructions shared by the integration tests and the
//! acceptance suite.
#![allow(dead_code)]

use std::f64::consts::PI;

use fbmb::filters::FilterBank;
use fbmb::geometry::{make_grid, make_ring_array, Point2, Timing};
use fbmb::model::{build_model, ForwardModel, Image, Sinogram};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// A small reconstruction problem with a sparse non-negative truth and noise.
pub struct Tiny {
    pub model: ForwardModel,
    pub sino: Sinogram,
    pub truth: Image,
}

pub fn tiny_instance(seed: u64, n: usize, detectors: usize) -> Tiny {
    let grid = make_grid(n, n, 0.2e-3, Point2::ORIGIN).unwrap();
    let array = make_ring_array(detectors, 6e-3, 300.0, Point2::ORIGIN).unwrap();
    let timing = Timing::covering(&grid, &array, 20e6, 1500.0, Some(64), 2).unwrap();
    let model = build_model(grid, array, timing).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut truth = Image::zeros(grid);
    for _ in 0..n {
        let (i, j) = (rng.random_range(0..n), rng.random_range(0..n));
        truth.set(i, j, rng.random_range(0.2..1.0));
    }
    let mut sino = model.apply(&truth).unwrap();
    let scale = 0.05 * sino.max_abs();
    for v in sino.data_mut() {
        *v += scale * (rng.random::<f64>() - 0.5);
    }
    Tiny { model, sino, truth }
}

/// Model matrix built column by column from images with a single unit pixel.
pub fn dense_model(model: &ForwardModel) -> DMatrix<f64> {
    let grid = *model.grid();
    let mut a = DMatrix::zeros(model.n_rows(), model.n_cols());
    for c in 0..model.n_cols() {
        let mut img = Image::zeros(grid);
        img.values_mut()[c] = 1.0;
        let col = model.apply(&img).unwrap();
        for (r, &v) in col.data().iter().enumerate() {
            a[(r, c)] = v;
        }
    }
    a
}

/// Butterworth band gain written out from its defining formula.
pub fn butterworth_gain(f: f64, f_low: f64, f_high: f64, order: u32) -> f64 {
    let lp = 1.0 / (1.0 + (f / f_high).powi(2 * order as i32));
    let hp = if f_low > 0.0 { 1.0 / (1.0 + (f_low / f).powi(2 * order as i32)) } else { 1.0 };
    lp * hp
}

/// Real circulant matrix of `I − F` for one band, from the inverse DFT of its gain.
pub fn complement_circulant(f_low: f64, f_high: f64, order: u32, n: usize, fs: f64) -> DMatrix<f64> {
    let comp: Vec<f64> = (0..n)
        .map(|k| {
            let f = k.min(n - k) as f64 * fs / n as f64;
            1.0 - butterworth_gain(f, f_low, f_high, order)
        })
        .collect();
    let kernel: Vec<f64> = (0..n)
        .map(|d| comp.iter().enumerate().map(|(k, g)| g * (2.0 * PI * (k * d) as f64 / n as f64).cos()).sum::<f64>() / n as f64)
        .collect();
    DMatrix::from_fn(n, n, |a, b| kernel[(a + n - b) % n])
}

/// Block-diagonal per-detector application of a per-trace matrix.
fn per_detector(c: &DMatrix<f64>, detectors: usize) -> DMatrix<f64> {
    let n = c.nrows();
    let mut out = DMatrix::zeros(detectors * n, detectors * n);
    for d in 0..detectors {
        out.view_mut((d * n, d * n), (n, n)).copy_from(c);
    }
    out
}

/// The stacked system `‖A X − b‖²` of the joint objective for components
/// `X = [x_1; …; x_n]`: data rows, Tikhonov rows on the sum, and one prior
/// row block per band. Returns the row blocks separately.
pub struct Stacked {
    pub data: DMatrix<f64>,
    pub tikhonov: DMatrix<f64>,
    pub priors: Vec<DMatrix<f64>>,
    pub b: DVector<f64>,
}

pub fn stacked_system(model: &ForwardModel, sino: &Sinogram, bank: Option<&FilterBank>, lambda: f64, eta: f64, mu: &[f64]) -> Stacked {
    let m = dense_model(model);
    let (rows, npix) = m.shape();
    let n = mu.len();
    let mut data = DMatrix::zeros(rows, n * npix);
    let mut tikhonov = DMatrix::zeros(npix, n * npix);
    for j in 0..n {
        data.view_mut((0, j * npix), (rows, npix)).copy_from(&m);
        tikhonov.view_mut((0, j * npix), (npix, npix)).copy_from(&(DMatrix::identity(npix, npix) * lambda.sqrt()));
    }
    let mut priors = Vec::new();
    if let Some(bank) = bank {
        let t = model.timing();
        for (j, f) in bank.bands().iter().enumerate() {
            let c = complement_circulant(f.f_low(), f.f_high(), f.order(), t.n_samples, t.sample_rate);
            let block = per_detector(&c, model.array().len()) * &m * (eta * mu[j]).sqrt();
            let mut rowblk = DMatrix::zeros(rows, n * npix);
            rowblk.view_mut((0, j * npix), (rows, npix)).copy_from(&block);
            priors.push(rowblk);
        }
    }
    Stacked { data, tikhonov, priors, b: DVector::from_column_slice(sino.data()) }
}

impl Stacked {
    pub fn gram(&self) -> (DMatrix<f64>, DVector<f64>) {
        let mut g = self.data.transpose() * &self.data + self.tikhonov.transpose() * &self.tikhonov;
        for p in &self.priors {
            g += p.transpose() * p;
        }
        let h = self.data.transpose() * &self.b;
        (g, h)
    }

    /// `(data, tikhonov, priors)` at a stacked point.
    pub fn terms(&self, x: &DVector<f64>) -> (f64, f64, Vec<f64>) {
        let data = (&self.data * x - &self.b).norm_squared();
        let tik = (&self.tikhonov * x).norm_squared();
        let priors = self.priors.iter().map(|p| (p * x).norm_squared()).collect();
        (data, tik, priors)
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        let (d, t, p) = self.terms(x);
        d + t + p.iter().sum::<f64>()
    }
}

/// Lawson–Hanson active-set NNLS on the normal equations `G x = h`.
pub fn nnls_gram(g: &DMatrix<f64>, h: &DVector<f64>) -> DVector<f64> {
    let n = h.len();
    let tol = 1e-12 * h.amax().max(1e-300);
    let mut x = DVector::zeros(n);
    let mut passive = vec![false; n];
    for _ in 0..(10 * n) {
        let w = h - g * &x;
        let next = (0..n).filter(|&k| !passive[k]).max_by(|&a, &b| w[a].total_cmp(&w[b]));
        match next {
            Some(k) if w[k] > tol => passive[k] = true,
            _ => break,
        }
        loop {
            let idx: Vec<usize> = (0..n).filter(|&k| passive[k]).collect();
            let gp = DMatrix::from_fn(idx.len(), idx.len(), |a, b| g[(idx[a], idx[b])]);
            let hp = DVector::from_fn(idx.len(), |a, _| h[idx[a]]);
            let zp = gp.lu().solve(&hp).expect("passive Gram block is non-singular");
            if zp.iter().all(|&v| v > 0.0) {
                for (a, &k) in idx.iter().enumerate() {
                    x[k] = zp[a];
                }
                break;
            }
            let mut alpha = f64::INFINITY;
            let mut blocking = idx[0];
            for (a, &k) in idx.iter().enumerate() {
                if zp[a] <= 0.0 {
                    let t = x[k] / (x[k] - zp[a]);
                    if t < alpha {
                        alpha = t;
                        blocking = k;
                    }
                }
            }
            for (a, &k) in idx.iter().enumerate() {
                x[k] += alpha * (zp[a] - x[k]);
            }
            let floor = 1e-14 * x.amax();
            for &k in &idx {
                if k == blocking || x[k] <= floor {
                    x[k] = 0.0;
                    passive[k] = false;
                }
            }
        }
    }
    x
}

pub fn stack_images(components: &[Image]) -> DVector<f64> {
    let v: Vec<f64> = components.iter().flat_map(|c| c.values().iter().copied()).collect();
    DVector::from_vec(v)
}
