//! Zero-phase band filters and the stationary wavelet baseline.
//!
//! A [`BandFilter`] multiplies the DFT of each detector trace by a real,
//! even gain. The gain is the squared Butterworth magnitude
//! `|H(f)|² = HP(f; f_low) · LP(f; f_high)` with
//! `LP(f; f_c) = 1 / (1 + (f/f_c)^{2n})` and `HP(f; f_c) = 1 - LP(f; f_c)`,
//! i.e. the response a forward-backward Butterworth pass would have. Because
//! the gain is real and symmetric the operator is self-adjoint, which the
//! soft-prior terms of the solver rely on. Filtering is circular over the
//! trace length.

mod swt;

pub use swt::{swt_band_split, swt_decompose, swt_reconstruct, SwtBands, SwtDecomposition, DB2_DEC_HI, DB2_DEC_LO};

use std::sync::Arc;

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::Sinogram;
use crate::par;
use crate::spectrum::{bin_frequency, SpectralMultiplier};

/// Default Butterworth order for every band filter.
pub const DEFAULT_ORDER: u32 = 3;
/// Pass band of the pre-filter applied before every reconstruction, Hz.
pub const PREFILTER_BAND: (f64, f64) = (0.1e6, 13.3e6);
/// Two-band split: 0–1.23 MHz and 1.23–15 MHz.
pub const TWO_BAND_EDGES: [f64; 3] = [0.0, 1.23e6, 15e6];
/// Three-band split: 0–0.5 MHz, 0.5–1.23 MHz and 1.23–13.3 MHz.
pub const THREE_BAND_EDGES: [f64; 4] = [0.0, 0.5e6, 1.23e6, 13.3e6];

/// Squared Butterworth low-pass gain.
pub fn butterworth_lowpass(f: f64, cutoff: f64, order: u32) -> f64 {
    1.0 / (1.0 + (f.abs() / cutoff).powi(2 * order as i32))
}

/// Squared Butterworth high-pass gain; a zero cutoff passes everything.
pub fn butterworth_highpass(f: f64, cutoff: f64, order: u32) -> f64 {
    if cutoff <= 0.0 {
        return 1.0;
    }
    let r = (f.abs() / cutoff).powi(2 * order as i32);
    r / (1.0 + r)
}

#[derive(Clone)]
pub struct BandFilter {
    f_low: f64,
    f_high: f64,
    order: u32,
    sample_rate: f64,
    gain: Vec<f64>,
    plan: Arc<SpectralMultiplier>,
}

impl std::fmt::Debug for BandFilter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BandFilter")
            .field("f_low", &self.f_low)
            .field("f_high", &self.f_high)
            .field("order", &self.order)
            .field("sample_rate", &self.sample_rate)
            .field("n_samples", &self.gain.len())
            .finish()
    }
}

impl BandFilter {
    /// Band-pass `[f_low, f_high]`; `f_low == 0` gives a low-pass.
    pub fn butterworth(f_low: f64, f_high: f64, order: u32, n_samples: usize, sample_rate: f64) -> Result<Self> {
        if order < 1 {
            return Err(Error::param("filter order must be at least 1"));
        }
        if !(f_low >= 0.0 && f_high > f_low) {
            return Err(Error::param(format!("band edges must satisfy 0 <= low < high, got {f_low}..{f_high}")));
        }
        if n_samples == 0 || !(sample_rate > 0.0) {
            return Err(Error::param("filter needs a positive length and sample rate"));
        }
        let gain = (0..n_samples)
            .map(|k| {
                let f = bin_frequency(k, n_samples, sample_rate);
                butterworth_highpass(f, f_low, order) * butterworth_lowpass(f, f_high, order)
            })
            .collect();
        Ok(Self::from_gain(f_low, f_high, order, sample_rate, gain))
    }

    /// Identity filter.
    pub fn all_pass(n_samples: usize, sample_rate: f64) -> Self {
        Self::from_gain(0.0, sample_rate / 2.0, 0, sample_rate, vec![1.0; n_samples])
    }

    fn from_gain(f_low: f64, f_high: f64, order: u32, sample_rate: f64, gain: Vec<f64>) -> Self {
        let plan = Arc::new(SpectralMultiplier::new(gain.len()));
        BandFilter { f_low, f_high, order, sample_rate, gain, plan }
    }

    pub fn f_low(&self) -> f64 {
        self.f_low
    }

    pub fn f_high(&self) -> f64 {
        self.f_high
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn n_samples(&self) -> usize {
        self.gain.len()
    }

    /// Gain on the DFT grid (full length, symmetric).
    pub fn gain(&self) -> &[f64] {
        &self.gain
    }

    /// Closed-form gain at an arbitrary frequency.
    pub fn magnitude_at(&self, f: f64) -> f64 {
        if self.order == 0 {
            return 1.0;
        }
        butterworth_highpass(f, self.f_low, self.order) * butterworth_lowpass(f, self.f_high, self.order)
    }

    fn check(&self, n_samples: usize, sample_rate: f64) -> Result<()> {
        if n_samples != self.gain.len() {
            return Err(Error::shape(format!(
                "filter designed for {} samples, signal has {n_samples}",
                self.gain.len()
            )));
        }
        if (sample_rate - self.sample_rate).abs() > 1e-9 * self.sample_rate {
            return Err(Error::shape("filter designed for a different sample rate"));
        }
        Ok(())
    }

    /// Filters a single trace in place.
    pub fn apply_trace(&self, trace: &mut [f64]) -> Result<()> {
        if trace.len() != self.gain.len() {
            return Err(Error::shape("trace length does not match the filter"));
        }
        let mut scratch = Vec::with_capacity(trace.len());
        self.plan.apply(trace, &self.gain, &mut scratch);
        Ok(())
    }

    /// Filters every `n_samples` trace of a detector-major buffer in place.
    pub(crate) fn apply_in_place(&self, data: &mut [f64]) {
        let n = self.gain.len();
        par::for_each_chunk_mut(data, n, |_, trace| {
            let mut scratch: Vec<Complex64> = Vec::with_capacity(n);
            self.plan.apply(trace, &self.gain, &mut scratch);
        });
    }
}

/// Ordered set of band filters sharing one DFT grid.
#[derive(Debug, Clone)]
pub struct FilterBank {
    bands: Vec<BandFilter>,
    edges: Vec<f64>,
    /// Nominal relative bandwidth quoted for the bank; informational only.
    pub relative_bandwidth: Option<f64>,
}

impl FilterBank {
    pub fn bands(&self) -> &[BandFilter] {
        &self.bands
    }

    pub fn len(&self) -> usize {
        self.bands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bands.is_empty()
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    /// Single-band bank without any filtering, for the degenerate `n = 1` case.
    pub fn all_pass(n_samples: usize, sample_rate: f64) -> Self {
        FilterBank {
            bands: vec![BandFilter::all_pass(n_samples, sample_rate)],
            edges: vec![0.0, sample_rate / 2.0],
            relative_bandwidth: None,
        }
    }

    pub fn from_bands(bands: Vec<BandFilter>) -> Result<Self> {
        if bands.is_empty() {
            return Err(Error::param("filter bank needs at least one band"));
        }
        let n = bands[0].n_samples();
        if bands.iter().any(|b| b.n_samples() != n) {
            return Err(Error::param("bands of a bank must share the DFT length"));
        }
        let mut edges = vec![bands[0].f_low];
        edges.extend(bands.iter().map(|b| b.f_high));
        Ok(FilterBank { bands, edges, relative_bandwidth: None })
    }

    /// Arithmetic-centre relative bandwidth `(f_h - f_l) / ((f_h + f_l) / 2)` per band.
    pub fn arithmetic_relative_bandwidths(&self) -> Vec<f64> {
        self.bands
            .iter()
            .map(|b| (b.f_high - b.f_low) / (0.5 * (b.f_high + b.f_low)))
            .collect()
    }

    /// CSV with one row per one-sided DFT bin: `frequency_hz,band_1,...`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("frequency_hz");
        for j in 0..self.bands.len() {
            out.push_str(&format!(",band_{}", j + 1));
        }
        out.push('\n');
        let n = self.bands[0].n_samples();
        let fs = self.bands[0].sample_rate;
        for k in 0..=n / 2 {
            out.push_str(&format!("{}", k as f64 * fs / n as f64));
            for b in &self.bands {
                out.push_str(&format!(",{:.9e}", b.gain[k]));
            }
            out.push('\n');
        }
        out
    }
}

/// Butterworth bank with adjacent bands sharing edges. The first edge may be
/// zero (low-pass first band); an edge above Nyquist is clipped with a warning.
pub fn design_band_bank(edges: &[f64], order: u32, n_samples: usize, sample_rate: f64) -> Result<FilterBank> {
    if edges.len() < 2 {
        return Err(Error::param("a filter bank needs at least two edges"));
    }
    if order < 1 {
        return Err(Error::param("filter order must be at least 1"));
    }
    if edges[0] < 0.0 || edges.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::param(format!("band edges must be non-negative and strictly increasing: {edges:?}")));
    }
    let nyquist = sample_rate / 2.0;
    let mut edges = edges.to_vec();
    if let Some(last) = edges.last_mut() {
        if *last > nyquist {
            log::warn!("upper band edge {:.3e} Hz exceeds Nyquist, clipped to {:.3e} Hz", *last, nyquist);
            *last = nyquist;
        }
    }
    if edges.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::param("band edges collapse after clipping to Nyquist"));
    }
    let bands = edges
        .windows(2)
        .map(|w| BandFilter::butterworth(w[0], w[1], order, n_samples, sample_rate))
        .collect::<Result<Vec<_>>>()?;
    Ok(FilterBank { bands, edges, relative_bandwidth: None })
}

/// Per-detector zero-phase filtering of a sinogram.
pub fn apply_band(filter: &BandFilter, sino: &Sinogram) -> Result<Sinogram> {
    filter.check(sino.n_samples(), sino.timing().sample_rate)?;
    let mut out = sino.clone();
    filter.apply_in_place(out.data_mut());
    Ok(out)
}

/// The 0.1–13.3 MHz order-3 band-pass applied to all data before reconstruction.
pub fn prefilter(n_samples: usize, sample_rate: f64) -> Result<BandFilter> {
    let high = PREFILTER_BAND.1.min(sample_rate / 2.0);
    BandFilter::butterworth(PREFILTER_BAND.0, high, DEFAULT_ORDER, n_samples, sample_rate)
}

pub fn preprocess_signal(sino: &Sinogram) -> Result<Sinogram> {
    let f = prefilter(sino.n_samples(), sino.timing().sample_rate)?;
    apply_band(&f, sino)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Timing;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const FS: f64 = 40e6;
    const N: usize = 2048;

    fn sino_of(traces: &[Vec<f64>]) -> Sinogram {
        let n = traces[0].len();
        let data = traces.concat();
        Sinogram::from_data(traces.len(), Timing::new(n, FS, 0.0, 1500.0).unwrap(), data).unwrap()
    }

    fn tone(f: f64) -> Vec<f64> {
        (0..N).map(|k| (2.0 * std::f64::consts::PI * f * k as f64 / FS).cos()).collect()
    }

    fn amplitude(x: &[f64]) -> f64 {
        x.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    #[test]
    fn reference_banks_have_expected_edges() {
        let b2 = design_band_bank(&TWO_BAND_EDGES, DEFAULT_ORDER, N, FS).unwrap();
        assert_eq!(b2.len(), 2);
        assert_eq!(b2.bands()[0].f_high(), 1.23e6);
        assert_eq!(b2.bands()[1].f_low(), 1.23e6);
        assert_eq!(b2.bands()[1].f_high(), 15e6);
        let b3 = design_band_bank(&THREE_BAND_EDGES, DEFAULT_ORDER, N, FS).unwrap();
        assert_eq!(b3.edges(), &THREE_BAND_EDGES);
        assert_eq!(b3.bands()[0].gain()[0], 1.0);
        assert_eq!(b2.bands()[0].magnitude_at(0.0), 1.0);
    }

    #[test]
    fn adjacent_bands_cross_at_shared_edge() {
        let b = design_band_bank(&TWO_BAND_EDGES, DEFAULT_ORDER, N, FS).unwrap();
        let lo = b.bands()[0].magnitude_at(1.23e6);
        let hi = b.bands()[1].magnitude_at(1.23e6);
        assert!((lo - 0.5).abs() < 1e-12);
        assert!((hi - 0.5).abs() < 1e-6);
    }

    #[test]
    fn bank_is_a_near_partition() {
        for edges in [&TWO_BAND_EDGES[..], &THREE_BAND_EDGES[..]] {
            let b = design_band_bank(edges, DEFAULT_ORDER, N, FS).unwrap();
            for k in 0..=N / 2 {
                let f = bin_frequency(k, N, FS);
                if f < edges[0] || f > *edges.last().unwrap() {
                    continue;
                }
                let s: f64 = b.bands().iter().map(|band| band.gain()[k]).sum();
                assert!((0.5..=1.5).contains(&s), "f = {f}: {s}");
            }
        }
    }

    #[test]
    fn gains_are_bounded() {
        let b = design_band_bank(&THREE_BAND_EDGES, 5, N, FS).unwrap();
        for band in b.bands() {
            assert!(band.gain().iter().all(|&g| (0.0..=1.0).contains(&g)));
            // even in frequency
            for k in 1..N {
                assert_eq!(band.gain()[k], band.gain()[N - k]);
            }
        }
    }

    #[test]
    fn invalid_designs_are_rejected() {
        assert!(design_band_bank(&[0.0, 2e6, 1e6], 3, N, FS).is_err());
        assert!(design_band_bank(&[0.0, 1e6], 0, N, FS).is_err());
        assert!(design_band_bank(&[1e6], 3, N, FS).is_err());
        // clipping to Nyquist
        let b = design_band_bank(&[0.0, 1e6, 30e6], 3, N, FS).unwrap();
        assert_eq!(*b.edges().last().unwrap(), FS / 2.0);
    }

    #[test]
    fn all_pass_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t: Vec<f64> = (0..N).map(|_| rng.random_range(-1.0..1.0)).collect();
        let s = sino_of(&[t]);
        let out = apply_band(&BandFilter::all_pass(N, FS), &s).unwrap();
        for (a, b) in out.data().iter().zip(s.data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn five_megahertz_tone_through_two_band_bank() {
        let b = design_band_bank(&TWO_BAND_EDGES, DEFAULT_ORDER, N, FS).unwrap();
        let s = sino_of(&[tone(5e6)]);
        let hi = apply_band(&b.bands()[1], &s).unwrap();
        let lo = apply_band(&b.bands()[0], &s).unwrap();
        let expect_hi = butterworth_highpass(5e6, 1.23e6, 3) * butterworth_lowpass(5e6, 15e6, 3);
        let expect_lo = butterworth_lowpass(5e6, 1.23e6, 3);
        assert!((amplitude(hi.data()) - expect_hi).abs() < 1e-9);
        assert!(expect_hi > 0.998);
        assert!((amplitude(lo.data()) - expect_lo).abs() < 1e-9);
        assert!(expect_lo < 3e-4);
    }

    #[test]
    fn self_adjoint_to_machine_precision() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let b = design_band_bank(&THREE_BAND_EDGES, DEFAULT_ORDER, 1000, FS).unwrap();
        for band in b.bands() {
            for _ in 0..5 {
                let x: Vec<f64> = (0..1000).map(|_| rng.random_range(-1.0..1.0)).collect();
                let y: Vec<f64> = (0..1000).map(|_| rng.random_range(-1.0..1.0)).collect();
                let (sx, sy) = (sino_of(&[x]), sino_of(&[y]));
                let lhs = apply_band(band, &sx).unwrap().dot(&sy);
                let rhs = sx.dot(&apply_band(band, &sy).unwrap());
                assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(rhs.abs()).max(1e-300));
            }
        }
    }

    #[test]
    fn prefilter_removes_dc_and_rejects_20mhz() {
        let s = sino_of(&[vec![3.0; N]]);
        let out = preprocess_signal(&s).unwrap();
        assert!(amplitude(out.data()) < 0.01 * 3.0);

        let f = prefilter(N, FS).unwrap();
        let t5 = apply_band(&f, &sino_of(&[tone(5e6)])).unwrap();
        assert!((amplitude(t5.data()) - f.magnitude_at(5e6)).abs() < 1e-9);
        assert!(f.magnitude_at(5e6) > 0.99);
        let t20 = apply_band(&f, &sino_of(&[tone(20e6)])).unwrap();
        let db = 20.0 * amplitude(t20.data()).log10();
        assert!(db <= -20.0, "{db}");
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let f = prefilter(N, FS).unwrap();
        let s = sino_of(&[vec![0.0; 100]]);
        assert!(matches!(apply_band(&f, &s), Err(Error::Shape(_))));
    }

    #[test]
    fn csv_has_one_row_per_bin() {
        let b = design_band_bank(&TWO_BAND_EDGES, 3, 64, FS).unwrap();
        let csv = b.to_csv();
        assert_eq!(csv.lines().count(), 1 + 33);
        assert!(csv.starts_with("frequency_hz,band_1,band_2\n0,1.0"));
    }
}
