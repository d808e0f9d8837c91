//! DFT helpers shared by the filters and the spectral metrics.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

/// Frequency of DFT bin `k` for an `n`-point transform, folded to `[0, fs/2]`.
pub fn bin_frequency(k: usize, n: usize, sample_rate: f64) -> f64 {
    let k = if k > n / 2 { n - k } else { k };
    k as f64 * sample_rate / n as f64
}

/// One-sided power spectrum `|X(f)|²` of `trace`, zero-padded to `n_fft`
/// points (at least the trace length). Returns `(frequencies, power)` for bins
/// `0..=n_fft/2`.
pub fn power_spectrum(trace: &[f64], sample_rate: f64, n_fft: usize) -> (Vec<f64>, Vec<f64>) {
    let n = n_fft.max(trace.len()).max(1);
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(n);
    let mut buf: Vec<Complex64> = trace.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    buf.resize(n, Complex64::new(0.0, 0.0));
    fft.process(&mut buf);
    let half = n / 2;
    let freqs = (0..=half).map(|k| k as f64 * sample_rate / n as f64).collect();
    let power = buf[..=half].iter().map(|c| c.norm_sqr()).collect();
    (freqs, power)
}

/// Location of the spectral maximum, refined by a parabola through the peak
/// bin and its neighbours. DC is excluded unless it is the only bin.
pub fn peak_frequency(freqs: &[f64], power: &[f64]) -> f64 {
    if power.len() < 2 {
        return freqs.first().copied().unwrap_or(0.0);
    }
    let (k, _) = power
        .iter()
        .enumerate()
        .skip(1)
        .max_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    if k + 1 >= power.len() {
        return freqs[k];
    }
    let (a, b, c) = (power[k - 1], power[k], power[k + 1]);
    let denom = a - 2.0 * b + c;
    let offset = if denom.abs() > 0.0 { 0.5 * (a - c) / denom } else { 0.0 };
    let df = freqs[1] - freqs[0];
    freqs[k] + offset.clamp(-0.5, 0.5) * df
}

/// Real multiplication in the frequency domain, `out = IDFT(gain · DFT(x))`,
/// applied in place to each `n`-sample trace of `data`. `gain` must be
/// symmetric (`gain[k] == gain[n-k]`) for the output to stay real.
pub(crate) struct SpectralMultiplier {
    fwd: std::sync::Arc<dyn rustfft::Fft<f64>>,
    inv: std::sync::Arc<dyn rustfft::Fft<f64>>,
    n: usize,
}

impl SpectralMultiplier {
    pub(crate) fn new(n: usize) -> Self {
        let mut planner = FftPlanner::<f64>::new();
        SpectralMultiplier { fwd: planner.plan_fft_forward(n), inv: planner.plan_fft_inverse(n), n }
    }

    pub(crate) fn apply(&self, trace: &mut [f64], gain: &[f64], scratch: &mut Vec<Complex64>) {
        debug_assert_eq!(trace.len(), self.n);
        scratch.clear();
        scratch.extend(trace.iter().map(|&v| Complex64::new(v, 0.0)));
        self.fwd.process(scratch);
        let scale = 1.0 / self.n as f64;
        for (c, g) in scratch.iter_mut().zip(gain) {
            *c *= g * scale;
        }
        self.inv.process(scratch);
        for (t, c) in trace.iter_mut().zip(scratch.iter()) {
            *t = c.re;
        }
    }
}
