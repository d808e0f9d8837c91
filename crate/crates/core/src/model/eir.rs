use super::Sinogram;
use crate::error::{Error, Result};

/// Per-detector linear convolution with `eir`, truncated to the sinogram length.
/// `eir[0]` is the response at zero lag.
pub fn convolve_eir(sino: &Sinogram, eir: &[f64]) -> Result<Sinogram> {
    if eir.is_empty() {
        return Err(Error::param("impulse response is empty"));
    }
    let n = sino.n_samples();
    if eir.len() > n {
        return Err(Error::param(format!(
            "impulse response has {} taps, longer than the {n}-sample traces",
            eir.len()
        )));
    }
    let mut out = Sinogram::zeros(sino.n_detectors(), *sino.timing());
    for d in 0..sino.n_detectors() {
        let src = sino.trace(d);
        let dst = out.trace_mut(d);
        for (k, &s) in src.iter().enumerate() {
            if s == 0.0 {
                continue;
            }
            for (l, &h) in eir.iter().enumerate().take(n - k) {
                dst[k + l] += s * h;
            }
        }
    }
    Ok(out)
}

/// Causal Gaussian-modulated tone burst used as a stand-in transducer
/// response: centre frequency `center_hz`, full −6 dB amplitude bandwidth
/// `fractional_bw * center_hz`. The envelope is truncated at ±4σ and delayed
/// so the kernel starts at zero lag; its peak is normalised to 1.
pub fn synthetic_eir(center_hz: f64, fractional_bw: f64, sample_rate: f64) -> Result<Vec<f64>> {
    if !(center_hz > 0.0 && fractional_bw > 0.0 && sample_rate > 2.0 * center_hz) {
        return Err(Error::param("impulse response needs 0 < f_c < fs/2 and a positive bandwidth"));
    }
    // half amplitude at f_c ± bw/2  =>  σ_f = (bw/2) / sqrt(2 ln 2)
    let sigma_f = 0.5 * fractional_bw * center_hz / (2.0 * std::f64::consts::LN_2).sqrt();
    let sigma_t = 1.0 / (2.0 * std::f64::consts::PI * sigma_f);
    let half = (4.0 * sigma_t * sample_rate).ceil() as usize;
    let taps: Vec<f64> = (0..=2 * half)
        .map(|k| {
            let t = (k as f64 - half as f64) / sample_rate;
            (-0.5 * (t / sigma_t).powi(2)).exp() * (2.0 * std::f64::consts::PI * center_hz * t).cos()
        })
        .collect();
    let peak = taps.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    Ok(taps.into_iter().map(|v| v / peak).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Timing;

    fn sino(data: Vec<f64>, nd: usize) -> Sinogram {
        let n = data.len() / nd;
        Sinogram::from_data(nd, Timing::new(n, 40e6, 0.0, 1500.0).unwrap(), data).unwrap()
    }

    #[test]
    fn unit_kernel_is_identity() {
        let s = sino((0..64).map(|k| (k as f64 * 0.3).sin()).collect(), 2);
        assert_eq!(convolve_eir(&s, &[1.0]).unwrap(), s);
    }

    #[test]
    fn two_tap_average_matches_direct_sum() {
        let data: Vec<f64> = (0..40).map(|k| ((k * 7) % 11) as f64 - 5.0).collect();
        let s = sino(data.clone(), 2);
        let out = convolve_eir(&s, &[0.5, 0.5]).unwrap();
        for d in 0..2 {
            let x = &data[d * 20..(d + 1) * 20];
            for k in 0..20 {
                let want = 0.5 * x[k] + if k > 0 { 0.5 * x[k - 1] } else { 0.0 };
                assert!((out.trace(d)[k] - want).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn errors_on_empty_or_long_kernel() {
        let s = sino(vec![0.0; 8], 1);
        assert!(convolve_eir(&s, &[]).is_err());
        assert!(convolve_eir(&s, &[1.0; 9]).is_err());
    }

    #[test]
    fn band_limited_response_rejects_20mhz() {
        let fs = 40e6;
        let eir = synthetic_eir(5e6, 1.5, fs).unwrap();
        let n = 4096;
        let tone = |f: f64| (0..n).map(|k| (2.0 * std::f64::consts::PI * f * k as f64 / fs).cos()).collect::<Vec<_>>();
        let steady = |f: f64| {
            let out = convolve_eir(&sino(tone(f), 1), &eir).unwrap();
            out.trace(0)[eir.len()..n - 1].iter().fold(0.0_f64, |m, v| m.max(v.abs()))
        };
        let ratio_db = 20.0 * (steady(5e6) / steady(20e6)).log10();
        assert!(ratio_db >= 20.0, "{ratio_db} dB");
    }
}
