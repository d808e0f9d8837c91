//! Browser bindings: sphere signals, band responses and a small
//! reconstruction rendered to RGBA.

use fbmb::config::{Method, PipelineConfig};
use fbmb::filters::design_band_bank;
use fbmb::geometry::Timing;
use fbmb::metrics::residual_norm;
use fbmb::pipeline::{prepare, reconstruct_method, Scenario};
use fbmb::render::grayscale;
use fbmb::sources::sphere_signal;
use fbmb::spectrum::power_spectrum;
use wasm_bindgen::prelude::*;

const C: f64 = 1500.0;

fn js_err(e: fbmb::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// A trace and its power spectrum.
#[wasm_bindgen]
pub struct Signal {
    time_us: Vec<f64>,
    values: Vec<f64>,
    freq_mhz: Vec<f64>,
    power: Vec<f64>,
}

#[wasm_bindgen]
impl Signal {
    #[wasm_bindgen(getter)]
    pub fn time_us(&self) -> Vec<f64> {
        self.time_us.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn values(&self) -> Vec<f64> {
        self.values.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn freq_mhz(&self) -> Vec<f64> {
        self.freq_mhz.clone()
    }

    /// Power normalised to its peak.
    #[wasm_bindgen(getter)]
    pub fn power(&self) -> Vec<f64> {
        self.power.clone()
    }
}

/// Pressure of a uniform sphere seen from `distance_mm`, sampled at 100 MHz.
#[wasm_bindgen]
pub fn sphere_trace(radius_um: f64, distance_mm: f64) -> Result<Signal, JsError> {
    let (r, d, fs) = (radius_um * 1e-6, distance_mm * 1e-3, 100e6);
    let n = 1024;
    let timing = Timing::new(n, fs, d / C - n as f64 / (2.0 * fs), C).map_err(js_err)?;
    let values = sphere_signal(r, d, &timing).map_err(js_err)?;
    let (f, mut p) = power_spectrum(&values, fs, 8192);
    let peak = p.iter().copied().fold(0.0, f64::max);
    if peak > 0.0 {
        p.iter_mut().for_each(|v| *v /= peak);
    }
    // 20 MHz covers the content of every radius the page offers
    let keep = f.iter().take_while(|&&x| x <= 20e6).count();
    Ok(Signal {
        time_us: (0..n).map(|k| timing.time(k) * 1e6).collect(),
        values,
        freq_mhz: f[..keep].iter().map(|x| x / 1e6).collect(),
        power: p[..keep].to_vec(),
    })
}

/// Gains of the band filters for `edges_mhz` on `0..=max_mhz`, band after band,
/// `points` values each.
#[wasm_bindgen]
pub fn band_responses(edges_mhz: &[f64], order: u32, max_mhz: f64, points: usize) -> Result<Vec<f64>, JsError> {
    let edges: Vec<f64> = edges_mhz.iter().map(|e| e * 1e6).collect();
    let bank = design_band_bank(&edges, order, 2048, 40e6).map_err(js_err)?;
    let step = max_mhz * 1e6 / (points.max(2) - 1) as f64;
    Ok(bank.bands().iter().flat_map(|b| (0..points).map(move |k| b.magnitude_at(k as f64 * step))).collect())
}

/// A vessel phantom on a small ring setup, reconstructed on demand.
#[wasm_bindgen]
pub struct Scene {
    scenario: Scenario,
    last_residual: f64,
}

#[wasm_bindgen]
impl Scene {
    #[wasm_bindgen(constructor)]
    pub fn new(size: usize, detectors: usize, seed: u32) -> Result<Scene, JsError> {
        let pixel = 19.2e-3 / size as f64;
        let overrides = [
            format!("seed={seed}"),
            format!("geometry.nx={size}"),
            format!("geometry.ny={size}"),
            format!("geometry.pixel_size={pixel}"),
            format!("geometry.detectors={detectors}"),
            "geometry.n_samples=1024".to_string(),
            "source.noise_snr_db=30.0".to_string(),
        ];
        let config = PipelineConfig::from_toml_with_overrides("", &overrides, None).map_err(js_err)?;
        let scenario = prepare(&config).map_err(js_err)?;
        Ok(Scene { scenario, last_residual: f64::NAN })
    }

    #[wasm_bindgen(getter)]
    pub fn size(&self) -> usize {
        self.scenario.model.grid().nx()
    }

    pub fn phantom_rgba(&self) -> Result<Vec<u8>, JsError> {
        let img = self.scenario.phantom.as_ref().ok_or_else(|| JsError::new("scene has no phantom"))?;
        Ok(grayscale(img, 0.0, 0.0).map_err(js_err)?.to_rgba8())
    }

    /// Reconstructs with `method` (`mb`, `fbmb`, `butterworth`, `swt`) and
    /// returns the rendered image.
    pub fn reconstruct(&mut self, method: &str, max_iters: usize) -> Result<Vec<u8>, JsError> {
        let method: Method = method.parse().map_err(js_err)?;
        self.scenario.config.solver.max_iters = max_iters;
        let result = reconstruct_method(&self.scenario, method).map_err(js_err)?;
        let r = residual_norm(&self.scenario.model, &self.scenario.data, &result.set.components).map_err(js_err)?;
        self.last_residual = r / self.scenario.data.norm();
        Ok(result.rendered.to_rgba8())
    }

    /// Data residual of the last reconstruction relative to the data norm.
    #[wasm_bindgen(getter)]
    pub fn relative_residual(&self) -> f64 {
        self.last_residual
    }
}
