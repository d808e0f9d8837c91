//! Pipeline configuration, read from TOML. Unknown keys are rejected.
//!
//! ```toml
//! seed = 1
//!
//! [geometry]
//! nx = 128
//! ny = 128
//! pixel_size = 150e-6
//! detectors = 256
//! array_radius = 0.040
//! coverage_deg = 270.0
//!
//! [source]
//! kind = "vessel"          # vessel | multiscale | empty | file
//! simulation = "model"     # model | analytic
//!
//! [filter]
//! edges = [0.0, 1.23e6, 15e6]
//!
//! [solver]
//! methods = ["mb", "fbmb", "butterworth", "swt"]
//! max_iters = 100
//!
//! [output]
//! dir = "out"
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::{DEFAULT_ORDER, TWO_BAND_EDGES};
use crate::geometry::{make_grid, make_ring_array, DetectorArray, ImagingGrid, Point2, Timing};
use crate::geometry::{DEFAULT_N_SAMPLES, DEFAULT_SAMPLE_RATE, DEFAULT_SPEED_OF_SOUND};
use crate::io::DType;
use crate::model::{ModelOptions, DEFAULT_ARC_DENSITY};
use crate::render::CompositeSpec;
use crate::solver::{ReconConfig, DEFAULT_ETA, DEFAULT_MAX_ITERS, DEFAULT_REL_TOL};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometryConfig {
    pub nx: usize,
    pub ny: usize,
    pub pixel_size: f64,
    pub origin: [f64; 2],
    pub detectors: usize,
    pub array_radius: f64,
    pub coverage_deg: f64,
    pub sample_rate: f64,
    pub speed_of_sound: f64,
    pub n_samples: usize,
    /// First sample time; `None` places the window so that it covers the grid.
    pub t0: Option<f64>,
    /// Samples kept on either side of the travel-time range when `t0` is derived.
    pub margin: usize,
    pub arc_density: f64,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        GeometryConfig {
            nx: 128,
            ny: 128,
            pixel_size: 150e-6,
            origin: [0.0, 0.0],
            detectors: 256,
            array_radius: 0.040,
            coverage_deg: 270.0,
            sample_rate: DEFAULT_SAMPLE_RATE,
            speed_of_sound: DEFAULT_SPEED_OF_SOUND,
            n_samples: DEFAULT_N_SAMPLES,
            t0: None,
            margin: 4,
            arc_density: DEFAULT_ARC_DENSITY,
        }
    }
}

impl GeometryConfig {
    pub fn grid(&self) -> Result<ImagingGrid> {
        make_grid(self.nx, self.ny, self.pixel_size, Point2::new(self.origin[0], self.origin[1]))
    }

    pub fn array(&self) -> Result<DetectorArray> {
        make_ring_array(self.detectors, self.array_radius, self.coverage_deg, Point2::new(self.origin[0], self.origin[1]))
    }

    pub fn timing(&self) -> Result<Timing> {
        match self.t0 {
            Some(t0) => Timing::new(self.n_samples, self.sample_rate, t0, self.speed_of_sound),
            None => Timing::covering(
                &self.grid()?,
                &self.array()?,
                self.sample_rate,
                self.speed_of_sound,
                Some(self.n_samples),
                self.margin,
            ),
        }
    }

    pub fn model_options(&self) -> ModelOptions {
        ModelOptions { arc_density: self.arc_density }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceKind {
    Vessel,
    Multiscale,
    Empty,
    File,
}

/// How a phantom is turned into a sinogram.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Simulation {
    /// The forward model applied to the rasterised phantom.
    Model,
    /// Closed-form sphere pulses of the phantom's sphere decomposition.
    Analytic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EirConfig {
    pub center_hz: f64,
    pub fractional_bandwidth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SourceConfig {
    pub kind: SourceKind,
    pub simulation: Simulation,
    /// Sinogram file for `kind = "file"`.
    pub path: Option<PathBuf>,
    /// White Gaussian noise at this SNR in dB, drawn from the top-level seed.
    pub noise_snr_db: Option<f64>,
    /// Transducer response convolved into simulated data.
    pub eir: Option<EirConfig>,
    /// Apply the 0.1–13.3 MHz band-pass to the data before reconstruction.
    pub prefilter: bool,
}

impl Default for SourceConfig {
    fn default() -> Self {
        SourceConfig {
            kind: SourceKind::Vessel,
            simulation: Simulation::Model,
            path: None,
            noise_snr_db: None,
            eir: None,
            prefilter: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilterConfig {
    pub edges: Vec<f64>,
    pub order: u32,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig { edges: TWO_BAND_EDGES.to_vec(), order: DEFAULT_ORDER }
    }
}

impl FilterConfig {
    pub fn n_bands(&self) -> usize {
        self.edges.len().saturating_sub(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodKind {
    Mb,
    Fbmb,
    Butterworth,
    Swt,
}

/// A reconstruction method, written `mb`, `fbmb`, `butterworth` or `swt`,
/// optionally followed by the band count (`fbmb2`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Method {
    pub kind: MethodKind,
    pub bands: Option<usize>,
}

impl Method {
    pub const fn new(kind: MethodKind) -> Self {
        Method { kind, bands: None }
    }

    /// Name used for artifacts, with the band count resolved.
    pub fn label(&self, n_bands: usize) -> String {
        match self.kind {
            MethodKind::Mb => "mb".into(),
            k => format!("{}{}", kind_name(k), self.bands.unwrap_or(n_bands)),
        }
    }
}

fn kind_name(k: MethodKind) -> &'static str {
    match k {
        MethodKind::Mb => "mb",
        MethodKind::Fbmb => "fbmb",
        MethodKind::Butterworth => "butterworth",
        MethodKind::Swt => "swt",
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let split = s.find(|c: char| c.is_ascii_digit()).unwrap_or(s.len());
        let (name, digits) = s.split_at(split);
        let kind = match name {
            "mb" => MethodKind::Mb,
            "fbmb" => MethodKind::Fbmb,
            "butterworth" => MethodKind::Butterworth,
            "swt" => MethodKind::Swt,
            _ => return Err(Error::Config(format!("unknown method `{s}`"))),
        };
        let bands = if digits.is_empty() {
            None
        } else {
            let n: usize = digits.parse().map_err(|_| Error::Config(format!("bad band count in `{s}`")))?;
            Some(n)
        };
        if kind == MethodKind::Mb && bands.is_some_and(|n| n != 1) {
            return Err(Error::Config(format!("`{s}`: mb has a single component")));
        }
        Ok(Method { kind, bands })
    }
}

impl TryFrom<String> for Method {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Method> for String {
    fn from(m: Method) -> String {
        m.to_string()
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.bands {
            Some(n) if self.kind != MethodKind::Mb => write!(f, "{}{n}", kind_name(self.kind)),
            _ => f.write_str(kind_name(self.kind)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub methods: Vec<Method>,
    pub lambda: Option<f64>,
    pub eta: f64,
    pub mu: Option<Vec<f64>>,
    pub max_iters: usize,
    pub rel_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            methods: vec![
                Method::new(MethodKind::Mb),
                Method::new(MethodKind::Fbmb),
                Method::new(MethodKind::Butterworth),
                Method::new(MethodKind::Swt),
            ],
            lambda: None,
            eta: DEFAULT_ETA,
            mu: None,
            max_iters: DEFAULT_MAX_ITERS,
            rel_tol: DEFAULT_REL_TOL,
        }
    }
}

impl SolverConfig {
    pub fn recon(&self) -> ReconConfig {
        ReconConfig {
            lambda: self.lambda,
            eta: self.eta,
            mu: self.mu.clone(),
            max_iters: self.max_iters,
            rel_tol: self.rel_tol,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricsConfig {
    pub residual: bool,
    pub ssim: bool,
    pub entropy: bool,
    pub piqe: bool,
    pub spectra: bool,
    /// Threshold, relative to each band's peak, for the shared spectral interval.
    pub overlap_threshold: f64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig { residual: true, ssim: true, entropy: true, piqe: true, spectra: true, overlap_threshold: 0.01 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub dtype: DType,
    pub png: bool,
    /// Palette and clipping for composites; `None` picks the default for the band count.
    pub composite: Option<CompositeSpec>,
    /// Cached forward model, loaded when present and written otherwise.
    pub model_cache: Option<PathBuf>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: PathBuf::from("out"), dtype: DType::F32, png: true, composite: None, model_cache: None }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub seed: u64,
    pub geometry: GeometryConfig,
    pub source: SourceConfig,
    pub filter: FilterConfig,
    pub solver: SolverConfig,
    pub metrics: MetricsConfig,
    pub output: OutputConfig,
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Parses `text`, applies `key=value` overrides with dotted keys, and
    /// validates the result. Relative paths are resolved against `base`.
    pub fn from_toml_with_overrides(text: &str, overrides: &[String], base: Option<&Path>) -> Result<Self> {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let mut cfg: PipelineConfig = table.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        if let Some(base) = base {
            cfg.resolve_paths(base);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_with_overrides(&text, overrides, path.parent())
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = self.source.path.as_mut() {
            fix(p);
        }
        if let Some(p) = self.output.model_cache.as_mut() {
            fix(p);
        }
        fix(&mut self.output.dir);
    }

    /// Desk-scale vessel comparison: all four methods on the 128×128 geometry.
    pub fn vessel_comparison(n_bands: usize, max_iters: usize) -> Result<Self> {
        let edges = match n_bands {
            2 => TWO_BAND_EDGES.to_vec(),
            3 => crate::filters::THREE_BAND_EDGES.to_vec(),
            _ => return Err(Error::param("the comparison scenario has two or three bands")),
        };
        let mut cfg = PipelineConfig::default();
        cfg.seed = 1;
        cfg.filter.edges = edges;
        cfg.solver.max_iters = max_iters;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn n_bands(&self) -> usize {
        self.filter.n_bands()
    }

    /// Checks every block before any computation.
    pub fn validate(&self) -> Result<()> {
        let cfg_err = |e: Error| Error::Config(e.to_string());
        let g = &self.geometry;
        let grid = g.grid().map_err(cfg_err)?;
        let array = g.array().map_err(cfg_err)?;
        if !(g.arc_density >= 1.0) {
            return Err(Error::Config("geometry.arc_density must be at least 1".into()));
        }
        let (lo, hi) = grid.support_box();
        let reach = [lo, hi, Point2::new(lo.x, hi.y), Point2::new(hi.x, lo.y)]
            .iter()
            .map(|c| c.distance(array.center()))
            .fold(0.0, f64::max);
        if reach >= array.radius() {
            return Err(Error::Config("the grid must lie inside the detector ring".into()));
        }
        if self.source.kind != SourceKind::File {
            g.timing().map_err(cfg_err)?;
        }

        match (self.source.kind, &self.source.path) {
            (SourceKind::File, None) => return Err(Error::Config("source.path is required for kind = \"file\"".into())),
            (SourceKind::File, Some(p)) if !p.is_file() => {
                return Err(Error::Config(format!("source file {} does not exist", p.display())))
            }
            (k, Some(_)) if k != SourceKind::File => {
                return Err(Error::Config("source.path is only used with kind = \"file\"".into()))
            }
            _ => {}
        }
        if let Some(snr) = self.source.noise_snr_db {
            if !snr.is_finite() {
                return Err(Error::Config("source.noise_snr_db must be finite".into()));
            }
        }
        if let Some(e) = self.source.eir {
            if !(e.center_hz > 0.0 && e.fractional_bandwidth > 0.0 && 2.0 * e.center_hz < g.sample_rate) {
                return Err(Error::Config("source.eir needs 0 < center_hz < sample_rate / 2 and a positive bandwidth".into()));
            }
        }

        let f = &self.filter;
        if f.edges.len() < 2 {
            return Err(Error::Config("filter.edges needs at least two entries".into()));
        }
        if f.edges[0] < 0.0 || f.edges.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config("filter.edges must be non-negative and strictly increasing".into()));
        }
        if f.order == 0 {
            return Err(Error::Config("filter.order must be positive".into()));
        }

        let s = &self.solver;
        if s.methods.is_empty() {
            return Err(Error::Config("solver.methods is empty".into()));
        }
        for (i, m) in s.methods.iter().enumerate() {
            if let Some(n) = m.bands {
                if m.kind != MethodKind::Mb && n != f.n_bands() {
                    return Err(Error::Config(format!("method `{m}` does not match the {} filter bands", f.n_bands())));
                }
            }
            if s.methods[..i].iter().any(|o| o.kind == m.kind) {
                return Err(Error::Config(format!("method `{m}` is listed twice")));
            }
        }
        let recon = s.recon();
        recon.validate().map_err(cfg_err)?;
        if s.methods.iter().any(|m| m.kind == MethodKind::Fbmb) {
            recon.mu_for(f.n_bands()).map_err(cfg_err)?;
        }
        let needs_reference = self.metrics.residual || self.metrics.ssim;
        if needs_reference && !s.methods.iter().any(|m| m.kind == MethodKind::Mb) {
            return Err(Error::Config("residual and SSIM metrics are relative to mb; add it to solver.methods".into()));
        }
        if !(self.metrics.overlap_threshold > 0.0 && self.metrics.overlap_threshold < 1.0) {
            return Err(Error::Config("metrics.overlap_threshold must lie in (0, 1)".into()));
        }

        if let Some(c) = &self.output.composite {
            c.validate().map_err(cfg_err)?;
            if c.colors.len() != f.n_bands() {
                return Err(Error::Config(format!(
                    "output.composite has {} colours for {} bands",
                    c.colors.len(),
                    f.n_bands()
                )));
            }
        }
        if self.output.dir.as_os_str().is_empty() {
            return Err(Error::Config("output.dir is empty".into()));
        }
        Ok(())
    }

    pub fn composite_spec(&self) -> CompositeSpec {
        self.output.composite.clone().unwrap_or_else(|| CompositeSpec::for_bands(self.n_bands()))
    }
}

/// Sets the dotted `key` of `table` from `key=value`. The value is read as
/// TOML (numbers, booleans, arrays, quoted strings) and otherwise kept as a
/// bare string.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{assignment}` is not key=value")))?;
    let key = key.trim();
    let raw = raw.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(Error::Config(format!("override `{assignment}` has an empty key")));
    }
    let value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").expect("parsed table holds v"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let parts: Vec<&str> = key.split('.').collect();
    let mut cur = table;
    for part in &parts[..parts.len() - 1] {
        let entry = cur.entry(part.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override `{key}`: `{part}` is not a table")))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}
