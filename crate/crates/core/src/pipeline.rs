//! End-to-end driver: data preparation, reconstruction, metrics and the
//! artifact directory.
//!
//! A run writes into a hidden sibling directory that replaces the target
//! only once every artifact is in place, so a failed run leaves nothing
//! behind. Layout of a `compare` run:
//!
//! ```text
//! manifest.json           resolved parameters and SHA-256 of every other file
//! phantom.img             rasterised phantom (phantom sources)
//! sinogram_raw.sino       simulated or loaded data
//! sinogram.sino           data after preprocessing
//! filter_bank.csv
//! spectra/data.csv        mean power spectrum of the data
//! spectra/<method>.csv    per-band spectra of multi-component methods
//! <method>/component_<j>.img, composite.img, composite.png,
//! <method>/diagnostics.json, trajectory*.csv
//! metrics.csv, metrics.json, metrics.txt
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{MethodKind, Method, PipelineConfig, Simulation, SourceKind};
use crate::error::{Error, Result};
use crate::filters::{design_band_bank, preprocess_signal, FilterBank, SwtBands, PREFILTER_BAND};
use crate::geometry::Timing;
use crate::io::{encode_image, encode_png, encode_sinogram, read_sinogram};
use crate::metrics::{
    band_power_spectrum, entropy, mean_power_spectrum, normalized_residual, piqe, residual_norm, rgb_entropy,
    shared_interval, ssim, MethodMetrics, MetricsReport,
};
use crate::model::{build_model_with, convolve_eir, read_model_cache, synthetic_eir, write_model_cache};
use crate::model::{ForwardModel, Image, Sinogram};
use crate::render::{composite, grayscale, RgbImage};
use crate::solver::{
    default_lambda, solve_fbmb, solve_mb_detailed, solve_rigid_filter_baseline, BandImageSet, ReconConfig, RigidMethod,
    SolverDiagnostics,
};
use crate::sources::{add_white_noise, simulate_sinogram, MultiscalePhantom, VesselPhantomSpec};

pub const MANIFEST: &str = "manifest.json";
pub const MANIFEST_FORMAT: &str = "fbmb-artifacts";
pub const MANIFEST_VERSION: u32 = 1;

/// How far a run goes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Simulate,
    Reconstruct,
    Compare,
}

/// Model, data and filter bank shared by every method of a run.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: PipelineConfig,
    pub model: ForwardModel,
    /// Rasterised phantom; `None` for file sources.
    pub phantom: Option<Image>,
    pub raw: Sinogram,
    /// Data handed to the solvers.
    pub data: Sinogram,
    pub bank: FilterBank,
    pub lambda: f64,
    pub warnings: Vec<String>,
}

impl Scenario {
    /// Solver settings with λ fixed to the value resolved for this scenario.
    pub fn recon_config(&self) -> ReconConfig {
        ReconConfig { lambda: Some(self.lambda), ..self.config.solver.recon() }
    }
}

fn load_or_build_model(config: &PipelineConfig, timing: Timing) -> Result<ForwardModel> {
    let g = &config.geometry;
    let (grid, array) = (g.grid()?, g.array()?);
    if let Some(path) = &config.output.model_cache {
        if path.is_file() {
            match read_model_cache(path, grid, array.clone(), timing, g.model_options()) {
                Ok(m) => return Ok(m),
                Err(e) => log::warn!("ignoring model cache {}: {e}", path.display()),
            }
        }
        let model = build_model_with(grid, array, timing, g.model_options())?;
        write_model_cache(path, &model)?;
        return Ok(model);
    }
    build_model_with(grid, array, timing, g.model_options())
}

/// Builds the model and the data described by `config`.
pub fn prepare(config: &PipelineConfig) -> Result<Scenario> {
    config.validate()?;
    let g = &config.geometry;
    let mut warnings = Vec::new();
    let grid = g.grid()?;
    let array = g.array()?;
    let file_data = match (config.source.kind, &config.source.path) {
        (SourceKind::File, Some(path)) => {
            let sino = read_sinogram(path)?;
            if sino.n_detectors() != array.len() {
                return Err(Error::Config(format!(
                    "{} has {} detectors, the geometry has {}",
                    path.display(),
                    sino.n_detectors(),
                    array.len()
                )));
            }
            if (sino.timing().speed_of_sound - g.speed_of_sound).abs() > 1e-9 * g.speed_of_sound {
                warnings.push("the sinogram file's speed of sound differs from geometry.speed_of_sound; using the file".into());
            }
            Some(sino)
        }
        _ => None,
    };
    let timing = match &file_data {
        Some(s) => *s.timing(),
        None => g.timing()?,
    };
    let model = load_or_build_model(config, timing)?;
    log::info!("model: {} rows, {} nnz", model.n_rows(), model.nnz());

    let phantom = match config.source.kind {
        SourceKind::Vessel => Some(VesselPhantomSpec::reference(config.seed).render(&grid)?),
        SourceKind::Multiscale => Some(MultiscalePhantom::default().render(&grid)?),
        SourceKind::Empty => Some(Image::zeros(grid)),
        SourceKind::File => None,
    };
    let mut raw = match file_data {
        Some(s) => s,
        None => match (config.source.simulation, config.source.kind) {
            (Simulation::Model, _) | (Simulation::Analytic, SourceKind::Empty) => {
                model.apply(phantom.as_ref().expect("phantom sources rasterise"))?
            }
            (Simulation::Analytic, SourceKind::Vessel) => {
                simulate_sinogram(&VesselPhantomSpec::reference(config.seed).to_spheres()?, &array, &timing)?
            }
            (Simulation::Analytic, SourceKind::Multiscale) => {
                simulate_sinogram(&MultiscalePhantom::default().to_spheres()?, &array, &timing)?
            }
            (Simulation::Analytic, SourceKind::File) => unreachable!("file sources are loaded above"),
        },
    };
    if config.source.kind != SourceKind::File {
        if let Some(e) = config.source.eir {
            raw = convolve_eir(&raw, &synthetic_eir(e.center_hz, e.fractional_bandwidth, timing.sample_rate)?)?;
        }
        if let Some(snr) = config.source.noise_snr_db {
            add_white_noise(&mut raw, snr, config.seed)?;
        }
    }
    if raw.max_abs() == 0.0 {
        warnings.push("the data are identically zero".into());
    }
    let data = if config.source.prefilter { preprocess_signal(&raw)? } else { raw.clone() };
    let bank = design_band_bank(&config.filter.edges, config.filter.order, timing.n_samples, timing.sample_rate)?;
    let lambda = config.solver.lambda.unwrap_or_else(|| default_lambda(&model));
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(Scenario { config: config.clone(), model, phantom, raw, data, bank, lambda, warnings })
}

/// One reconstructed method.
#[derive(Debug, Clone)]
pub struct MethodResult {
    pub method: Method,
    pub label: String,
    pub set: BandImageSet,
    /// Grayscale for MB, the band composite otherwise.
    pub rendered: RgbImage,
}

pub fn reconstruct_method(scenario: &Scenario, method: Method) -> Result<MethodResult> {
    let cfg = scenario.recon_config();
    let (model, data, bank) = (&scenario.model, &scenario.data, &scenario.bank);
    let set = match method.kind {
        MethodKind::Mb => solve_mb_detailed(model, data, &cfg)?,
        MethodKind::Fbmb => solve_fbmb(model, data, bank, &cfg)?,
        MethodKind::Butterworth => solve_rigid_filter_baseline(model, data, bank, &cfg, RigidMethod::Butterworth)?,
        MethodKind::Swt => solve_rigid_filter_baseline(model, data, bank, &cfg, RigidMethod::Swt)?,
    };
    let spec = scenario.config.composite_spec();
    let rendered = match method.kind {
        MethodKind::Mb => grayscale(&set.components[0], spec.high_clip, spec.low_clip)?,
        _ => composite(&set.components, &spec)?,
    };
    let label = method.label(bank.len());
    for d in &set.diagnostics {
        log::info!(
            "{label}: {} iterations, converged {}, {:.3} s per iteration",
            d.iterations,
            d.converged,
            d.seconds_per_iteration
        );
    }
    Ok(MethodResult { method, label, set, rendered })
}

pub fn reconstruct(scenario: &Scenario) -> Result<Vec<MethodResult>> {
    scenario.config.solver.methods.iter().map(|&m| reconstruct_method(scenario, m)).collect()
}

/// Normalised power spectra of the signals explained by each band of one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandSpectra {
    pub method: String,
    pub frequencies: Vec<f64>,
    pub bands: Vec<Vec<f64>>,
}

impl BandSpectra {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("frequency_hz");
        for j in 0..self.bands.len() {
            out.push_str(&format!(",band_{}", j + 1));
        }
        out.push('\n');
        for (k, f) in self.frequencies.iter().enumerate() {
            out.push_str(&format!("{f:.6e}"));
            for b in &self.bands {
                out.push_str(&format!(",{:.12e}", b[k]));
            }
            out.push('\n');
        }
        out
    }
}

/// Shared spectral interval of two adjacent bands around their common edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandOverlap {
    pub method: String,
    pub lower_band: usize,
    pub edge_hz: f64,
    pub threshold: f64,
    pub interval_hz: Option<(f64, f64)>,
}

impl BandOverlap {
    pub fn contains_edge(&self) -> bool {
        self.interval_hz.is_some_and(|(lo, hi)| lo <= self.edge_hz && self.edge_hz <= hi)
    }
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub report: MetricsReport,
    pub spectra: Vec<BandSpectra>,
    pub overlaps: Vec<BandOverlap>,
    pub warnings: Vec<String>,
}

fn metric<T>(enabled: bool, what: &str, label: &str, warnings: &mut Vec<String>, f: impl FnOnce() -> Result<T>) -> Option<T> {
    if !enabled {
        return None;
    }
    match f() {
        Ok(v) => Some(v),
        Err(e) => {
            warnings.push(format!("{what} of {label} is undefined: {e}"));
            None
        }
    }
}

/// Metrics of every result against the MB reconstruction among them.
pub fn compare(scenario: &Scenario, results: &[MethodResult]) -> Result<Comparison> {
    let m = scenario.config.metrics;
    let (model, data) = (&scenario.model, &scenario.data);
    let mut warnings = Vec::new();
    let reference = results.iter().find(|r| r.method.kind == MethodKind::Mb);
    if reference.is_none() && (m.residual || m.ssim) {
        return Err(Error::Config("residual and SSIM metrics need an mb result".into()));
    }
    let ref_residual = match reference {
        Some(r) if m.residual => Some(residual_norm(model, data, &r.set.components)?),
        _ => None,
    };
    let ref_image = reference.map(|r| r.set.composite());
    let mut rows = Vec::with_capacity(results.len());
    for r in results {
        let sum = r.set.composite();
        let label = &r.label;
        let normalized = metric(m.residual, "normalized residual", label, &mut warnings, || {
            normalized_residual(model, data, &r.set.components, ref_residual.expect("reference residual"))
        });
        let s = metric(m.ssim, "SSIM", label, &mut warnings, || ssim(ref_image.as_ref().expect("reference image"), &sum));
        let ent = metric(m.entropy, "entropy", label, &mut warnings, || Ok(entropy(&sum)));
        let rent = metric(m.entropy, "rendered entropy", label, &mut warnings, || Ok(rgb_entropy(&r.rendered)));
        let pq = metric(m.piqe, "PIQE", label, &mut warnings, || piqe(&r.rendered));
        if pq.as_ref().is_some_and(|p| p.no_active_blocks) {
            warnings.push(format!("PIQE of {label} found no active blocks"));
        }
        rows.push(MethodMetrics {
            method: label.clone(),
            normalized_residual: normalized,
            ssim: s,
            entropy: ent,
            rendered_entropy: rent,
            piqe: pq.as_ref().map(|p| p.score),
            piqe_active_blocks: pq.as_ref().map(|p| p.active_blocks),
        });
    }

    let mut spectra = Vec::new();
    let mut overlaps = Vec::new();
    if m.spectra {
        for r in results.iter().filter(|r| r.set.len() > 1) {
            let (freqs, bands) = band_spectra(model, &r.set.components)?;
            let edges = scenario.bank.edges();
            for j in 0..bands.len() - 1 {
                let edge = edges[j + 1];
                overlaps.push(BandOverlap {
                    method: r.label.clone(),
                    lower_band: j + 1,
                    edge_hz: edge,
                    threshold: m.overlap_threshold,
                    interval_hz: shared_interval(&freqs, &bands[j], &bands[j + 1], m.overlap_threshold, edge),
                });
            }
            spectra.push(BandSpectra { method: r.label.clone(), frequencies: freqs, bands });
        }
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(Comparison { report: MetricsReport { rows }, spectra, overlaps, warnings })
}

fn band_spectra(model: &ForwardModel, components: &[Image]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let mut freqs = Vec::new();
    let mut bands = Vec::with_capacity(components.len());
    for c in components {
        let (f, p) = band_power_spectrum(model, c)?;
        freqs = f;
        bands.push(p);
    }
    Ok((freqs, bands))
}

/// Collects files under a staging directory and their digests.
struct ArtifactWriter {
    root: PathBuf,
    digests: BTreeMap<String, String>,
}

impl ArtifactWriter {
    fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, bytes)?;
        self.digests.insert(rel.to_string(), sha256_hex(bytes));
        Ok(())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub rows: usize,
    pub cols: usize,
    pub nnz: usize,
    pub arc_density: f64,
    pub geometry_hash: String,
}

/// Values the configuration leaves to defaults or derives, made explicit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Resolved {
    pub timing: Timing,
    pub lambda: f64,
    pub eta: f64,
    pub mu: Vec<f64>,
    pub max_iters: usize,
    pub rel_tol: f64,
    pub filter_edges_hz: Vec<f64>,
    pub filter_order: u32,
    pub relative_bandwidths: Vec<f64>,
    pub prefilter_band_hz: Option<(f64, f64)>,
    pub swt_levels: usize,
    pub swt_groups: Vec<Vec<usize>>,
    pub composite_colors: Vec<[f64; 3]>,
    pub high_clip: f64,
    pub low_clip: f64,
    pub model: ModelSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: String,
    pub components: usize,
    pub diagnostics: Vec<DiagnosticSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticSummary {
    pub iterations: usize,
    pub converged: bool,
    pub restarts: usize,
    pub rel_projected_gradient: f64,
    pub objective: f64,
}

impl From<&SolverDiagnostics> for DiagnosticSummary {
    fn from(d: &SolverDiagnostics) -> Self {
        DiagnosticSummary {
            iterations: d.iterations,
            converged: d.converged,
            restarts: d.restarts,
            rel_projected_gradient: d.rel_projected_gradient,
            objective: d.objective(),
        }
    }
}

/// Contents of `manifest.json`. The output directory is recorded as `.`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub version: u32,
    pub code_version: String,
    pub stage: Stage,
    pub config: PipelineConfig,
    pub resolved: Resolved,
    pub methods: Vec<MethodSummary>,
    pub overlaps: Vec<BandOverlap>,
    pub warnings: Vec<String>,
    /// SHA-256 of every other artifact, keyed by relative path.
    pub artifacts: BTreeMap<String, String>,
}

impl Manifest {
    pub fn read(dir: &Path) -> Result<Self> {
        let text = fs::read_to_string(dir.join(MANIFEST))
            .map_err(|e| Error::Format(format!("{} is not an artifact directory: {e}", dir.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", dir.join(MANIFEST).display())))
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))
    }
}

fn resolved(scenario: &Scenario) -> Result<Resolved> {
    let cfg = &scenario.config;
    let recon = scenario.recon_config();
    let spec = cfg.composite_spec();
    let timing = *scenario.data.timing();
    let swt = SwtBands::for_edges(scenario.bank.edges(), timing.sample_rate)?;
    Ok(Resolved {
        timing,
        lambda: scenario.lambda,
        eta: recon.eta,
        mu: recon.mu_for(scenario.bank.len())?,
        max_iters: recon.max_iters,
        rel_tol: recon.rel_tol,
        filter_edges_hz: scenario.bank.edges().to_vec(),
        filter_order: cfg.filter.order,
        relative_bandwidths: scenario.bank.arithmetic_relative_bandwidths(),
        prefilter_band_hz: cfg.source.prefilter.then_some((PREFILTER_BAND.0, PREFILTER_BAND.1.min(timing.sample_rate / 2.0))),
        swt_levels: swt.levels,
        swt_groups: swt.groups.clone(),
        composite_colors: spec.colors,
        high_clip: spec.high_clip,
        low_clip: spec.low_clip,
        model: ModelSummary {
            rows: scenario.model.n_rows(),
            cols: scenario.model.n_cols(),
            nnz: scenario.model.nnz(),
            arc_density: scenario.model.options().arc_density,
            geometry_hash: format!("{:016x}", scenario.model.geometry_hash()),
        },
    })
}

fn write_artifacts(
    w: &mut ArtifactWriter,
    scenario: &Scenario,
    results: &[MethodResult],
    comparison: Option<&Comparison>,
    stage: Stage,
) -> Result<Manifest> {
    let cfg = &scenario.config;
    let dtype = cfg.output.dtype;
    if let Some(p) = &scenario.phantom {
        w.write("phantom.img", &encode_image(p, dtype)?)?;
    }
    w.write("sinogram_raw.sino", &encode_sinogram(&scenario.raw, dtype)?)?;
    w.write("sinogram.sino", &encode_sinogram(&scenario.data, dtype)?)?;
    let (f, p) = mean_power_spectrum(&scenario.data);
    let mut csv = String::from("frequency_hz,power\n");
    for (f, p) in f.iter().zip(&p) {
        csv.push_str(&format!("{f:.6e},{p:.12e}\n"));
    }
    w.write("spectra/data.csv", csv.as_bytes())?;

    let mut methods = Vec::new();
    if stage != Stage::Simulate {
        w.write("filter_bank.csv", scenario.bank.to_csv().as_bytes())?;
        for r in results {
            let dir = &r.label;
            for (j, c) in r.set.components.iter().enumerate() {
                w.write(&format!("{dir}/component_{}.img", j + 1), &encode_image(c, dtype)?)?;
            }
            w.write(&format!("{dir}/composite.img"), &encode_image(&r.set.composite(), dtype)?)?;
            if cfg.output.png {
                w.write(&format!("{dir}/composite.png"), &encode_png(&r.rendered)?)?;
            }
            let diag = serde_json::to_string_pretty(&r.set.diagnostics).map_err(|e| Error::Format(e.to_string()))?;
            w.write(&format!("{dir}/diagnostics.json"), diag.as_bytes())?;
            if r.set.diagnostics.len() == 1 {
                w.write(&format!("{dir}/trajectory.csv"), r.set.diagnostics[0].to_csv().as_bytes())?;
            } else {
                for (j, d) in r.set.diagnostics.iter().enumerate() {
                    w.write(&format!("{dir}/trajectory_band_{}.csv", j + 1), d.to_csv().as_bytes())?;
                }
            }
            methods.push(MethodSummary {
                method: r.label.clone(),
                components: r.set.len(),
                diagnostics: r.set.diagnostics.iter().map(DiagnosticSummary::from).collect(),
            });
        }
    }
    let mut warnings = scenario.warnings.clone();
    let mut overlaps = Vec::new();
    if let Some(c) = comparison {
        w.write("metrics.csv", c.report.to_csv().as_bytes())?;
        w.write("metrics.txt", c.report.to_text().as_bytes())?;
        let json = serde_json::to_string_pretty(&c.report).map_err(|e| Error::Format(e.to_string()))?;
        w.write("metrics.json", json.as_bytes())?;
        for s in &c.spectra {
            w.write(&format!("spectra/{}.csv", s.method), s.to_csv().as_bytes())?;
        }
        overlaps = c.overlaps.clone();
        warnings.extend(c.warnings.iter().cloned());
    }
    let mut config = cfg.clone();
    config.output.dir = PathBuf::from(".");
    let manifest = Manifest {
        format: MANIFEST_FORMAT.into(),
        version: MANIFEST_VERSION,
        code_version: env!("CARGO_PKG_VERSION").into(),
        stage,
        config,
        resolved: resolved(scenario)?,
        methods,
        overlaps,
        warnings,
        artifacts: w.digests.clone(),
    };
    fs::write(w.root.join(MANIFEST), manifest.to_json()?)?;
    Ok(manifest)
}

fn staging_dir(target: &Path) -> Result<PathBuf> {
    let name = target
        .file_name()
        .ok_or_else(|| Error::Config(format!("output directory {} has no final component", target.display())))?;
    let parent = target.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    Ok(parent.join(format!(".{}.partial", name.to_string_lossy())))
}

/// Runs the pipeline up to `stage` and publishes the artifact directory.
pub fn run(config: &PipelineConfig, stage: Stage) -> Result<RunOutput> {
    config.validate()?;
    let target = config.output.dir.clone();
    if target.exists() && !target.join(MANIFEST).is_file() && fs::read_dir(&target)?.next().is_some() {
        return Err(Error::Config(format!(
            "{} exists and is not an artifact directory; refusing to replace it",
            target.display()
        )));
    }
    let staging = staging_dir(&target)?;
    if staging.exists() {
        fs::remove_dir_all(&staging)?;
    }
    fs::create_dir_all(&staging)?;
    let outcome = (|| -> Result<RunOutput> {
        let scenario = prepare(config)?;
        let results = if stage == Stage::Simulate { Vec::new() } else { reconstruct(&scenario)? };
        let comparison = if stage == Stage::Compare { Some(compare(&scenario, &results)?) } else { None };
        let mut w = ArtifactWriter { root: staging.clone(), digests: BTreeMap::new() };
        let manifest = write_artifacts(&mut w, &scenario, &results, comparison.as_ref(), stage)?;
        Ok(RunOutput { dir: target.clone(), manifest, scenario, results, comparison })
    })();
    match outcome {
        Ok(out) => {
            if target.exists() {
                fs::remove_dir_all(&target)?;
            }
            fs::rename(&staging, &target)?;
            Ok(out)
        }
        Err(e) => {
            let _ = fs::remove_dir_all(&staging);
            Err(e)
        }
    }
}

pub struct RunOutput {
    pub dir: PathBuf,
    pub manifest: Manifest,
    pub scenario: Scenario,
    pub results: Vec<MethodResult>,
    pub comparison: Option<Comparison>,
}

/// Human-readable summary of a finished `compare` run.
pub fn report(dir: &Path) -> Result<String> {
    let manifest = Manifest::read(dir)?;
    let text = fs::read_to_string(dir.join("metrics.json"))
        .map_err(|e| Error::Format(format!("{} has no metrics: {e}", dir.display())))?;
    let metrics: MetricsReport = serde_json::from_str(&text).map_err(|e| Error::Format(e.to_string()))?;
    let mut out = metrics.to_text();
    for m in &manifest.methods {
        for (k, d) in m.diagnostics.iter().enumerate() {
            let part = if m.diagnostics.len() > 1 { format!(" band {}", k + 1) } else { String::new() };
            out.push_str(&format!(
                "{}{part}: {} iterations, converged {}, relative projected gradient {:.2e}\n",
                m.method, d.iterations, d.converged, d.rel_projected_gradient
            ));
        }
    }
    for o in &manifest.overlaps {
        match o.interval_hz {
            Some((lo, hi)) => out.push_str(&format!(
                "{} bands {}/{}: both above {} of peak on {:.3}-{:.3} MHz (edge {:.3} MHz)\n",
                o.method,
                o.lower_band,
                o.lower_band + 1,
                o.threshold,
                lo / 1e6,
                hi / 1e6,
                o.edge_hz / 1e6
            )),
            None => out.push_str(&format!(
                "{} bands {}/{}: no shared interval at {:.3} MHz\n",
                o.method,
                o.lower_band,
                o.lower_band + 1,
                o.edge_hz / 1e6
            )),
        }
    }
    for w in &manifest.warnings {
        out.push_str(&format!("warning: {w}\n"));
    }
    Ok(out)
}

/// Builds the model for `config` and stores it at `path`.
pub fn cache_model(config: &PipelineConfig, path: &Path) -> Result<ModelSummary> {
    config.validate()?;
    let g = &config.geometry;
    let timing = match (&config.source.kind, &config.source.path) {
        (SourceKind::File, Some(p)) => *read_sinogram(p)?.timing(),
        _ => g.timing()?,
    };
    let model = build_model_with(g.grid()?, g.array()?, timing, g.model_options())?;
    write_model_cache(path, &model)?;
    Ok(ModelSummary {
        rows: model.n_rows(),
        cols: model.n_cols(),
        nnz: model.nnz(),
        arc_density: model.options().arc_density,
        geometry_hash: format!("{:016x}", model.geometry_hash()),
    })
}
