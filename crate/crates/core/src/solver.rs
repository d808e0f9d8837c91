//! Non-negative reconstruction: standard model-based (MB) inversion and the
//! frequency-band variant with soft spectral priors.
//!
//! For components `x_1 … x_n ≥ 0` the objective is
//!
//! ```text
//! ‖p − M Σx_j‖² + λ‖Σx_j‖² + Σ_j η μ_j ‖(I − F_j) M x_j‖²
//! ```
//!
//! which is `‖A X − b‖²` for the stacked operator
//! `A = [M … M ; √λ I … √λ I ; diag(√(ημ_j) (I − F_j) M)]` and `b = [p; 0; 0]`.
//! MB is the single-component case without priors. The minimiser is found by
//! projected conjugate gradients on the normal equations, from `X = 0`.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::{apply_band, swt_band_split, FilterBank, SwtBands};
use crate::model::{axpy, dot, norm2, ForwardModel, Image, Sinogram};
use crate::par;
use crate::spectrum::SpectralMultiplier;

/// Tikhonov weight relative to the squared largest singular value of `M`.
pub const LAMBDA_SCALE: f64 = 1e-2;
pub const POWER_ITERATIONS: usize = 20;
pub const DEFAULT_MAX_ITERS: usize = 200;
pub const DEFAULT_REL_TOL: f64 = 1e-6;
pub const DEFAULT_ETA: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReconConfig {
    /// Tikhonov weight; `None` selects `LAMBDA_SCALE · σ_max(M)²`.
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default = "default_eta")]
    pub eta: f64,
    /// Band weights summing to one; `None` selects uniform weights.
    #[serde(default)]
    pub mu: Option<Vec<f64>>,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
}

fn default_eta() -> f64 {
    DEFAULT_ETA
}

fn default_max_iters() -> usize {
    DEFAULT_MAX_ITERS
}

fn default_rel_tol() -> f64 {
    DEFAULT_REL_TOL
}

impl Default for ReconConfig {
    fn default() -> Self {
        ReconConfig { lambda: None, eta: DEFAULT_ETA, mu: None, max_iters: DEFAULT_MAX_ITERS, rel_tol: DEFAULT_REL_TOL }
    }
}

impl ReconConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(l) = self.lambda {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(Error::param(format!("lambda must be finite and non-negative, got {l}")));
            }
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(Error::param(format!("eta must be finite and non-negative, got {}", self.eta)));
        }
        if let Some(mu) = &self.mu {
            if mu.iter().any(|&m| !(m >= 0.0)) {
                return Err(Error::param("band weights mu must be non-negative"));
            }
            let s: f64 = mu.iter().sum();
            if (s - 1.0).abs() > 1e-12 {
                return Err(Error::param(format!("band weights mu must sum to 1, got {s}")));
            }
        }
        if self.max_iters == 0 {
            return Err(Error::param("max_iters must be positive"));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::param("rel_tol must be positive"));
        }
        Ok(())
    }

    /// Band weights for `n` components.
    pub fn mu_for(&self, n: usize) -> Result<Vec<f64>> {
        match &self.mu {
            Some(mu) if mu.len() == n => Ok(mu.clone()),
            Some(mu) => Err(Error::param(format!("{} band weights for {n} bands", mu.len()))),
            None => Ok(vec![1.0 / n as f64; n]),
        }
    }

    pub fn lambda_for(&self, model: &ForwardModel) -> f64 {
        self.lambda.unwrap_or_else(|| default_lambda(model))
    }
}

/// `σ_max(M)²` from power iterations on `MᵀM` started at the all-ones image.
pub fn estimate_spectral_norm_sq(model: &ForwardModel, iterations: usize) -> f64 {
    let n = model.n_cols();
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut y = vec![0.0; model.n_rows()];
    let mut w = vec![0.0; n];
    let mut sigma2 = 0.0;
    for _ in 0..iterations.max(1) {
        model.apply_into(&v, &mut y);
        model.adjoint_into(&y, &mut w);
        sigma2 = norm2(&w);
        if sigma2 == 0.0 {
            return 0.0;
        }
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / sigma2;
        }
    }
    sigma2
}

pub fn default_lambda(model: &ForwardModel) -> f64 {
    LAMBDA_SCALE * estimate_spectral_norm_sq(model, POWER_ITERATIONS)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveTerms {
    pub data: f64,
    pub tikhonov: f64,
    /// Weighted prior terms `η μ_j ‖(I − F_j) M x_j‖²`.
    pub priors: Vec<f64>,
}

impl ObjectiveTerms {
    pub fn total(&self) -> f64 {
        self.data + self.tikhonov + self.priors.iter().sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverDiagnostics {
    pub iterations: usize,
    pub converged: bool,
    pub restarts: usize,
    pub lambda: f64,
    pub eta: f64,
    pub mu: Vec<f64>,
    /// Final relative projected-gradient norm.
    pub rel_projected_gradient: f64,
    /// Objective terms at `X = 0` and after every iteration.
    pub trajectory: Vec<ObjectiveTerms>,
    /// Mean wall time of one iteration in seconds; excluded from serialised artifacts.
    #[serde(skip)]
    pub seconds_per_iteration: f64,
}

impl SolverDiagnostics {
    pub fn final_terms(&self) -> &ObjectiveTerms {
        self.trajectory.last().expect("trajectory holds the initial point")
    }

    pub fn objective(&self) -> f64 {
        self.final_terms().total()
    }

    /// CSV `iteration,objective,data,tikhonov,prior_1,…`.
    pub fn to_csv(&self) -> String {
        let n = self.trajectory.first().map_or(0, |t| t.priors.len());
        let mut out = String::from("iteration,objective,data,tikhonov");
        for j in 0..n {
            out.push_str(&format!(",prior_{}", j + 1));
        }
        out.push('\n');
        for (it, t) in self.trajectory.iter().enumerate() {
            out.push_str(&format!("{it},{:.17e},{:.17e},{:.17e}", t.total(), t.data, t.tikhonov));
            for p in &t.priors {
                out.push_str(&format!(",{p:.17e}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Band components of one reconstruction.
#[derive(Debug, Clone, PartialEq)]
pub struct BandImageSet {
    pub components: Vec<Image>,
    pub config: ReconConfig,
    /// One entry for a joint solve, one per band for independent solves.
    pub diagnostics: Vec<SolverDiagnostics>,
}

impl BandImageSet {
    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// `Σ x_j`.
    pub fn composite(&self) -> Image {
        Image::sum(&self.components).expect("components share one grid")
    }

    pub fn is_nonnegative(&self) -> bool {
        self.components.iter().all(Image::is_nonnegative)
    }

    pub fn converged(&self) -> bool {
        self.diagnostics.iter().all(|d| d.converged)
    }
}

struct Prior {
    weight: f64,
    complement: Vec<f64>,
    complement_sq: Vec<f64>,
    plan: SpectralMultiplier,
}

/// The stacked least-squares problem, applied matrix-free.
struct Problem<'a> {
    model: &'a ForwardModel,
    p: &'a [f64],
    lambda: f64,
    n: usize,
    priors: Vec<Option<Prior>>,
}

impl<'a> Problem<'a> {
    fn new(model: &'a ForwardModel, sino: &'a Sinogram, bank: Option<&FilterBank>, lambda: f64, eta: f64, mu: &[f64]) -> Result<Self> {
        if sino.n_detectors() != model.array().len() || sino.n_samples() != model.timing().n_samples {
            return Err(Error::shape("sinogram does not match the model dimensions"));
        }
        let n = mu.len();
        let priors = match bank {
            None => (0..n).map(|_| None).collect(),
            Some(bank) => {
                if bank.len() != n {
                    return Err(Error::shape(format!("{} filters for {n} components", bank.len())));
                }
                bank.bands()
                    .iter()
                    .zip(mu)
                    .map(|(f, &m)| -> Result<Option<Prior>> {
                        if f.n_samples() != sino.n_samples() {
                            return Err(Error::shape("filter length does not match the sinogram"));
                        }
                        let weight = eta * m;
                        if weight == 0.0 {
                            return Ok(None);
                        }
                        let complement: Vec<f64> = f.gain().iter().map(|g| 1.0 - g).collect();
                        let complement_sq = complement.iter().map(|c| c * c).collect();
                        Ok(Some(Prior { weight, complement, complement_sq, plan: SpectralMultiplier::new(f.n_samples()) }))
                    })
                    .collect::<Result<_>>()?
            }
        };
        Ok(Problem { model, p: sino.data(), lambda, n, priors })
    }

    fn npix(&self) -> usize {
        self.model.n_cols()
    }

    fn filtered(&self, prior: &Prior, gain: &[f64], y: &[f64]) -> Vec<f64> {
        let ns = self.model.timing().n_samples;
        let mut out = y.to_vec();
        par::for_each_chunk_mut(&mut out, ns, |_, trace| {
            let mut scratch: Vec<Complex64> = Vec::with_capacity(ns);
            prior.plan.apply(trace, gain, &mut scratch);
        });
        out
    }

    fn apply_components(&self, x: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let xs: Vec<&[f64]> = x.iter().map(Vec::as_slice).collect();
        self.model.apply_many(&xs)
    }

    fn sum(v: &[Vec<f64>]) -> Vec<f64> {
        let mut s = v[0].clone();
        for vj in &v[1..] {
            axpy(1.0, vj, &mut s);
        }
        s
    }

    /// `C_j² y_j` for the components that carry a prior.
    fn prior_images(&self, y: &[Vec<f64>]) -> Vec<Option<Vec<f64>>> {
        self.priors
            .iter()
            .zip(y)
            .map(|(prior, yj)| prior.as_ref().map(|pr| self.filtered(pr, &pr.complement_sq, yj)))
            .collect()
    }

    /// Objective terms by explicit filtering of `M x_j`.
    fn terms(&self, x: &[Vec<f64>], mx: &[Vec<f64>]) -> ObjectiveTerms {
        let priors = self
            .priors
            .iter()
            .zip(mx)
            .map(|(prior, y)| match prior {
                None => 0.0,
                Some(pr) => pr.weight * norm2(&self.filtered(pr, &pr.complement, y)).powi(2),
            })
            .collect();
        self.assemble(x, mx, Some(self.p), priors)
    }

    /// Objective terms from `M x_j` and `C_j² M x_j`, with `‖C y‖² = ⟨y, C² y⟩`.
    /// Without `p` this is `‖A X‖²` split by term.
    fn tracked_terms(&self, x: &[Vec<f64>], mx: &[Vec<f64>], c2mx: &[Option<Vec<f64>>], p: Option<&[f64]>) -> ObjectiveTerms {
        let priors = self
            .priors
            .iter()
            .zip(mx.iter().zip(c2mx))
            .map(|(prior, (y, c2y))| match (prior, c2y) {
                (Some(pr), Some(c2y)) => pr.weight * dot(y, c2y),
                _ => 0.0,
            })
            .collect();
        self.assemble(x, mx, p, priors)
    }

    fn assemble(&self, x: &[Vec<f64>], mx: &[Vec<f64>], p: Option<&[f64]>, priors: Vec<f64>) -> ObjectiveTerms {
        let mut r = Self::sum(mx);
        if let Some(p) = p {
            axpy(-1.0, p, &mut r);
        }
        let sx = Self::sum(x);
        ObjectiveTerms { data: norm2(&r).powi(2), tikhonov: self.lambda * norm2(&sx).powi(2), priors }
    }

    /// `Aᵀ(A X − b)` per component.
    fn gradient(&self, x: &[Vec<f64>], mx: &[Vec<f64>], c2mx: &[Option<Vec<f64>>]) -> Vec<Vec<f64>> {
        let mut r = Self::sum(mx);
        axpy(-1.0, self.p, &mut r);
        let sx = Self::sum(x);
        // components without a prior share the back-projection of `r`
        let u: Vec<Option<Vec<f64>>> = self
            .priors
            .iter()
            .zip(c2mx)
            .map(|(prior, c2y)| match (prior, c2y) {
                (Some(pr), Some(c2y)) => Some(r.iter().zip(c2y).map(|(ri, ci)| ri + pr.weight * ci).collect()),
                _ => None,
            })
            .collect();
        let mut inputs: Vec<&[f64]> = u.iter().flatten().map(Vec::as_slice).collect();
        let needs_shared = u.iter().any(Option::is_none);
        if needs_shared {
            inputs.push(&r);
        }
        let mut back = self.model.adjoint_many(&inputs);
        let shared = if needs_shared { back.pop() } else { None };
        let mut own = back.into_iter();
        let mut out = Vec::with_capacity(self.n);
        for uj in &u {
            let mut g = match uj {
                Some(_) => own.next().expect("one back-projection per prior"),
                None => shared.clone().expect("shared back-projection"),
            };
            axpy(self.lambda, &sx, &mut g);
            out.push(g);
        }
        out
    }
}

fn dot_all(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| dot(x, y)).sum()
}

fn norm_sq_all(a: &[Vec<f64>]) -> f64 {
    a.iter().map(|x| dot(x, x)).sum()
}

/// Free variables: strictly positive, or at the bound with a descent direction.
fn free_set(x: &[Vec<f64>], g: &[Vec<f64>]) -> Vec<Vec<bool>> {
    x.iter()
        .zip(g)
        .map(|(xj, gj)| xj.iter().zip(gj).map(|(&xi, &gi)| xi > 0.0 || gi < 0.0).collect())
        .collect()
}

fn masked(v: &[Vec<f64>], mask: &[Vec<bool>]) -> Vec<Vec<f64>> {
    v.iter()
        .zip(mask)
        .map(|(vj, mj)| vj.iter().zip(mj).map(|(&a, &m)| if m { a } else { 0.0 }).collect())
        .collect()
}

#[cfg(not(target_arch = "wasm32"))]
type Clock = std::time::Instant;

#[cfg(not(target_arch = "wasm32"))]
fn clock_now() -> Option<Clock> {
    Some(std::time::Instant::now())
}

#[cfg(not(target_arch = "wasm32"))]
fn elapsed(start: Option<Clock>) -> f64 {
    start.map_or(0.0, |s| s.elapsed().as_secs_f64())
}

#[cfg(target_arch = "wasm32")]
type Clock = ();

#[cfg(target_arch = "wasm32")]
fn clock_now() -> Option<Clock> {
    None
}

#[cfg(target_arch = "wasm32")]
fn elapsed(_: Option<Clock>) -> f64 {
    0.0
}

/// `X += α D` with the tracked projections, then the projection onto `X ≥ 0`.
fn step(
    x: &mut [Vec<f64>],
    mx: &mut [Vec<f64>],
    c2mx: &mut [Option<Vec<f64>>],
    alpha: f64,
    d: &[Vec<f64>],
    md: &[Vec<f64>],
    c2md: &[Option<Vec<f64>>],
) {
    for j in 0..x.len() {
        axpy(alpha, &d[j], &mut x[j]);
        axpy(alpha, &md[j], &mut mx[j]);
        if let (Some(c), Some(cd)) = (&mut c2mx[j], &c2md[j]) {
            axpy(alpha, cd, c);
        }
        for v in x[j].iter_mut() {
            *v = v.max(0.0);
        }
    }
}

fn pcg(problem: &Problem, config: &ReconConfig, mu: Vec<f64>) -> (Vec<Vec<f64>>, SolverDiagnostics) {
    let n = problem.n;
    let npix = problem.npix();
    let nrows = problem.model.n_rows();
    let mut x = vec![vec![0.0; npix]; n];
    let mut mx = vec![vec![0.0; nrows]; n];
    let mut c2mx: Vec<Option<Vec<f64>>> = problem.priors.iter().map(|p| p.as_ref().map(|_| vec![0.0; nrows])).collect();
    let mut terms = problem.tracked_terms(&x, &mx, &c2mx, Some(problem.p));
    let mut f = terms.total();
    let mut trajectory = vec![terms];
    let mut g = problem.gradient(&x, &mx, &c2mx);
    let mut free = free_set(&x, &g);
    let pg = masked(&g, &free);
    let mut pg_sq = norm_sq_all(&pg);
    let pg0 = pg_sq.sqrt();
    let mut rel = if pg0 > 0.0 { 1.0 } else { 0.0 };
    let mut converged = pg0 == 0.0;
    let mut d: Vec<Vec<f64>> = pg.iter().map(|v| v.iter().map(|a| -a).collect()).collect();
    let mut iterations = 0;
    let mut restarts = 0;
    let start = clock_now();

    while !converged && iterations < config.max_iters {
        iterations += 1;
        let md = problem.apply_components(&d);
        let c2md = problem.prior_images(&md);
        let q = problem.tracked_terms(&d, &md, &c2md, None).total();
        let gd = dot_all(&g, &d);
        if !(q > 0.0) || gd >= 0.0 {
            break;
        }
        let alpha = -gd / q;
        let mut alpha_max = f64::INFINITY;
        for (xj, dj) in x.iter().zip(&d) {
            for (&xi, &di) in xj.iter().zip(dj) {
                if di < 0.0 {
                    alpha_max = alpha_max.min(-xi / di);
                }
            }
        }
        let clipped = alpha > alpha_max;
        if !clipped {
            step(&mut x, &mut mx, &mut c2mx, alpha, &d, &md, &c2md);
            terms = problem.tracked_terms(&x, &mx, &c2mx, Some(problem.p));
        } else {
            let xp: Vec<Vec<f64>> = x
                .iter()
                .zip(&d)
                .map(|(xj, dj)| xj.iter().zip(dj).map(|(&a, &b)| (a + alpha * b).max(0.0)).collect())
                .collect();
            let mxp = problem.apply_components(&xp);
            let c2mxp = problem.prior_images(&mxp);
            let tp = problem.tracked_terms(&xp, &mxp, &c2mxp, Some(problem.p));
            let f_boundary = f + 2.0 * alpha_max * gd + alpha_max * alpha_max * q;
            if tp.total() < f_boundary {
                x = xp;
                mx = mxp;
                c2mx = c2mxp;
                terms = tp;
            } else {
                step(&mut x, &mut mx, &mut c2mx, alpha_max, &d, &md, &c2md);
                terms = problem.tracked_terms(&x, &mx, &c2mx, Some(problem.p));
            }
        }
        f = terms.total();
        trajectory.push(terms.clone());

        g = problem.gradient(&x, &mx, &c2mx);
        let new_free = free_set(&x, &g);
        let new_pg = masked(&g, &new_free);
        let new_pg_sq = norm_sq_all(&new_pg);
        rel = new_pg_sq.sqrt() / pg0;
        if rel < config.rel_tol {
            converged = true;
        }
        if clipped || new_free != free {
            restarts += 1;
            d = new_pg.iter().map(|v| v.iter().map(|a| -a).collect()).collect();
        } else {
            let beta = new_pg_sq / pg_sq;
            for (dj, pj) in d.iter_mut().zip(&new_pg) {
                for (di, &pi) in dj.iter_mut().zip(pj) {
                    *di = -pi + beta * *di;
                }
            }
            d = masked(&d, &new_free);
        }
        free = new_free;
        pg_sq = new_pg_sq;
    }
    if !converged {
        log::warn!("projected CG stopped after {iterations} iterations at relative gradient {rel:.3e}");
    }
    let diag = SolverDiagnostics {
        iterations,
        converged,
        restarts,
        lambda: problem.lambda,
        eta: config.eta,
        mu,
        rel_projected_gradient: rel,
        trajectory,
        seconds_per_iteration: if iterations > 0 { elapsed(start) / iterations as f64 } else { 0.0 },
    };
    (x, diag)
}

fn to_images(model: &ForwardModel, x: Vec<Vec<f64>>) -> Vec<Image> {
    x.into_iter()
        .map(|v| Image::from_values(*model.grid(), v).expect("solver output matches the grid"))
        .collect()
}

/// Objective terms of a given set of components.
pub fn objective_terms(
    model: &ForwardModel,
    sino: &Sinogram,
    components: &[Image],
    bank: Option<&FilterBank>,
    config: &ReconConfig,
) -> Result<ObjectiveTerms> {
    config.validate()?;
    if components.is_empty() {
        return Err(Error::param("at least one component is required"));
    }
    for c in components {
        if c.grid() != model.grid() {
            return Err(Error::shape("component grid does not match the model"));
        }
    }
    let mu = config.mu_for(components.len())?;
    let lambda = config.lambda_for(model);
    let problem = Problem::new(model, sino, bank, lambda, config.eta, &mu)?;
    let x: Vec<Vec<f64>> = components.iter().map(|c| c.values().to_vec()).collect();
    let mx = problem.apply_components(&x);
    Ok(problem.terms(&x, &mx))
}

/// Standard MB reconstruction with its diagnostics.
pub fn solve_mb_detailed(model: &ForwardModel, sino: &Sinogram, config: &ReconConfig) -> Result<BandImageSet> {
    config.validate()?;
    let lambda = config.lambda_for(model);
    let problem = Problem::new(model, sino, None, lambda, config.eta, &[1.0])?;
    let (x, mut diag) = pcg(&problem, config, vec![1.0]);
    diag.eta = 0.0;
    Ok(BandImageSet { components: to_images(model, x), config: config.clone(), diagnostics: vec![diag] })
}

pub fn solve_mb(model: &ForwardModel, sino: &Sinogram, config: &ReconConfig) -> Result<Image> {
    Ok(solve_mb_detailed(model, sino, config)?.components.remove(0))
}

/// Joint reconstruction of one component per filter band.
pub fn solve_fbmb(model: &ForwardModel, sino: &Sinogram, bank: &FilterBank, config: &ReconConfig) -> Result<BandImageSet> {
    config.validate()?;
    if bank.is_empty() {
        return Err(Error::param("filter bank is empty"));
    }
    let mu = config.mu_for(bank.len())?;
    let lambda = config.lambda_for(model);
    let problem = Problem::new(model, sino, Some(bank), lambda, config.eta, &mu)?;
    let (x, diag) = pcg(&problem, config, mu);
    Ok(BandImageSet { components: to_images(model, x), config: config.clone(), diagnostics: vec![diag] })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RigidMethod {
    Butterworth,
    Swt,
}

/// Band-split signals used by a rigid baseline.
pub fn rigid_band_signals(sino: &Sinogram, bank: &FilterBank, method: RigidMethod) -> Result<Vec<Sinogram>> {
    match method {
        RigidMethod::Butterworth => bank.bands().iter().map(|f| apply_band(f, sino)).collect(),
        RigidMethod::Swt => {
            let bands = SwtBands::for_edges(bank.edges(), sino.timing().sample_rate)?;
            swt_band_split(sino, &bands)
        }
    }
}

/// Filters the data into bands first and reconstructs each band independently.
pub fn solve_rigid_filter_baseline(
    model: &ForwardModel,
    sino: &Sinogram,
    bank: &FilterBank,
    config: &ReconConfig,
    method: RigidMethod,
) -> Result<BandImageSet> {
    config.validate()?;
    let lambda = config.lambda_for(model);
    let cfg = ReconConfig { lambda: Some(lambda), ..config.clone() };
    let mut components = Vec::with_capacity(bank.len());
    let mut diagnostics = Vec::with_capacity(bank.len());
    for band in rigid_band_signals(sino, bank, method)? {
        let mut set = solve_mb_detailed(model, &band, &cfg)?;
        components.push(set.components.remove(0));
        diagnostics.append(&mut set.diagnostics);
    }
    Ok(BandImageSet { components, config: config.clone(), diagnostics })
}
