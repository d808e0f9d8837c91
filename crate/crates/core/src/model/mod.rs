//! Discretised acoustic forward operator.
//!
//! The recorded pressure at detector `r` is the time derivative of the
//! spherical-mean integral of the absorption map,
//! `p(r, t) ∝ d/dt Q(r, t)` with `Q(r, t) = ∫ x(r') δ(t - |r - r'|/c) / |r - r'| dr'`.
//! In the plane the integral reduces to `c ∫ x(r + c t (cos φ, sin φ)) dφ`, so a
//! row of [`ForwardModel`] is built by sampling circular arcs through the
//! bilinear interpolant of the image and differencing the arc integrals of the
//! neighbouring samples in time:
//!
//! `row(d, k) · x = (Q(d, t_{k+1}) - Q(d, t_{k-1})) · fs / 2`.
//!
//! The constant `Γ / (4π c²)` and the factor `c` are folded into arbitrary
//! units. Values are stored as `f32`; every product is accumulated in `f64`.

mod cache;
mod data;
mod eir;

pub use cache::{read_model_cache, write_model_cache, MODEL_CACHE_VERSION};
pub use data::{Image, Sinogram};
pub use eir::{convolve_eir, synthetic_eir};

pub(crate) use data::{axpy, dot, norm2};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{box_distance_range, DetectorArray, ImagingGrid, Point2, Timing};
use crate::par;

/// Default number of arc quadrature points per pixel width.
pub const DEFAULT_ARC_DENSITY: f64 = 6.0;

/// Upper bound on detectors merged into one partial image during the adjoint.
const ADJOINT_BLOCKS: usize = 16;

/// Images handled together by one pass over the matrix.
const BATCH: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelOptions {
    /// Arc quadrature points per pixel width (at least 1).
    pub arc_density: f64,
}

impl Default for ModelOptions {
    fn default() -> Self {
        ModelOptions { arc_density: DEFAULT_ARC_DENSITY }
    }
}

/// Sparse `(n_detectors * n_samples) × n_pixels` operator in CSR layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardModel {
    grid: ImagingGrid,
    array: DetectorArray,
    timing: Timing,
    options: ModelOptions,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f32>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelStats {
    pub rows: usize,
    pub cols: usize,
    pub nnz: usize,
    pub max_row_nnz: usize,
    pub memory_bytes: usize,
}

impl ForwardModel {
    pub fn grid(&self) -> &ImagingGrid {
        &self.grid
    }

    pub fn array(&self) -> &DetectorArray {
        &self.array
    }

    pub fn timing(&self) -> &Timing {
        &self.timing
    }

    pub fn options(&self) -> ModelOptions {
        self.options
    }

    pub fn n_rows(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn n_cols(&self) -> usize {
        self.grid.n_pixels()
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_indices(&self) -> &[u32] {
        &self.cols
    }

    pub fn values(&self) -> &[f32] {
        &self.vals
    }

    /// Column indices and weights of row `(d, k)`.
    pub fn row(&self, d: usize, k: usize) -> (&[u32], &[f32]) {
        let r = d * self.timing.n_samples + k;
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        (&self.cols[a..b], &self.vals[a..b])
    }

    pub fn stats(&self) -> ModelStats {
        let max_row_nnz = self.row_ptr.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(0);
        ModelStats {
            rows: self.n_rows(),
            cols: self.n_cols(),
            nnz: self.nnz(),
            max_row_nnz,
            memory_bytes: self.row_ptr.len() * std::mem::size_of::<usize>()
                + self.cols.len() * std::mem::size_of::<u32>()
                + self.vals.len() * std::mem::size_of::<f32>(),
        }
    }

    /// Stable 64-bit digest of everything that determines the matrix.
    pub fn geometry_hash(&self) -> u64 {
        geometry_hash(&self.grid, &self.array, &self.timing, &self.options)
    }

    pub fn zero_sinogram(&self) -> Sinogram {
        Sinogram::zeros(self.array.len(), self.timing)
    }

    pub fn zero_image(&self) -> Image {
        Image::zeros(self.grid)
    }

    /// `p = M x`.
    pub fn apply(&self, image: &Image) -> Result<Sinogram> {
        if image.grid() != &self.grid {
            return Err(Error::shape("image grid does not match the model grid"));
        }
        let mut out = self.zero_sinogram();
        self.apply_into(image.values(), out.data_mut());
        Ok(out)
    }

    /// `x = Mᵀ p`. The result is an unconstrained back-projection and may be negative.
    pub fn apply_adjoint(&self, sino: &Sinogram) -> Result<Image> {
        if sino.n_detectors() != self.array.len() || sino.n_samples() != self.timing.n_samples {
            return Err(Error::shape(format!(
                "sinogram {}x{} does not match model {}x{}",
                sino.n_detectors(),
                sino.n_samples(),
                self.array.len(),
                self.timing.n_samples
            )));
        }
        let mut out = self.zero_image();
        self.adjoint_into(sino.data(), out.values_mut());
        Ok(out)
    }

    /// Slice-level `y = M x`; lengths must match the model.
    pub(crate) fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n_cols());
        debug_assert_eq!(y.len(), self.n_rows());
        let ns = self.timing.n_samples;
        par::for_each_chunk_mut(y, ns, |d, yd| {
            let base = d * ns;
            for (k, yk) in yd.iter_mut().enumerate() {
                let (a, b) = (self.row_ptr[base + k], self.row_ptr[base + k + 1]);
                let mut acc = 0.0;
                for (c, v) in self.cols[a..b].iter().zip(&self.vals[a..b]) {
                    acc += *v as f64 * x[*c as usize];
                }
                *yk = acc;
            }
        });
    }

    /// Slice-level `x = Mᵀ y`. Detectors are split into a fixed number of
    /// blocks whose partial images are summed in block order, so the result
    /// does not depend on the number of workers.
    pub(crate) fn adjoint_into(&self, y: &[f64], x: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n_cols());
        debug_assert_eq!(y.len(), self.n_rows());
        let nd = self.array.len();
        let ns = self.timing.n_samples;
        let blocks = nd.clamp(1, ADJOINT_BLOCKS);
        let per = nd.div_ceil(blocks);
        let npix = self.n_cols();
        let partials = par::map_range(blocks, |b| {
            let mut part = vec![0.0; npix];
            let rows = (b * per * ns).min(nd * ns)..((b + 1) * per * ns).min(nd * ns);
            for r in rows {
                let yr = y[r];
                if yr == 0.0 {
                    continue;
                }
                let (a, e) = (self.row_ptr[r], self.row_ptr[r + 1]);
                for (c, v) in self.cols[a..e].iter().zip(&self.vals[a..e]) {
                    part[*c as usize] += *v as f64 * yr;
                }
            }
            part
        });
        x.iter_mut().for_each(|v| *v = 0.0);
        for part in &partials {
            axpy(1.0, part, x);
        }
    }

    /// `M x_j` for several images with one pass over the matrix per group of
    /// `BATCH`. Each output is bitwise equal to `apply_into` of its input.
    pub(crate) fn apply_many(&self, xs: &[&[f64]]) -> Vec<Vec<f64>> {
        let (rows, npix) = (self.n_rows(), self.n_cols());
        let mut out = Vec::with_capacity(xs.len());
        for group in xs.chunks(BATCH) {
            let n = group.len();
            if n == 1 {
                let mut y = vec![0.0; rows];
                self.apply_into(group[0], &mut y);
                out.push(y);
                continue;
            }
            let mut xi = vec![0.0; npix * n];
            for (j, x) in group.iter().enumerate() {
                debug_assert_eq!(x.len(), npix);
                for (c, &v) in x.iter().enumerate() {
                    xi[c * n + j] = v;
                }
            }
            let mut yi = vec![0.0; rows * n];
            match n {
                2 => self.apply_group::<2>(&xi, &mut yi),
                3 => self.apply_group::<3>(&xi, &mut yi),
                4 => self.apply_group::<4>(&xi, &mut yi),
                5 => self.apply_group::<5>(&xi, &mut yi),
                6 => self.apply_group::<6>(&xi, &mut yi),
                7 => self.apply_group::<7>(&xi, &mut yi),
                _ => self.apply_group::<BATCH>(&xi, &mut yi),
            }
            out.extend((0..n).map(|j| (0..rows).map(|r| yi[r * n + j]).collect::<Vec<f64>>()));
        }
        out
    }

    /// `Mᵀ y_j` for several sinograms with one pass over the matrix per group
    /// of `BATCH`. Each output is bitwise equal to `adjoint_into` of its input.
    pub(crate) fn adjoint_many(&self, ys: &[&[f64]]) -> Vec<Vec<f64>> {
        let (rows, npix) = (self.n_rows(), self.n_cols());
        let nd = self.array.len();
        let blocks = nd.clamp(1, ADJOINT_BLOCKS);
        let per = nd.div_ceil(blocks);
        let mut out = Vec::with_capacity(ys.len());
        for group in ys.chunks(BATCH) {
            let n = group.len();
            if n == 1 {
                let mut x = vec![0.0; npix];
                self.adjoint_into(group[0], &mut x);
                out.push(x);
                continue;
            }
            debug_assert!(group.iter().all(|y| y.len() == rows));
            let partials = match n {
                2 => self.adjoint_group::<2>(group, blocks, per),
                3 => self.adjoint_group::<3>(group, blocks, per),
                4 => self.adjoint_group::<4>(group, blocks, per),
                5 => self.adjoint_group::<5>(group, blocks, per),
                6 => self.adjoint_group::<6>(group, blocks, per),
                7 => self.adjoint_group::<7>(group, blocks, per),
                _ => self.adjoint_group::<BATCH>(group, blocks, per),
            };
            let mut xi = vec![0.0; npix * n];
            for part in &partials {
                axpy(1.0, part, &mut xi);
            }
            out.extend((0..n).map(|j| (0..npix).map(|c| xi[c * n + j]).collect::<Vec<f64>>()));
        }
        out
    }

    /// Pixel-major `xi` (N values per pixel) to row-major `yi`.
    fn apply_group<const N: usize>(&self, xi: &[f64], yi: &mut [f64]) {
        let ns = self.timing.n_samples;
        par::for_each_chunk_mut(yi, ns * N, |d, yd| {
            let base = d * ns;
            for (k, yk) in yd.chunks_exact_mut(N).enumerate() {
                let (a, b) = (self.row_ptr[base + k], self.row_ptr[base + k + 1]);
                let mut acc = [0.0f64; N];
                for (c, v) in self.cols[a..b].iter().zip(&self.vals[a..b]) {
                    let v = *v as f64;
                    let c = *c as usize * N;
                    let xc: &[f64; N] = xi[c..c + N].try_into().unwrap();
                    for i in 0..N {
                        acc[i] += v * xc[i];
                    }
                }
                yk.copy_from_slice(&acc);
            }
        });
    }

    /// Per-block pixel-major partial images of `Mᵀ y_j` for `N` sinograms.
    fn adjoint_group<const N: usize>(&self, group: &[&[f64]], blocks: usize, per: usize) -> Vec<Vec<f64>> {
        let rows = self.n_rows();
        let (npix, ns) = (self.n_cols(), self.timing.n_samples);
        par::map_range(blocks, |b| {
            let mut part = vec![0.0; npix * N];
            let range = (b * per * ns).min(rows)..((b + 1) * per * ns).min(rows);
            for r in range {
                let mut yr = [0.0f64; N];
                for (o, y) in yr.iter_mut().zip(group) {
                    *o = y[r];
                }
                if yr.iter().all(|&v| v == 0.0) {
                    continue;
                }
                let (a, e) = (self.row_ptr[r], self.row_ptr[r + 1]);
                for (c, v) in self.cols[a..e].iter().zip(&self.vals[a..e]) {
                    let v = *v as f64;
                    let c = *c as usize * N;
                    let pc: &mut [f64; N] = (&mut part[c..c + N]).try_into().unwrap();
                    // adding v·0 leaves a partial sum that started at +0 unchanged
                    for i in 0..N {
                        pc[i] += v * yr[i];
                    }
                }
            }
            part
        })
    }

    /// Dense copy of the matrix (rows × cols), for small test problems only.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.n_cols()]; self.n_rows()];
        for (r, row) in out.iter_mut().enumerate() {
            for i in self.row_ptr[r]..self.row_ptr[r + 1] {
                row[self.cols[i] as usize] += self.vals[i] as f64;
            }
        }
        out
    }

    pub(crate) fn from_parts(
        grid: ImagingGrid,
        array: DetectorArray,
        timing: Timing,
        options: ModelOptions,
        row_ptr: Vec<usize>,
        cols: Vec<u32>,
        vals: Vec<f32>,
    ) -> Result<Self> {
        let rows = array.len() * timing.n_samples;
        if row_ptr.len() != rows + 1 || row_ptr.first() != Some(&0) || row_ptr[rows] != cols.len() {
            return Err(Error::Format("inconsistent CSR row pointers".into()));
        }
        if cols.len() != vals.len() {
            return Err(Error::Format("CSR column and value arrays differ in length".into()));
        }
        if row_ptr.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Format("CSR row pointers are not monotone".into()));
        }
        let npix = grid.n_pixels() as u32;
        if cols.iter().any(|&c| c >= npix) {
            return Err(Error::Format("CSR column index out of range".into()));
        }
        Ok(ForwardModel { grid, array, timing, options, row_ptr, cols, vals })
    }
}

pub(crate) fn geometry_hash(
    grid: &ImagingGrid,
    array: &DetectorArray,
    timing: &Timing,
    options: &ModelOptions,
) -> u64 {
    let mut h = Sha256::new();
    h.update(b"fbmb-model-v1");
    h.update((grid.nx() as u64).to_le_bytes());
    h.update((grid.ny() as u64).to_le_bytes());
    h.update(grid.pixel_size().to_le_bytes());
    h.update(grid.origin().x.to_le_bytes());
    h.update(grid.origin().y.to_le_bytes());
    h.update((array.len() as u64).to_le_bytes());
    for p in array.positions() {
        h.update(p.x.to_le_bytes());
        h.update(p.y.to_le_bytes());
    }
    h.update((timing.n_samples as u64).to_le_bytes());
    h.update(timing.sample_rate.to_le_bytes());
    h.update(timing.t0.to_le_bytes());
    h.update(timing.speed_of_sound.to_le_bytes());
    h.update(options.arc_density.to_le_bytes());
    let digest = h.finalize();
    let mut b = [0u8; 8];
    b.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(b)
}

/// Builds the model with default options.
pub fn build_model(grid: ImagingGrid, array: DetectorArray, timing: Timing) -> Result<ForwardModel> {
    build_model_with(grid, array, timing, ModelOptions::default())
}

pub fn build_model_with(
    grid: ImagingGrid,
    array: DetectorArray,
    timing: Timing,
    options: ModelOptions,
) -> Result<ForwardModel> {
    timing.validate()?;
    if !(options.arc_density >= 1.0 && options.arc_density.is_finite()) {
        return Err(Error::param(format!("arc density must be >= 1, got {}", options.arc_density)));
    }
    if array.is_empty() {
        return Err(Error::param("detector array is empty"));
    }
    if grid.n_pixels() > u32::MAX as usize {
        return Err(Error::param("grid too large for 32-bit column indices"));
    }
    check_coverage(&grid, &array, &timing)?;

    let blocks = par::map_range(array.len(), |d| build_detector_rows(&grid, array.positions()[d], &timing, &options));

    let rows = array.len() * timing.n_samples;
    let nnz: usize = blocks.iter().map(|b| b.cols.len()).sum();
    let mut row_ptr = Vec::with_capacity(rows + 1);
    let mut cols = Vec::with_capacity(nnz);
    let mut vals = Vec::with_capacity(nnz);
    row_ptr.push(0);
    for b in blocks {
        let base = cols.len();
        row_ptr.extend(b.row_end.iter().map(|e| base + e));
        cols.extend_from_slice(&b.cols);
        vals.extend_from_slice(&b.vals);
    }
    let model = ForwardModel { grid, array, timing, options, row_ptr, cols, vals };
    let s = model.stats();
    log::info!(
        "forward model: {} x {} with {} non-zeros (max {} per row), {:.1} MiB",
        s.rows,
        s.cols,
        s.nnz,
        s.max_row_nnz,
        s.memory_bytes as f64 / (1024.0 * 1024.0)
    );
    Ok(model)
}

/// Every pixel/detector travel time, including the one-pixel basis support and
/// the one-sample difference stencil, must fall inside the window.
fn check_coverage(grid: &ImagingGrid, array: &DetectorArray, timing: &Timing) -> Result<()> {
    let (lo, hi) = grid.support_box();
    let c = timing.speed_of_sound;
    let first = c * timing.t0;
    let last = c * timing.time(timing.n_samples.saturating_sub(1));
    for (d, &p) in array.positions().iter().enumerate() {
        if p.x > lo.x && p.x < hi.x && p.y > lo.y && p.y < hi.y {
            return Err(Error::Build(format!("detector {d} lies inside the imaging grid")));
        }
        let (near, far) = box_distance_range(lo, hi, p);
        if near <= first || far >= last {
            let (pix, dist) = extreme_pixel(grid, p, near <= first);
            return Err(Error::Build(format!(
                "timing window [{:.4e}, {:.4e}] s does not cover detector {d} / pixel ({}, {}): travel time {:.4e} s",
                timing.t0,
                timing.time(timing.n_samples.saturating_sub(1)),
                pix.0,
                pix.1,
                dist / c
            )));
        }
    }
    Ok(())
}

fn extreme_pixel(grid: &ImagingGrid, p: Point2, nearest: bool) -> ((usize, usize), f64) {
    let mut best = ((0, 0), if nearest { f64::INFINITY } else { 0.0 });
    for j in 0..grid.ny() {
        for i in 0..grid.nx() {
            let dist = grid.position(i, j).distance(p);
            if (nearest && dist < best.1) || (!nearest && dist > best.1) {
                best = ((i, j), dist);
            }
        }
    }
    best
}

struct DetectorRows {
    /// Exclusive end offset of each row, relative to this block.
    row_end: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f32>,
}

/// Accumulates arc integrals into a dense scratch image and hands back the
/// touched entries in column order.
struct ArcIntegrator<'a> {
    grid: &'a ImagingGrid,
    detector: Point2,
    density: f64,
    phi_lo: f64,
    phi_hi: f64,
    near: f64,
    far: f64,
    scratch: Vec<f64>,
    touched: Vec<u32>,
}

impl<'a> ArcIntegrator<'a> {
    fn new(grid: &'a ImagingGrid, detector: Point2, density: f64) -> Self {
        let (lo, hi) = grid.support_box();
        let (near, far) = box_distance_range(lo, hi, detector);
        let mid = Point2::new(0.5 * (lo.x + hi.x), 0.5 * (lo.y + hi.y));
        let axis = (mid.y - detector.y).atan2(mid.x - detector.x);
        let mut rel_lo = f64::INFINITY;
        let mut rel_hi = f64::NEG_INFINITY;
        for corner in [lo, hi, Point2::new(lo.x, hi.y), Point2::new(hi.x, lo.y)] {
            let a = (corner.y - detector.y).atan2(corner.x - detector.x) - axis;
            let a = (a + std::f64::consts::PI).rem_euclid(2.0 * std::f64::consts::PI) - std::f64::consts::PI;
            rel_lo = rel_lo.min(a);
            rel_hi = rel_hi.max(a);
        }
        ArcIntegrator {
            grid,
            detector,
            density,
            phi_lo: axis + rel_lo,
            phi_hi: axis + rel_hi,
            near,
            far,
            scratch: vec![0.0; grid.n_pixels()],
            touched: Vec::new(),
        }
    }

    /// Sparse `Q(d, t)` for the arc of radius `rho`, sorted by column.
    fn integrate(&mut self, rho: f64, out: &mut Vec<(u32, f64)>) {
        out.clear();
        if rho <= self.near || rho >= self.far {
            return;
        }
        let h = self.grid.pixel_size();
        let nx = self.grid.nx();
        let ny = self.grid.ny();
        let corner = self.grid.corner();
        let span = self.phi_hi - self.phi_lo;
        let steps = ((span * rho * self.density / h).ceil() as usize).max(1);
        let dphi = span / steps as f64;
        let (rs, rc) = dphi.sin_cos();
        let mut cs = (0.0, 0.0);
        for m in 0..steps {
            if m % 256 == 0 {
                let a = self.phi_lo + (m as f64 + 0.5) * dphi;
                let (s, c) = a.sin_cos();
                cs = (c, s);
            }
            let u = (self.detector.x + rho * cs.0 - corner.x) / h;
            let v = (self.detector.y + rho * cs.1 - corner.y) / h;
            cs = (cs.0 * rc - cs.1 * rs, cs.0 * rs + cs.1 * rc);
            if u <= -1.0 || v <= -1.0 || u >= nx as f64 || v >= ny as f64 {
                continue;
            }
            let i0 = u.floor();
            let j0 = v.floor();
            let fu = u - i0;
            let fv = v - j0;
            let i0 = i0 as isize;
            let j0 = j0 as isize;
            for (di, wu) in [(0isize, 1.0 - fu), (1, fu)] {
                let i = i0 + di;
                if i < 0 || i >= nx as isize || wu == 0.0 {
                    continue;
                }
                for (dj, wv) in [(0isize, 1.0 - fv), (1, fv)] {
                    let j = j0 + dj;
                    if j < 0 || j >= ny as isize || wv == 0.0 {
                        continue;
                    }
                    let idx = j as usize * nx + i as usize;
                    if self.scratch[idx] == 0.0 {
                        self.touched.push(idx as u32);
                    }
                    self.scratch[idx] += wu * wv * dphi;
                }
            }
        }
        self.touched.sort_unstable();
        for &idx in &self.touched {
            out.push((idx, self.scratch[idx as usize]));
            self.scratch[idx as usize] = 0.0;
        }
        self.touched.clear();
    }
}

fn build_detector_rows(grid: &ImagingGrid, detector: Point2, timing: &Timing, options: &ModelOptions) -> DetectorRows {
    let ns = timing.n_samples;
    let c = timing.speed_of_sound;
    let half_fs = 0.5 * timing.sample_rate;
    let mut arc = ArcIntegrator::new(grid, detector, options.arc_density);
    // q[0] = Q(t_{k-1}), q[1] = Q(t_k), q[2] = Q(t_{k+1})
    let mut q: [Vec<(u32, f64)>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    arc.integrate(c * (timing.t0 - timing.dt()), &mut q[0]);
    arc.integrate(c * timing.t0, &mut q[1]);
    let mut out = DetectorRows { row_end: Vec::with_capacity(ns), cols: Vec::new(), vals: Vec::new() };
    for k in 0..ns {
        arc.integrate(c * timing.time(k + 1), &mut q[2]);
        let (prev, next) = (&q[0], &q[2]);
        let (mut a, mut b) = (0, 0);
        while a < prev.len() || b < next.len() {
            let (col, v) = match (prev.get(a), next.get(b)) {
                (Some(&(ca, va)), Some(&(cb, vb))) if ca == cb => {
                    a += 1;
                    b += 1;
                    (ca, vb - va)
                }
                (Some(&(ca, va)), Some(&(cb, _))) if ca < cb => {
                    a += 1;
                    (ca, -va)
                }
                (Some(&(ca, va)), None) => {
                    a += 1;
                    (ca, -va)
                }
                (_, Some(&(cb, vb))) => {
                    b += 1;
                    (cb, vb)
                }
                (None, None) => unreachable!(),
            };
            let w = (v * half_fs) as f32;
            if w != 0.0 {
                out.cols.push(col);
                out.vals.push(w);
            }
        }
        out.row_end.push(out.cols.len());
        q.rotate_left(1);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_grid, make_ring_array};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small() -> ForwardModel {
        let grid = make_grid(12, 10, 0.4e-3, Point2::new(0.3e-3, -0.2e-3)).unwrap();
        let array = make_ring_array(9, 0.02, 270.0, Point2::ORIGIN).unwrap();
        let timing = Timing::covering(&grid, &array, 20e6, 1500.0, None, 3).unwrap();
        build_model(grid, array, timing).unwrap()
    }

    fn random_image(m: &ForwardModel, rng: &mut ChaCha8Rng) -> Image {
        let v = (0..m.n_cols()).map(|_| rng.random_range(-1.0..1.0)).collect();
        Image::from_values(*m.grid(), v).unwrap()
    }

    fn random_sino(m: &ForwardModel, rng: &mut ChaCha8Rng) -> Sinogram {
        let v = (0..m.n_rows()).map(|_| rng.random_range(-1.0..1.0)).collect();
        Sinogram::from_data(m.array().len(), *m.timing(), v).unwrap()
    }

    #[test]
    fn adjoint_matches_explicit_transpose() {
        let m = small();
        let dense = m.to_dense();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let y = random_sino(&m, &mut rng);
        let got = m.apply_adjoint(&y).unwrap();
        for c in 0..m.n_cols() {
            let want: f64 = (0..m.n_rows()).map(|r| dense[r][c] * y.data()[r]).sum();
            assert!((got.values()[c] - want).abs() <= 1e-12 * (1.0 + want.abs()));
        }
    }

    #[test]
    fn batched_operators_match_single_images_bitwise() {
        let m = small();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in [2, 3, 9] {
            let xs: Vec<Image> = (0..n).map(|_| random_image(&m, &mut rng)).collect();
            let mut ys: Vec<Sinogram> = (0..n).map(|_| random_sino(&m, &mut rng)).collect();
            ys[1].data_mut()[..40].iter_mut().for_each(|v| *v = 0.0);
            let xr: Vec<&[f64]> = xs.iter().map(|x| x.values()).collect();
            let yr: Vec<&[f64]> = ys.iter().map(|y| y.data()).collect();
            for (x, out) in xs.iter().zip(m.apply_many(&xr)) {
                assert_eq!(m.apply(x).unwrap().data(), &out[..]);
            }
            for (y, out) in ys.iter().zip(m.adjoint_many(&yr)) {
                assert_eq!(m.apply_adjoint(y).unwrap().values(), &out[..]);
            }
        }
    }

    #[test]
    fn dot_product_identity() {
        let m = small();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let x = random_image(&m, &mut rng);
            let y = random_sino(&m, &mut rng);
            let lhs = m.apply(&x).unwrap().dot(&y);
            let rhs = x.dot(&m.apply_adjoint(&y).unwrap());
            assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(rhs.abs()), "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn zero_in_zero_out() {
        let m = small();
        assert!(m.apply(&m.zero_image()).unwrap().data().iter().all(|&v| v == 0.0));
        assert!(m.apply_adjoint(&m.zero_sinogram()).unwrap().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn apply_is_linear() {
        let m = small();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x1 = random_image(&m, &mut rng);
        let x2 = random_image(&m, &mut rng);
        let mut sum = x1.clone();
        for (a, b) in sum.values_mut().iter_mut().zip(x2.values()) {
            *a += b;
        }
        let lhs = m.apply(&sum).unwrap();
        let mut rhs = m.apply(&x1).unwrap();
        rhs.add_scaled(1.0, &m.apply(&x2).unwrap()).unwrap();
        let scale = lhs.max_abs();
        for (a, b) in lhs.data().iter().zip(rhs.data()) {
            assert!((a - b).abs() < 1e-12 * scale);
        }
    }

    #[test]
    fn row_support_follows_travel_distance() {
        let m = small();
        let t = *m.timing();
        let c = t.speed_of_sound;
        let slack = m.grid().pixel_size() * std::f64::consts::SQRT_2;
        for d in 0..m.array().len() {
            let det = m.array().positions()[d];
            for k in 0..t.n_samples {
                let (cols, _) = m.row(d, k);
                let lo = c * (t.time(k) - t.dt()) - slack;
                let hi = c * (t.time(k) + t.dt()) + slack;
                for &col in cols {
                    let dist = m.grid().position_of_linear(col as usize).distance(det);
                    assert!(dist >= lo && dist <= hi, "row ({d},{k}) col {col} at {dist}");
                }
            }
        }
    }

    #[test]
    fn point_source_is_bipolar_at_arrival() {
        let grid = make_grid(21, 21, 0.2e-3, Point2::ORIGIN).unwrap();
        let array = make_ring_array(4, 0.02, 360.0, Point2::ORIGIN).unwrap();
        let timing = Timing::covering(&grid, &array, 40e6, 1500.0, None, 4).unwrap();
        let m = build_model(grid, array, timing).unwrap();
        let mut x = m.zero_image();
        x.set(13, 8, 1.0);
        let p = m.apply(&x).unwrap();
        let src = grid.position(13, 8);
        for d in 0..4 {
            let trace = p.trace(d);
            let dist = src.distance(m.array().positions()[d]);
            let k_arr = (dist / 1500.0 - timing.t0) * timing.sample_rate;
            let reach = (timing.sample_distance() + grid.pixel_size() * std::f64::consts::SQRT_2)
                / timing.sample_distance();
            let nz: Vec<usize> = (0..trace.len()).filter(|&k| trace[k] != 0.0).collect();
            assert!(!nz.is_empty());
            for &k in &nz {
                assert!((k as f64 - k_arr).abs() <= reach + 1.0, "sample {k}, arrival {k_arr}");
            }
            // positive lobe before arrival, negative after: a single sign change
            let signs: Vec<f64> = nz.iter().map(|&k| trace[k].signum()).collect();
            let changes = signs.windows(2).filter(|w| w[0] != w[1]).count();
            assert_eq!(changes, 1, "trace {d}: {:?}", &trace[nz[0]..=nz[nz.len() - 1]]);
            assert!(signs[0] > 0.0);
        }
    }

    #[test]
    fn adjoint_of_point_source_peaks_at_source() {
        let grid = make_grid(24, 24, 0.25e-3, Point2::ORIGIN).unwrap();
        let array = make_ring_array(64, 0.02, 360.0, Point2::ORIGIN).unwrap();
        let timing = Timing::covering(&grid, &array, 20e6, 1500.0, None, 4).unwrap();
        let m = build_model(grid, array, timing).unwrap();
        let mut x = m.zero_image();
        x.set(7, 15, 1.0);
        let back = m.apply_adjoint(&m.apply(&x).unwrap()).unwrap();
        let (imax, _) = back
            .values()
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .unwrap();
        let (i, j) = (imax % 24, imax / 24);
        assert!((i as isize - 7).abs() <= 2 && (j as isize - 15).abs() <= 2, "peak at ({i},{j})");
    }

    #[test]
    fn shift_toward_detector_advances_arrival() {
        // detector on -y, source moved one pixel toward it
        let grid = make_grid(32, 32, 0.15e-3, Point2::ORIGIN).unwrap();
        let array = make_ring_array(1, 0.03, 360.0, Point2::ORIGIN).unwrap();
        let timing = Timing::covering(&grid, &array, 40e6, 1500.0, None, 4).unwrap();
        let m = build_model(grid, array, timing).unwrap();
        let crossing = |trace: &[f64]| {
            let k = (1..trace.len()).find(|&k| trace[k - 1] > 0.0 && trace[k] <= 0.0).unwrap();
            (k - 1) as f64 + trace[k - 1] / (trace[k - 1] - trace[k])
        };
        let mut x = m.zero_image();
        x.set(16, 16, 1.0);
        let a = crossing(m.apply(&x).unwrap().trace(0));
        let mut x = m.zero_image();
        x.set(16, 15, 1.0);
        let b = crossing(m.apply(&x).unwrap().trace(0));
        let expected = grid.pixel_size() / timing.sample_distance();
        assert!(((a - b) - expected).abs() <= 1.0, "shift {} vs {}", a - b, expected);
    }

    #[test]
    fn short_window_names_the_uncovered_pair() {
        let grid = make_grid(16, 16, 0.2e-3, Point2::ORIGIN).unwrap();
        let array = make_ring_array(8, 0.02, 360.0, Point2::ORIGIN).unwrap();
        let timing = Timing::new(64, 20e6, 0.02 / 1500.0, 1500.0).unwrap();
        let err = build_model(grid, array, timing).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("detector 0") && msg.contains("pixel"), "{msg}");
    }

    #[test]
    fn detector_inside_grid_is_rejected() {
        let grid = make_grid(16, 16, 1e-3, Point2::ORIGIN).unwrap();
        let array = make_ring_array(8, 0.002, 360.0, Point2::ORIGIN).unwrap();
        let timing = Timing::new(512, 20e6, 0.0, 1500.0).unwrap();
        assert!(matches!(build_model(grid, array, timing), Err(Error::Build(_))));
    }

    #[test]
    fn geometry_hash_tracks_inputs() {
        let m = small();
        let mut t2 = *m.timing();
        t2.speed_of_sound = 1510.0;
        let h2 = geometry_hash(m.grid(), m.array(), &t2, &m.options());
        assert_ne!(m.geometry_hash(), h2);
        assert_eq!(m.geometry_hash(), small().geometry_hash());
    }
}
