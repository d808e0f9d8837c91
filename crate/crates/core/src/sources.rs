//! Synthetic phantoms and closed-form sphere signals.
//!
//! A uniformly heated sphere of radius `R` at in-plane distance `d` from a
//! point detector emits the N-shaped pulse
//!
//! ```text
//! s(t) = A (d - c t) / (2 d)     for |d - c t| <= R,   0 otherwise,
//! ```
//!
//! with `A = 4πc·a` for absorbed energy density `a`. This normalisation is the
//! one the 2D forward model produces when a sphere is represented by its
//! projected thickness `2a·sqrt(R² - ρ²)`, so simulated data and model
//! predictions share units. Samples are the central difference of the exact
//! time primitive over `t_k ± Δt`, the same discretisation the model rows use,
//! which makes every simulated trace sum to zero exactly.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{DetectorArray, ImagingGrid, Point2, Timing};
use crate::model::{Image, Sinogram};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sphere {
    pub center: Point2,
    pub radius: f64,
    pub amplitude: f64,
}

impl Sphere {
    pub fn new(center: Point2, radius: f64, amplitude: f64) -> Self {
        Sphere { center, radius, amplitude }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SpherePhantom {
    pub spheres: Vec<Sphere>,
}

impl SpherePhantom {
    pub fn new(spheres: Vec<Sphere>) -> Result<Self> {
        let p = SpherePhantom { spheres };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, s) in self.spheres.iter().enumerate() {
            if !(s.radius > 0.0) || !s.amplitude.is_finite() {
                return Err(Error::param(format!("sphere {i} needs a positive radius and finite amplitude")));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.spheres.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spheres.is_empty()
    }

    /// Projected-thickness image `Σ a·2·sqrt(R² - ρ²)`, averaged over
    /// `supersample²` points per pixel.
    pub fn rasterize(&self, grid: &ImagingGrid, supersample: usize) -> Image {
        let ss = supersample.max(1);
        let h = grid.pixel_size();
        let offsets: Vec<f64> = (0..ss).map(|s| ((s as f64 + 0.5) / ss as f64 - 0.5) * h).collect();
        let norm = 1.0 / (ss * ss) as f64;
        let mut img = Image::zeros(*grid);
        for s in &self.spheres {
            let r2 = s.radius * s.radius;
            let reach = s.radius + h;
            let (i0, i1, j0, j1) = pixel_window(grid, s.center, reach);
            for j in j0..j1 {
                for i in i0..i1 {
                    let p = grid.position(i, j);
                    let mut acc = 0.0;
                    for &oy in &offsets {
                        for &ox in &offsets {
                            let dx = p.x + ox - s.center.x;
                            let dy = p.y + oy - s.center.y;
                            let q = r2 - dx * dx - dy * dy;
                            if q > 0.0 {
                                acc += 2.0 * q.sqrt();
                            }
                        }
                    }
                    if acc > 0.0 {
                        let k = grid.linear_index(i, j);
                        img.values_mut()[k] += s.amplitude * acc * norm;
                    }
                }
            }
        }
        img
    }
}

/// Index range `[i0, i1) × [j0, j1)` of pixels within `reach` of `c`.
fn pixel_window(grid: &ImagingGrid, c: Point2, reach: f64) -> (usize, usize, usize, usize) {
    let h = grid.pixel_size();
    let o = grid.corner();
    let lo = |v: f64, o: f64| (((v - reach - o) / h).floor().max(0.0)) as usize;
    let hi = |v: f64, o: f64, n: usize| ((((v + reach - o) / h).ceil() + 1.0).max(0.0) as usize).min(n);
    (lo(c.x, o.x), hi(c.x, o.x, grid.nx()), lo(c.y, o.y), hi(c.y, o.y, grid.ny()))
}

/// Time primitive of the unit-density N-shape, `∫_{-∞}^t s`.
fn n_shape_primitive(radius: f64, distance: f64, c: f64, t: f64) -> f64 {
    let u = distance - c * t;
    if u.abs() >= radius {
        return 0.0;
    }
    let k = 2.0 * std::f64::consts::PI * c / distance;
    k * (radius * radius - u * u) / (2.0 * c)
}

/// Exact value of the unit-density N-shape at time `t`.
pub fn n_shape(radius: f64, distance: f64, speed_of_sound: f64, t: f64) -> f64 {
    let u = distance - speed_of_sound * t;
    if u.abs() > radius {
        0.0
    } else {
        2.0 * std::f64::consts::PI * speed_of_sound * u / distance
    }
}

/// Sampled pulse of a unit-density sphere (see the module docs).
pub fn sphere_signal(radius: f64, distance: f64, timing: &Timing) -> Result<Vec<f64>> {
    let mut out = vec![0.0; timing.n_samples];
    add_sphere_signal(&mut out, radius, distance, 1.0, timing)?;
    Ok(out)
}

fn add_sphere_signal(out: &mut [f64], radius: f64, distance: f64, amplitude: f64, timing: &Timing) -> Result<()> {
    if !(radius > 0.0) {
        return Err(Error::param("sphere radius must be positive"));
    }
    if distance <= radius {
        return Err(Error::Domain(format!(
            "detector at {distance:.4e} m lies inside a sphere of radius {radius:.4e} m"
        )));
    }
    let c = timing.speed_of_sound;
    let dt = timing.dt();
    let (t_first, t_last) = ((distance - radius) / c, (distance + radius) / c);
    if t_first < timing.t0 || t_last > timing.time(timing.n_samples.saturating_sub(2)) {
        return Err(Error::Domain(format!(
            "time window [{:.4e}, {:.4e}] s does not cover the pulse [{t_first:.4e}, {t_last:.4e}] s",
            timing.t0,
            timing.t_end()
        )));
    }
    let k0 = (((t_first - timing.t0) / dt).floor() as usize).saturating_sub(1);
    let k1 = (((t_last - timing.t0) / dt).ceil() as usize + 2).min(out.len());
    let scale = amplitude / (2.0 * dt);
    for (k, o) in out.iter_mut().enumerate().take(k1).skip(k0) {
        let t = timing.time(k);
        let p1 = n_shape_primitive(radius, distance, c, t + dt);
        let p0 = n_shape_primitive(radius, distance, c, t - dt);
        *o += scale * (p1 - p0);
    }
    Ok(())
}

/// Per-detector superposition of sphere pulses.
pub fn simulate_sinogram(phantom: &SpherePhantom, array: &DetectorArray, timing: &Timing) -> Result<Sinogram> {
    phantom.validate()?;
    timing.validate()?;
    let traces = par::map_range(array.len(), |d| -> Result<Vec<f64>> {
        let r = array.positions()[d];
        let mut trace = vec![0.0; timing.n_samples];
        for s in &phantom.spheres {
            add_sphere_signal(&mut trace, s.radius, r.distance(s.center), s.amplitude, timing)?;
        }
        Ok(trace)
    });
    let mut data = Vec::with_capacity(array.len() * timing.n_samples);
    for t in traces {
        data.extend(t?);
    }
    Sinogram::from_data(array.len(), *timing, data)
}

/// Adds white Gaussian noise at `snr_db` relative to the RMS of the data.
pub fn add_white_noise(sino: &mut Sinogram, snr_db: f64, seed: u64) -> Result<()> {
    if !snr_db.is_finite() {
        return Err(Error::param("noise SNR must be finite"));
    }
    let n = sino.data().len() as f64;
    let rms = (sino.norm() * sino.norm() / n).sqrt();
    if rms == 0.0 {
        return Ok(());
    }
    let sigma = rms / 10f64.powf(snr_db / 20.0);
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::param(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for v in sino.data_mut() {
        *v += normal.sample(&mut rng);
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BackgroundDisc {
    pub center: Point2,
    pub diameter: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VesselSegment {
    pub points: Vec<Point2>,
    pub diameter: f64,
    pub amplitude: f64,
}

impl VesselSegment {
    pub fn length(&self) -> f64 {
        self.points.windows(2).map(|w| w[0].distance(w[1])).sum()
    }

    fn distance_to(&self, p: Point2) -> f64 {
        if self.points.len() == 1 {
            return p.distance(self.points[0]);
        }
        self.points
            .windows(2)
            .map(|w| point_segment_distance(p, w[0], w[1]))
            .fold(f64::INFINITY, f64::min)
    }
}

fn point_segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let ab = b - a;
    let len2 = ab.x * ab.x + ab.y * ab.y;
    if len2 == 0.0 {
        return p.distance(a);
    }
    let ap = p - a;
    let s = ((ap.x * ab.x + ap.y * ab.y) / len2).clamp(0.0, 1.0);
    p.distance(a + ab * s)
}

/// Vessel network embedded in a weaker background disc.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VesselPhantomSpec {
    pub background: Option<BackgroundDisc>,
    pub vessels: Vec<VesselSegment>,
}

/// Vessel diameters per branching generation, root first.
pub const VESSEL_DIAMETERS: [f64; 6] = [1.3e-3, 0.9e-3, 0.62e-3, 0.43e-3, 0.3e-3, 0.24e-3];
const VESSEL_LENGTHS: [f64; 6] = [4.5e-3, 3.4e-3, 2.5e-3, 1.9e-3, 1.4e-3, 1.0e-3];

impl VesselPhantomSpec {
    /// Deterministic branching tree in a 17 mm disc; vessels absorb ten
    /// times more than the background.
    pub fn reference(seed: u64) -> Self {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let limit = 7.8e-3;
        let mut vessels = Vec::new();
        // (start, heading, generation)
        let mut stack = vec![(Point2::new(0.0, -6.8e-3), std::f64::consts::FRAC_PI_2, 0usize)];
        while let Some((start, heading, g)) = stack.pop() {
            let len = VESSEL_LENGTHS[g] * rng.random_range(0.85..1.15);
            let bend = rng.random_range(-0.25..0.25);
            let mid_dir = heading + 0.5 * bend;
            let mid = start + Point2::new(mid_dir.cos(), mid_dir.sin()) * (0.5 * len);
            let end_dir = heading + bend;
            let end = mid + Point2::new(end_dir.cos(), end_dir.sin()) * (0.5 * len);
            if end.norm() > limit || mid.norm() > limit {
                continue;
            }
            vessels.push(VesselSegment { points: vec![start, mid, end], diameter: VESSEL_DIAMETERS[g], amplitude: 1.0 });
            if g + 1 < VESSEL_DIAMETERS.len() {
                let spread = rng.random_range(0.35..0.6);
                stack.push((end, end_dir + spread, g + 1));
                stack.push((end, end_dir - spread, g + 1));
            }
        }
        VesselPhantomSpec {
            background: Some(BackgroundDisc { center: Point2::ORIGIN, diameter: 17e-3, amplitude: 0.1 }),
            vessels,
        }
    }

    /// Vessel-to-background absorption ratio, if both are present.
    pub fn contrast_ratio(&self) -> Option<f64> {
        let bg = self.background?;
        let v = self.vessels.first()?;
        Some(v.amplitude / bg.amplitude)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(bg) = self.background {
            if !(bg.diameter > 0.0) {
                return Err(Error::param("background disc diameter must be positive"));
            }
        }
        for (i, v) in self.vessels.iter().enumerate() {
            if v.points.is_empty() || !(v.diameter > 0.0) {
                return Err(Error::param(format!("vessel {i} needs points and a positive diameter")));
            }
        }
        Ok(())
    }

    /// Flat rasterisation at pixel centres, vessels drawn over the background.
    pub fn render(&self, grid: &ImagingGrid) -> Result<Image> {
        self.validate()?;
        let (lo, hi) = grid.support_box();
        let h = grid.pixel_size();
        let inside = |p: Point2, r: f64| {
            p.x - r >= lo.x + h && p.x + r <= hi.x - h && p.y - r >= lo.y + h && p.y + r <= hi.y - h
        };
        if let Some(bg) = self.background {
            if !inside(bg.center, bg.diameter / 2.0) {
                log::warn!("background disc extends beyond the grid and is clipped");
            }
        }
        if self.vessels.iter().any(|v| v.points.iter().any(|&p| !inside(p, v.diameter / 2.0))) {
            log::warn!("vessel geometry extends beyond the grid and is clipped");
        }
        let mut img = Image::zeros(*grid);
        for j in 0..grid.ny() {
            for i in 0..grid.nx() {
                let p = grid.position(i, j);
                let mut v = 0.0;
                if let Some(bg) = self.background {
                    if p.distance(bg.center) <= bg.diameter / 2.0 {
                        v = bg.amplitude;
                    }
                }
                for seg in &self.vessels {
                    if seg.distance_to(p) <= seg.diameter / 2.0 {
                        v = seg.amplitude;
                    }
                }
                img.set(i, j, v);
            }
        }
        Ok(img)
    }

    /// Sphere decomposition for data generation: the background becomes one
    /// sphere and each vessel a chain of spheres of its radius, spaced a
    /// quarter diameter apart. The chain carries the excess over the
    /// background with the amplitude scaled so the absorbed energy per unit
    /// length equals that of a cylinder.
    pub fn to_spheres(&self) -> Result<SpherePhantom> {
        self.validate()?;
        let mut spheres = Vec::new();
        let bg_amp = self.background.map_or(0.0, |b| b.amplitude);
        if let Some(bg) = self.background {
            if bg.amplitude != 0.0 {
                spheres.push(Sphere::new(bg.center, bg.diameter / 2.0, bg.amplitude));
            }
        }
        for v in &self.vessels {
            let r = v.diameter / 2.0;
            let excess = v.amplitude - bg_amp;
            if excess == 0.0 {
                continue;
            }
            let spacing = r / 2.0;
            let amp = excess * 3.0 * spacing / (4.0 * r);
            for c in resample_polyline(&v.points, spacing) {
                spheres.push(Sphere::new(c, r, amp));
            }
        }
        SpherePhantom::new(spheres)
    }
}

/// Points spaced `step` apart along the polyline, starting at its first vertex.
fn resample_polyline(points: &[Point2], step: f64) -> Vec<Point2> {
    let mut out = vec![points[0]];
    let mut carry = 0.0;
    for w in points.windows(2) {
        let seg = w[0].distance(w[1]);
        if seg == 0.0 {
            continue;
        }
        let dir = (w[1] - w[0]) * (1.0 / seg);
        let mut s = step - carry;
        while s <= seg {
            out.push(w[0] + dir * s);
            s += step;
        }
        carry = seg - (s - step);
    }
    out
}

/// Two-scale phantom: small discs of 0.3–1.1 mm on a ring inside a 16 mm bulk disc.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiscalePhantom {
    pub bulk_diameter: f64,
    pub bulk_amplitude: f64,
    pub feature_diameters: Vec<f64>,
    pub feature_amplitude: f64,
    /// Radius of the ring on which the feature centres are placed.
    pub ring_radius: f64,
}

impl Default for MultiscalePhantom {
    fn default() -> Self {
        MultiscalePhantom {
            bulk_diameter: 16e-3,
            bulk_amplitude: 0.1,
            feature_diameters: vec![0.3e-3, 0.5e-3, 0.7e-3, 0.9e-3, 1.1e-3],
            feature_amplitude: 1.0,
            ring_radius: 4e-3,
        }
    }
}

impl MultiscalePhantom {
    pub fn feature_centers(&self) -> Vec<Point2> {
        let n = self.feature_diameters.len();
        (0..n)
            .map(|k| {
                let a = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                Point2::new(self.ring_radius * a.cos(), self.ring_radius * a.sin())
            })
            .collect()
    }

    fn as_vessel_spec(&self) -> VesselPhantomSpec {
        VesselPhantomSpec {
            background: Some(BackgroundDisc {
                center: Point2::ORIGIN,
                diameter: self.bulk_diameter,
                amplitude: self.bulk_amplitude,
            }),
            vessels: self
                .feature_centers()
                .into_iter()
                .zip(&self.feature_diameters)
                .map(|(c, &d)| VesselSegment { points: vec![c], diameter: d, amplitude: self.feature_amplitude })
                .collect(),
        }
    }

    pub fn render(&self, grid: &ImagingGrid) -> Result<Image> {
        let smallest = self.feature_diameters.iter().copied().fold(f64::INFINITY, f64::min);
        if grid.pixel_size() > smallest / 2.0 {
            log::warn!(
                "pixel size {:.0} um cannot resolve the {:.0} um features",
                grid.pixel_size() * 1e6,
                smallest * 1e6
            );
        }
        self.as_vessel_spec().render(grid)
    }

    pub fn to_spheres(&self) -> Result<SpherePhantom> {
        let mut spheres = Vec::new();
        if self.bulk_amplitude != 0.0 {
            spheres.push(Sphere::new(Point2::ORIGIN, self.bulk_diameter / 2.0, self.bulk_amplitude));
        }
        if self.feature_amplitude != 0.0 {
            for (c, &d) in self.feature_centers().into_iter().zip(&self.feature_diameters) {
                spheres.push(Sphere::new(c, d / 2.0, self.feature_amplitude));
            }
        }
        SpherePhantom::new(spheres)
    }
}

/// Free-standing wrapper around [`MultiscalePhantom::render`] with the default layout.
pub fn multiscale_supplementary_phantom(grid: &ImagingGrid) -> Result<Image> {
    MultiscalePhantom::default().render(grid)
}

pub fn render_vessel_phantom(spec: &VesselPhantomSpec, grid: &ImagingGrid) -> Result<Image> {
    spec.render(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::make_grid;

    fn fine_timing(d: f64, r: f64) -> Timing {
        let fs = 1e9;
        let c = 1500.0;
        let t0 = ((d - r) / c * fs).floor() / fs - 50.0 / fs;
        let n = (((2.0 * r) / c) * fs).ceil() as usize + 100;
        Timing::new(n, fs, t0, c).unwrap()
    }

    #[test]
    fn n_shape_is_zero_mean() {
        let (r, d) = (0.5e-3, 0.03);
        let t = fine_timing(d, r);
        let s = sphere_signal(r, d, &t).unwrap();
        let sum: f64 = s.iter().sum();
        let abs: f64 = s.iter().map(|v| v.abs()).sum();
        assert!(sum.abs() <= 1e-9 * abs);
    }

    #[test]
    fn n_shape_is_positive_then_negative() {
        let (r, d) = (0.3e-3, 0.02);
        let t = fine_timing(d, r);
        let s = sphere_signal(r, d, &t).unwrap();
        let first = s.iter().position(|v| v.abs() > 0.0).unwrap();
        assert!(s[first] > 0.0);
        let last = s.iter().rposition(|v| v.abs() > 0.0).unwrap();
        assert!(s[last] < 0.0);
    }

    #[test]
    fn sampled_pulse_matches_closed_form_inside_support() {
        let (r, d) = (1e-3, 0.025);
        let t = fine_timing(d, r);
        let s = sphere_signal(r, d, &t).unwrap();
        let c = t.speed_of_sound;
        for (k, &v) in s.iter().enumerate() {
            let tk = t.time(k);
            let u = d - c * tk;
            if u.abs() < r - 2.0 * c * t.dt() {
                assert!((v - n_shape(r, d, c, tk)).abs() < 1e-9 * n_shape(r, d, c, (d - r) / c + 1e-12).abs());
            }
        }
    }

    #[test]
    fn detector_inside_sphere_is_rejected() {
        let t = Timing::new(100, 40e6, 0.0, 1500.0).unwrap();
        assert!(matches!(sphere_signal(1e-3, 0.5e-3, &t), Err(Error::Domain(_))));
    }

    #[test]
    fn window_must_cover_the_pulse() {
        let t = Timing::new(16, 40e6, 0.0, 1500.0).unwrap();
        assert!(matches!(sphere_signal(1e-3, 0.02, &t), Err(Error::Domain(_))));
    }

    #[test]
    fn empty_phantom_gives_zero_sinogram() {
        let array = crate::geometry::make_ring_array(8, 0.02, 360.0, Point2::ORIGIN).unwrap();
        let t = Timing::new(64, 40e6, 0.0, 1500.0).unwrap();
        let s = simulate_sinogram(&SpherePhantom::default(), &array, &t).unwrap();
        assert!(s.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn render_background_only_and_empty() {
        let grid = make_grid(64, 64, 0.3e-3, Point2::ORIGIN).unwrap();
        let mut spec = VesselPhantomSpec::reference(1);
        spec.vessels.clear();
        let img = spec.render(&grid).unwrap();
        assert!(img.values().iter().all(|&v| v == 0.0 || v == 0.1));
        assert_eq!(img.get(32, 32), 0.1);
        assert_eq!(img.get(0, 0), 0.0);
        let empty = VesselPhantomSpec::default().render(&grid).unwrap();
        assert!(empty.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn reference_tree_spans_the_stated_diameters() {
        let spec = VesselPhantomSpec::reference(7);
        assert_eq!(spec.contrast_ratio(), Some(10.0));
        let dmin = spec.vessels.iter().map(|v| v.diameter).fold(f64::INFINITY, f64::min);
        let dmax = spec.vessels.iter().map(|v| v.diameter).fold(0.0, f64::max);
        assert_eq!((dmin, dmax), (0.24e-3, 1.3e-3));
        assert_eq!(spec, VesselPhantomSpec::reference(7));
        for v in &spec.vessels {
            for p in &v.points {
                assert!(p.norm() + v.diameter / 2.0 < 8.5e-3);
            }
        }
    }

    #[test]
    fn chain_carries_cylinder_energy() {
        let seg = VesselSegment { points: vec![Point2::new(-2e-3, 0.0), Point2::new(2e-3, 0.0)], diameter: 0.6e-3, amplitude: 1.0 };
        let spec = VesselPhantomSpec { background: None, vessels: vec![seg.clone()] };
        let ph = spec.to_spheres().unwrap();
        let r: f64 = 0.3e-3;
        let spacing = r / 2.0;
        assert_eq!(ph.len(), (seg.length() / spacing).floor() as usize + 1);
        let per_length = ph.spheres[0].amplitude * 4.0 / 3.0 * std::f64::consts::PI * r.powi(3) / spacing;
        assert!((per_length - std::f64::consts::PI * r * r).abs() < 1e-12 * per_length);
    }

    #[test]
    fn resampled_points_are_evenly_spaced() {
        let pts = vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(1.0, 1.0)];
        let r = resample_polyline(&pts, 0.3);
        assert_eq!(r.len(), 7);
        assert!((r[3].x - 0.9).abs() < 1e-12);
        assert!((r[4].x - 1.0).abs() < 1e-12 && (r[4].y - 0.2).abs() < 1e-12);
    }

    #[test]
    fn noise_is_seeded() {
        let t = Timing::new(32, 40e6, 0.0, 1500.0).unwrap();
        let base = Sinogram::from_data(1, t, (0..32).map(|k| k as f64).collect()).unwrap();
        let (mut a, mut b, mut c) = (base.clone(), base.clone(), base.clone());
        add_white_noise(&mut a, 20.0, 3).unwrap();
        add_white_noise(&mut b, 20.0, 3).unwrap();
        add_white_noise(&mut c, 20.0, 4).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn multiscale_layout() {
        let grid = make_grid(401, 401, 40e-6, Point2::ORIGIN).unwrap();
        let ph = MultiscalePhantom::default();
        let img = ph.render(&grid).unwrap();
        // the 300 um feature spans at least 7 pixels across
        let c = ph.feature_centers()[0];
        let (ci, cj) = grid.index_of(c).unwrap();
        let across = (0..grid.nx()).filter(|&i| img.get(i, cj) == 1.0 && i.abs_diff(ci) < 20).count();
        assert!(across >= 7, "{across}");
        let zero = MultiscalePhantom { bulk_amplitude: 0.0, feature_amplitude: 0.0, ..ph };
        assert!(zero.render(&grid).unwrap().values().iter().all(|&v| v == 0.0));
        assert!(zero.to_spheres().unwrap().is_empty());
    }
}
