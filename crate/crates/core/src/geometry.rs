//! Imaging grid, ring transducer array and acquisition timing.
//!
//! Angles are measured counterclockwise from the +x axis. A partial-coverage
//! ring is centred on the -y direction, so its gap faces +y. For a closed ring
//! (360°) element 0 sits on -y and the elements proceed counterclockwise.
//! The in-plane angular position of element 0 on a physical scanner is not
//! known; any global rotation can be applied to `center`/`bisector` by the
//! caller.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default speed of sound in water/soft tissue, m/s.
pub const DEFAULT_SPEED_OF_SOUND: f64 = 1500.0;
/// Default sampling rate of the acquisition, Hz.
pub const DEFAULT_SAMPLE_RATE: f64 = 40e6;
/// Default number of time samples per detector.
pub const DEFAULT_N_SAMPLES: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn distance(self, other: Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }
}

impl std::ops::Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl std::ops::Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl std::ops::Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }
}

/// Square-pixel lattice centred on `origin`.
///
/// Pixel `(i, j)` (column `i` along x, row `j` along y) has its centre at
/// `origin + ((i - (nx-1)/2) * h, (j - (ny-1)/2) * h)`. Pixel values are stored
/// row-major: linear index `j * nx + i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImagingGrid {
    nx: usize,
    ny: usize,
    pixel_size: f64,
    origin: Point2,
}

impl ImagingGrid {
    pub fn new(nx: usize, ny: usize, pixel_size: f64, origin: Point2) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::param(format!("grid needs at least 2x2 pixels, got {nx}x{ny}")));
        }
        if !(pixel_size > 0.0 && pixel_size.is_finite()) {
            return Err(Error::param(format!("pixel size must be positive, got {pixel_size}")));
        }
        if !(origin.x.is_finite() && origin.y.is_finite()) {
            return Err(Error::param("grid origin must be finite"));
        }
        Ok(ImagingGrid { nx, ny, pixel_size, origin })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn pixel_size(&self) -> f64 {
        self.pixel_size
    }

    pub fn origin(&self) -> Point2 {
        self.origin
    }

    pub fn n_pixels(&self) -> usize {
        self.nx * self.ny
    }

    /// Physical extent of the pixel-centre lattice along x (and y): `(n-1) h`.
    pub fn field_of_view(&self) -> (f64, f64) {
        (
            (self.nx - 1) as f64 * self.pixel_size,
            (self.ny - 1) as f64 * self.pixel_size,
        )
    }

    /// Position of the first pixel centre, `(0, 0)`.
    pub fn corner(&self) -> Point2 {
        self.position(0, 0)
    }

    pub fn position(&self, i: usize, j: usize) -> Point2 {
        let h = self.pixel_size;
        Point2::new(
            self.origin.x + (i as f64 - (self.nx as f64 - 1.0) / 2.0) * h,
            self.origin.y + (j as f64 - (self.ny as f64 - 1.0) / 2.0) * h,
        )
    }

    pub fn position_of_linear(&self, idx: usize) -> Point2 {
        self.position(idx % self.nx, idx / self.nx)
    }

    pub fn linear_index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    /// Index of the pixel whose centre is nearest to `p`, if `p` lies within
    /// half a pixel of the lattice.
    pub fn index_of(&self, p: Point2) -> Option<(usize, usize)> {
        let h = self.pixel_size;
        let fi = (p.x - self.origin.x) / h + (self.nx as f64 - 1.0) / 2.0;
        let fj = (p.y - self.origin.y) / h + (self.ny as f64 - 1.0) / 2.0;
        let i = fi.round();
        let j = fj.round();
        if i < 0.0 || j < 0.0 || i >= self.nx as f64 || j >= self.ny as f64 {
            return None;
        }
        Some((i as usize, j as usize))
    }

    /// Axis-aligned box on which the bilinear pixel basis is non-zero: the
    /// pixel-centre lattice expanded by one pixel on each side.
    pub fn support_box(&self) -> (Point2, Point2) {
        let h = self.pixel_size;
        let lo = self.corner();
        let hi = self.position(self.nx - 1, self.ny - 1);
        (Point2::new(lo.x - h, lo.y - h), Point2::new(hi.x + h, hi.y + h))
    }
}

/// Builds an imaging grid; see [`ImagingGrid::new`].
pub fn make_grid(nx: usize, ny: usize, pixel_size: f64, origin: Point2) -> Result<ImagingGrid> {
    ImagingGrid::new(nx, ny, pixel_size, origin)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorArray {
    positions: Vec<Point2>,
    radius: f64,
    coverage_deg: f64,
    center: Point2,
}

impl DetectorArray {
    pub fn positions(&self) -> &[Point2] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn coverage_deg(&self) -> f64 {
        self.coverage_deg
    }

    pub fn center(&self) -> Point2 {
        self.center
    }

    /// Angular spacing between adjacent elements, degrees.
    pub fn angular_spacing_deg(&self) -> f64 {
        element_spacing_deg(self.positions.len(), self.coverage_deg)
    }
}

fn element_spacing_deg(n: usize, coverage_deg: f64) -> f64 {
    if coverage_deg >= 360.0 {
        360.0 / n as f64
    } else if n > 1 {
        coverage_deg / (n - 1) as f64
    } else {
        0.0
    }
}

/// Uniform ring array of `n_elements` on a circle of `radius` about `center`.
///
/// Partial arcs include both end points; a full ring spaces elements by
/// `360/n` so the gap between the last and the first element equals the
/// regular spacing.
pub fn make_ring_array(
    n_elements: usize,
    radius: f64,
    coverage_deg: f64,
    center: Point2,
) -> Result<DetectorArray> {
    if n_elements == 0 {
        return Err(Error::param("detector array needs at least one element"));
    }
    if !(coverage_deg > 0.0 && coverage_deg <= 360.0) {
        return Err(Error::param(format!("coverage must lie in (0, 360] degrees, got {coverage_deg}")));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::param(format!("array radius must be positive, got {radius}")));
    }
    let bisector = -90.0_f64;
    let step = element_spacing_deg(n_elements, coverage_deg);
    let start = if coverage_deg >= 360.0 || n_elements == 1 {
        bisector
    } else {
        bisector - coverage_deg / 2.0
    };
    let positions = (0..n_elements)
        .map(|k| {
            let a = (start + k as f64 * step).to_radians();
            Point2::new(center.x + radius * a.cos(), center.y + radius * a.sin())
        })
        .collect();
    Ok(DetectorArray { positions, radius, coverage_deg, center })
}

/// Sampling of the recorded signals. Sample `k` is taken at `t0 + k / sample_rate`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub n_samples: usize,
    pub sample_rate: f64,
    pub t0: f64,
    pub speed_of_sound: f64,
}

impl Timing {
    pub fn new(n_samples: usize, sample_rate: f64, t0: f64, speed_of_sound: f64) -> Result<Self> {
        let t = Timing { n_samples, sample_rate, t0, speed_of_sound };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::param("timing needs at least one sample"));
        }
        if !(self.sample_rate > 0.0 && self.sample_rate.is_finite()) {
            return Err(Error::param(format!("sample rate must be positive, got {}", self.sample_rate)));
        }
        if !(self.speed_of_sound > 0.0 && self.speed_of_sound.is_finite()) {
            return Err(Error::param(format!(
                "speed of sound must be positive, got {}",
                self.speed_of_sound
            )));
        }
        if !self.t0.is_finite() {
            return Err(Error::param("t0 must be finite"));
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.sample_rate
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 / self.sample_rate
    }

    /// Propagation distance covered by one sample interval.
    pub fn sample_distance(&self) -> f64 {
        self.speed_of_sound / self.sample_rate
    }

    pub fn t_end(&self) -> f64 {
        self.t0 + self.n_samples as f64 / self.sample_rate
    }

    /// Smallest window of `n_samples` (or the smallest power of two when
    /// `n_samples` is `None`) at `sample_rate` that covers every travel time
    /// between the grid support and the array, with a margin of `margin`
    /// samples on each side.
    pub fn covering(
        grid: &ImagingGrid,
        array: &DetectorArray,
        sample_rate: f64,
        speed_of_sound: f64,
        n_samples: Option<usize>,
        margin: usize,
    ) -> Result<Timing> {
        let (dmin, dmax) = distance_range(grid, array);
        let first = (dmin / speed_of_sound * sample_rate).floor() - margin as f64;
        let first = first.max(0.0);
        let needed = ((dmax / speed_of_sound * sample_rate).ceil() - first) as usize + margin + 1;
        let n = match n_samples {
            Some(n) if n >= needed => n,
            Some(n) => {
                return Err(Error::param(format!(
                    "{n} samples cannot cover the grid; at least {needed} are needed"
                )))
            }
            None => needed.next_power_of_two(),
        };
        Timing::new(n, sample_rate, first / sample_rate, speed_of_sound)
    }
}

/// Minimum and maximum distance between any detector and the support box of
/// the grid.
pub fn distance_range(grid: &ImagingGrid, array: &DetectorArray) -> (f64, f64) {
    let (lo, hi) = grid.support_box();
    let mut dmin = f64::INFINITY;
    let mut dmax = 0.0_f64;
    for &p in array.positions() {
        let (a, b) = box_distance_range(lo, hi, p);
        dmin = dmin.min(a);
        dmax = dmax.max(b);
    }
    (dmin, dmax)
}

/// Nearest and farthest distance from `p` to the axis-aligned box `[lo, hi]`.
pub(crate) fn box_distance_range(lo: Point2, hi: Point2, p: Point2) -> (f64, f64) {
    let cx = p.x.clamp(lo.x, hi.x);
    let cy = p.y.clamp(lo.y, hi.y);
    let near = p.distance(Point2::new(cx, cy));
    let fx = if (p.x - lo.x).abs() > (p.x - hi.x).abs() { lo.x } else { hi.x };
    let fy = if (p.y - lo.y).abs() > (p.y - hi.y).abs() { lo.y } else { hi.y };
    let far = p.distance(Point2::new(fx, fy));
    (near, far)
}
