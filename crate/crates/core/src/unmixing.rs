//! Per-pixel linear spectral unmixing.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::Image;
use crate::par;
use crate::solver::BandImageSet;

/// Condition numbers above this are treated as rank deficient.
pub const MAX_CONDITION: f64 = 1e12;
const MAX_NNLS_CHROMOPHORES: usize = 12;

/// Absorption of each chromophore at each wavelength.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectraTable {
    pub wavelengths: Vec<f64>,
    pub chromophores: Vec<String>,
    /// `values[w][c]` for wavelength `w` and chromophore `c`.
    pub values: Vec<Vec<f64>>,
}

impl SpectraTable {
    pub fn new(wavelengths: Vec<f64>, chromophores: Vec<String>, values: Vec<Vec<f64>>) -> Result<Self> {
        let t = SpectraTable { wavelengths, chromophores, values };
        t.validate()?;
        Ok(t)
    }

    fn validate(&self) -> Result<()> {
        let (nw, nc) = (self.wavelengths.len(), self.chromophores.len());
        if nw < 2 || nc == 0 || nw < nc {
            return Err(Error::param(format!(
                "spectra table needs at least two wavelengths and no fewer wavelengths than chromophores ({nw} x {nc})"
            )));
        }
        if self.values.len() != nw || self.values.iter().any(|r| r.len() != nc) {
            return Err(Error::shape("spectra table rows do not match its header"));
        }
        if self.values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::param("spectra table contains non-finite values"));
        }
        Ok(())
    }

    /// Parses `wavelength_nm,<name>,<name>…` CSV with one row per wavelength.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| Error::Format("empty spectra table".into()))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols.len() < 2 || cols[0] != "wavelength_nm" {
            return Err(Error::Format("spectra table header must start with wavelength_nm".into()));
        }
        let chromophores = cols[1..].iter().map(|s| s.to_string()).collect::<Vec<_>>();
        let mut wavelengths = Vec::new();
        let mut values = Vec::new();
        for (n, line) in lines.enumerate() {
            let nums = line
                .split(',')
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Format(format!("spectra table row {}: {e}", n + 1)))?;
            if nums.len() != cols.len() {
                return Err(Error::Format(format!("spectra table row {} has {} fields", n + 1, nums.len())));
            }
            wavelengths.push(nums[0]);
            values.push(nums[1..].to_vec());
        }
        SpectraTable::new(wavelengths, chromophores, values)
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("wavelength_nm,{}\n", self.chromophores.join(","));
        for (w, row) in self.wavelengths.iter().zip(&self.values) {
            let fields: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            out.push_str(&format!("{w},{}\n", fields.join(",")));
        }
        out
    }

    fn row_of(&self, wavelength: f64) -> Result<usize> {
        self.wavelengths
            .iter()
            .position(|&w| (w - wavelength).abs() < 1e-6)
            .ok_or_else(|| Error::param(format!("wavelength {wavelength} nm is not in the spectra table")))
    }
}

/// Images of one scene at several wavelengths.
#[derive(Debug, Clone, PartialEq)]
pub struct MultispectralStack {
    pub wavelengths: Vec<f64>,
    pub images: Vec<Image>,
}

impl MultispectralStack {
    pub fn new(wavelengths: Vec<f64>, images: Vec<Image>) -> Result<Self> {
        if wavelengths.len() != images.len() || images.is_empty() {
            return Err(Error::shape("one image per wavelength is required"));
        }
        for img in &images[1..] {
            img.check_same_grid(&images[0])?;
        }
        Ok(MultispectralStack { wavelengths, images })
    }

    /// Stack of band `band` from per-wavelength reconstructions.
    pub fn from_band(wavelengths: Vec<f64>, sets: &[BandImageSet], band: usize) -> Result<Self> {
        let images = sets
            .iter()
            .map(|s| s.components.get(band).cloned().ok_or_else(|| Error::param(format!("no band {band}"))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(wavelengths, images)
    }

    /// Stack of summed components from per-wavelength reconstructions.
    pub fn from_composites(wavelengths: Vec<f64>, sets: &[BandImageSet]) -> Result<Self> {
        Self::new(wavelengths, sets.iter().map(BandImageSet::composite).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnmixResult {
    pub chromophores: Vec<String>,
    pub maps: Vec<Image>,
    /// 2-norm condition number of the spectra matrix.
    pub condition_number: f64,
}

fn condition_number(a: &DMatrix<f64>) -> f64 {
    let sv = a.singular_values();
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

fn pseudo_inverse(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    a.clone()
        .pseudo_inverse(0.0)
        .map_err(|e| Error::Numerical(format!("pseudo-inverse failed: {e}")))
}

/// Least squares `A s = m` per pixel; with `nonneg` the non-negative least
/// squares solution, found exactly by enumerating supports.
pub fn linear_unmix(stack: &MultispectralStack, table: &SpectraTable, nonneg: bool) -> Result<UnmixResult> {
    table.validate()?;
    let nc = table.chromophores.len();
    if stack.wavelengths.len() < nc {
        return Err(Error::param("fewer wavelengths than chromophores"));
    }
    let rows = stack.wavelengths.iter().map(|&w| table.row_of(w)).collect::<Result<Vec<_>>>()?;
    let a = DMatrix::from_fn(rows.len(), nc, |i, j| table.values[rows[i]][j]);
    let cond = condition_number(&a);
    if !(cond <= MAX_CONDITION) {
        return Err(Error::Numerical(format!("spectra matrix is rank deficient (condition number {cond:.3e})")));
    }
    if nonneg && nc > MAX_NNLS_CHROMOPHORES {
        return Err(Error::param(format!("non-negative unmixing supports at most {MAX_NNLS_CHROMOPHORES} chromophores")));
    }
    let pinv = pseudo_inverse(&a)?;
    // support bitmask -> (columns, pseudo-inverse of the restricted matrix)
    let subsets: Vec<(Vec<usize>, DMatrix<f64>)> = if nonneg {
        (1u32..(1 << nc))
            .map(|mask| {
                let cols: Vec<usize> = (0..nc).filter(|c| mask & (1 << c) != 0).collect();
                let sub = a.select_columns(&cols);
                pseudo_inverse(&sub).map(|p| (cols, p))
            })
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };
    let grid = *stack.images[0].grid();
    let npix = grid.n_pixels();
    let per_pixel = par::map_range(npix, |k| {
        let m = DVector::from_iterator(rows.len(), stack.images.iter().map(|img| img.values()[k]));
        let s = &pinv * &m;
        if !nonneg || s.iter().all(|&v| v >= 0.0) {
            return s.iter().copied().collect::<Vec<f64>>();
        }
        let mut best = vec![0.0; nc];
        let mut best_r = m.norm_squared();
        for (cols, p) in &subsets {
            let sub = p * &m;
            if sub.iter().any(|&v| v < 0.0) {
                continue;
            }
            let mut full = vec![0.0; nc];
            for (&c, &v) in cols.iter().zip(sub.iter()) {
                full[c] = v;
            }
            let fitted = &a * DVector::from_column_slice(&full);
            let r = (&m - fitted).norm_squared();
            if r < best_r {
                best_r = r;
                best = full;
            }
        }
        best
    });
    let mut maps: Vec<Image> = (0..nc).map(|_| Image::zeros(grid)).collect();
    for (k, s) in per_pixel.into_iter().enumerate() {
        for (c, v) in s.into_iter().enumerate() {
            maps[c].values_mut()[k] = v;
        }
    }
    Ok(UnmixResult { chromophores: table.chromophores.clone(), maps, condition_number: cond })
}

/// Unmixes every band of per-wavelength band reconstructions separately.
pub fn unmix_bands(wavelengths: &[f64], sets: &[BandImageSet], table: &SpectraTable, nonneg: bool) -> Result<Vec<UnmixResult>> {
    let n_bands = sets.first().map_or(0, BandImageSet::len);
    (0..n_bands)
        .map(|b| linear_unmix(&MultispectralStack::from_band(wavelengths.to_vec(), sets, b)?, table, nonneg))
        .collect()
}
