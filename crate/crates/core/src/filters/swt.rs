//! Undecimated (à trous) wavelet transform with the db2 wavelet.
//!
//! Level `j` correlates the previous approximation with the db2 filters
//! dilated by `2^(j-1)` under periodic extension. Synthesis applies the
//! transposed filters and averages the two branches, which inverts analysis
//! exactly for an orthonormal filter pair.

use crate::error::{Error, Result};
use crate::model::Sinogram;
use crate::par;

pub const DB2_DEC_LO: [f64; 4] = [
    -0.129_409_522_551_260_37,
    0.224_143_868_042_013_4,
    0.836_516_303_737_807_9,
    0.482_962_913_144_534_1,
];
pub const DB2_DEC_HI: [f64; 4] = [
    -0.482_962_913_144_534_1,
    0.836_516_303_737_807_9,
    -0.224_143_868_042_013_4,
    -0.129_409_522_551_260_37,
];

#[derive(Debug, Clone, PartialEq)]
pub struct SwtDecomposition {
    /// Detail coefficients, `details[j - 1]` for level `j`.
    pub details: Vec<Vec<f64>>,
    /// Approximation at the deepest level.
    pub approx: Vec<f64>,
    /// Length of the input before symmetric padding.
    pub original_len: usize,
}

impl SwtDecomposition {
    pub fn levels(&self) -> usize {
        self.details.len()
    }

    /// Copy with every coefficient set zeroed except those listed. Index 0 is
    /// the approximation, index `j` the level-`j` details.
    fn keep_only(&self, keep: &[usize]) -> SwtDecomposition {
        let zero = |v: &Vec<f64>| vec![0.0; v.len()];
        SwtDecomposition {
            details: self
                .details
                .iter()
                .enumerate()
                .map(|(i, d)| if keep.contains(&(i + 1)) { d.clone() } else { zero(d) })
                .collect(),
            approx: if keep.contains(&0) { self.approx.clone() } else { zero(&self.approx) },
            original_len: self.original_len,
        }
    }
}

/// Extends `x` at the end by half-sample symmetric reflection to a multiple of `block`.
fn pad_symmetric(x: &[f64], block: usize) -> Vec<f64> {
    let n = x.len();
    let target = n.div_ceil(block) * block;
    let mut out = x.to_vec();
    let period = 2 * n;
    for m in n..target {
        let r = m % period;
        out.push(if r < n { x[r] } else { x[period - 1 - r] });
    }
    out
}

fn analyze(a: &[f64], filt: &[f64; 4], step: usize) -> Vec<f64> {
    let n = a.len();
    (0..n)
        .map(|i| filt.iter().enumerate().map(|(k, &h)| h * a[(i + k * step) % n]).sum())
        .collect()
}

fn synthesize_into(out: &mut [f64], c: &[f64], filt: &[f64; 4], step: usize) {
    let n = c.len();
    for (i, &v) in c.iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        for (k, &h) in filt.iter().enumerate() {
            out[(i + k * step) % n] += 0.5 * h * v;
        }
    }
}

pub fn swt_decompose(trace: &[f64], levels: usize) -> Result<SwtDecomposition> {
    if levels < 1 {
        return Err(Error::param("wavelet decomposition needs at least one level"));
    }
    if levels > 24 {
        return Err(Error::param("too many wavelet levels"));
    }
    if trace.len() < DB2_DEC_LO.len() {
        return Err(Error::param(format!("trace of {} samples is too short for db2", trace.len())));
    }
    let mut a = pad_symmetric(trace, 1 << levels);
    let mut details = Vec::with_capacity(levels);
    for j in 0..levels {
        let step = 1 << j;
        details.push(analyze(&a, &DB2_DEC_HI, step));
        a = analyze(&a, &DB2_DEC_LO, step);
    }
    Ok(SwtDecomposition { details, approx: a, original_len: trace.len() })
}

pub fn swt_reconstruct(dec: &SwtDecomposition) -> Vec<f64> {
    let n = dec.approx.len();
    let mut a = dec.approx.clone();
    for j in (0..dec.levels()).rev() {
        let step = 1 << j;
        let mut prev = vec![0.0; n];
        synthesize_into(&mut prev, &a, &DB2_DEC_LO, step);
        synthesize_into(&mut prev, &dec.details[j], &DB2_DEC_HI, step);
        a = prev;
    }
    a.truncate(dec.original_len);
    a
}

/// Assignment of wavelet coefficient sets to frequency bands.
///
/// Level-`j` details occupy roughly `[fs/2^(j+1), fs/2^j]` and the deepest
/// approximation `[0, fs/2^(L+1)]`. Every interior bank edge is snapped to the
/// nearest dyadic boundary `fs/2^(j+1)` on a log scale; the deepest snapped
/// level sets `L`, band 0 holds the approximation plus any details below the
/// first boundary, and so on upward.
#[derive(Debug, Clone, PartialEq)]
pub struct SwtBands {
    pub levels: usize,
    /// `groups[b]` lists coefficient indices (0 = approximation, `j` = level-`j` details).
    pub groups: Vec<Vec<usize>>,
}

impl SwtBands {
    pub fn for_edges(edges: &[f64], sample_rate: f64) -> Result<Self> {
        if edges.len() < 2 {
            return Err(Error::param("band grouping needs at least two edges"));
        }
        let interior = &edges[1..edges.len() - 1];
        let mut boundaries = Vec::with_capacity(interior.len());
        for &e in interior {
            if !(e > 0.0 && e < sample_rate / 2.0) {
                return Err(Error::param(format!("band edge {e} Hz has no dyadic wavelet counterpart")));
            }
            // fs / 2^(j+1) = e  =>  j = log2(fs / e) - 1
            let j = ((sample_rate / e).log2() - 1.0).round().max(1.0) as usize;
            boundaries.push(j);
        }
        if boundaries.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::param("band edges are too close to map onto distinct wavelet levels"));
        }
        let levels = boundaries.first().copied().unwrap_or(1);
        // bands ordered low to high; band b spans levels (boundaries[b], boundaries[b-1]]
        let n_bands = edges.len() - 1;
        let mut groups = vec![Vec::new(); n_bands];
        groups[0].push(0);
        for j in 1..=levels {
            let below = boundaries.iter().filter(|&&bj| j > bj).count();
            groups[n_bands - 1 - below].push(j);
        }
        for g in &mut groups {
            g.sort_unstable();
        }
        Ok(SwtBands { levels, groups })
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    /// Per-band reconstructions of one trace; they sum to the trace.
    pub fn split_trace(&self, trace: &[f64]) -> Result<Vec<Vec<f64>>> {
        let dec = swt_decompose(trace, self.levels)?;
        Ok(self.groups.iter().map(|g| swt_reconstruct(&dec.keep_only(g))).collect())
    }
}

/// Splits every detector trace of `sino` into wavelet bands.
pub fn swt_band_split(sino: &Sinogram, bands: &SwtBands) -> Result<Vec<Sinogram>> {
    let nd = sino.n_detectors();
    let per_detector = par::map_range(nd, |d| bands.split_trace(sino.trace(d)));
    let mut out: Vec<Sinogram> = (0..bands.len()).map(|_| Sinogram::zeros(nd, *sino.timing())).collect();
    for (d, split) in per_detector.into_iter().enumerate() {
        for (b, trace) in split?.into_iter().enumerate() {
            out[b].trace_mut(d).copy_from_slice(&trace);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel_err(a: &[f64], b: &[f64]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
        num / den.max(1e-300)
    }

    #[test]
    fn db2_filters_are_orthonormal() {
        let s: f64 = DB2_DEC_LO.iter().map(|h| h * h).sum();
        assert!((s - 1.0).abs() < 1e-12);
        let dc: f64 = DB2_DEC_LO.iter().sum();
        assert!((dc - std::f64::consts::SQRT_2).abs() < 1e-12);
        let shift: f64 = DB2_DEC_LO[0] * DB2_DEC_LO[2] + DB2_DEC_LO[1] * DB2_DEC_LO[3];
        assert!(shift.abs() < 1e-12);
        let zero_mean: f64 = DB2_DEC_HI.iter().sum();
        assert!(zero_mean.abs() < 1e-12);
    }

    #[test]
    fn impulse_bands_sum_to_impulse() {
        let mut x = vec![0.0; 256];
        x[100] = 1.0;
        let bands = SwtBands::for_edges(&[0.0, 1.23e6, 15e6], 40e6).unwrap();
        let split = bands.split_trace(&x).unwrap();
        for k in 0..256 {
            let s: f64 = split.iter().map(|b| b[k]).sum();
            assert!((s - x[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn two_and_three_band_grouping() {
        let b2 = SwtBands::for_edges(&[0.0, 1.23e6, 15e6], 40e6).unwrap();
        assert_eq!(b2.levels, 4);
        assert_eq!(b2.groups, vec![vec![0], vec![1, 2, 3, 4]]);
        let b3 = SwtBands::for_edges(&[0.0, 0.5e6, 1.23e6, 13.3e6], 40e6).unwrap();
        assert_eq!(b3.levels, 5);
        assert_eq!(b3.groups, vec![vec![0], vec![5], vec![1, 2, 3, 4]]);
    }

    #[test]
    fn non_dyadic_length_is_padded_and_cropped() {
        let x: Vec<f64> = (0..1000).map(|k| (k as f64 * 0.01).sin() + 0.1 * (k as f64 * 1.3).cos()).collect();
        let dec = swt_decompose(&x, 6).unwrap();
        assert_eq!(dec.approx.len(), 1024);
        let y = swt_reconstruct(&dec);
        assert_eq!(y.len(), 1000);
        assert!(rel_err(&y, &x) < 1e-10);
    }

    #[test]
    fn errors() {
        assert!(swt_decompose(&[1.0; 64], 0).is_err());
        assert!(swt_decompose(&[1.0; 3], 1).is_err());
        assert!(SwtBands::for_edges(&[0.0, 1.2e6, 1.3e6, 15e6], 40e6).is_err());
    }

    proptest! {
        #[test]
        fn round_trip(x in proptest::collection::vec(-1.0f64..1.0, 64..600), levels in 1usize..6) {
            let y = swt_reconstruct(&swt_decompose(&x, levels).unwrap());
            prop_assert!(rel_err(&y, &x) < 1e-10);
        }

        #[test]
        fn band_split_sums_to_trace(x in proptest::collection::vec(-1.0f64..1.0, 64..400)) {
            let bands = SwtBands::for_edges(&[0.0, 0.5e6, 1.23e6, 13.3e6], 40e6).unwrap();
            let split = bands.split_trace(&x).unwrap();
            let sum: Vec<f64> = (0..x.len()).map(|k| split.iter().map(|b| b[k]).sum()).collect();
            prop_assert!(rel_err(&sum, &x) < 1e-10);
        }
    }
}
