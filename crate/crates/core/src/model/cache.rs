//! On-disk cache of an assembled model: the 16-byte file preamble shared with
//! the other binary formats, then `geometry_hash, rows, cols, nnz` as `u64`,
//! followed by the CSR arrays (`u64` row pointers, `u32` columns, `f32`
//! values), all little-endian.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{geometry_hash, ForwardModel, ModelOptions};
use crate::error::{Error, Result};
use crate::geometry::{DetectorArray, ImagingGrid, Timing};
use crate::io::{read_preamble, read_u64, write_preamble, DType, Kind};

pub const MODEL_CACHE_VERSION: u16 = 1;

pub fn write_model_cache(path: &Path, model: &ForwardModel) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_preamble(&mut w, Kind::Model, DType::F32)?;
    for v in [
        model.geometry_hash(),
        model.n_rows() as u64,
        model.n_cols() as u64,
        model.nnz() as u64,
    ] {
        w.write_all(&v.to_le_bytes())?;
    }
    let mut buf = Vec::with_capacity(1 << 16);
    for &p in model.row_ptr() {
        buf.extend_from_slice(&(p as u64).to_le_bytes());
        flush_if_full(&mut w, &mut buf)?;
    }
    for &c in model.col_indices() {
        buf.extend_from_slice(&c.to_le_bytes());
        flush_if_full(&mut w, &mut buf)?;
    }
    for &v in model.values() {
        buf.extend_from_slice(&v.to_le_bytes());
        flush_if_full(&mut w, &mut buf)?;
    }
    w.write_all(&buf)?;
    w.flush()?;
    Ok(())
}

fn flush_if_full(w: &mut impl Write, buf: &mut Vec<u8>) -> Result<()> {
    if buf.len() >= 1 << 16 {
        w.write_all(buf)?;
        buf.clear();
    }
    Ok(())
}

/// Loads a cached model, checking that it was built for exactly this geometry.
pub fn read_model_cache(
    path: &Path,
    grid: ImagingGrid,
    array: DetectorArray,
    timing: Timing,
    options: ModelOptions,
) -> Result<ForwardModel> {
    let mut r = BufReader::new(File::open(path)?);
    let dtype = read_preamble(&mut r, Kind::Model)?;
    if dtype != DType::F32 {
        return Err(Error::Format("model cache must store f32 values".into()));
    }
    let hash = read_u64(&mut r)?;
    let expected = geometry_hash(&grid, &array, &timing, &options);
    if hash != expected {
        return Err(Error::Format(format!(
            "model cache was built for geometry {hash:016x}, requested {expected:016x}"
        )));
    }
    let rows = read_u64(&mut r)? as usize;
    let cols = read_u64(&mut r)? as usize;
    let nnz = read_u64(&mut r)? as usize;
    if rows != array.len() * timing.n_samples || cols != grid.n_pixels() {
        return Err(Error::Format("model cache dimensions do not match the geometry".into()));
    }
    let row_ptr = read_vec(&mut r, rows + 1, 8, |b| u64::from_le_bytes(b.try_into().unwrap()) as usize)?;
    let col_idx = read_vec(&mut r, nnz, 4, |b| u32::from_le_bytes(b.try_into().unwrap()))?;
    let vals = read_vec(&mut r, nnz, 4, |b| f32::from_le_bytes(b.try_into().unwrap()))?;
    ForwardModel::from_parts(grid, array, timing, options, row_ptr, col_idx, vals)
}

fn read_vec<T>(r: &mut impl Read, n: usize, width: usize, conv: impl Fn(&[u8]) -> T) -> Result<Vec<T>> {
    let mut out = Vec::with_capacity(n);
    let mut buf = vec![0u8; width * 8192];
    let mut left = n;
    while left > 0 {
        let take = left.min(8192);
        let bytes = &mut buf[..take * width];
        r.read_exact(bytes).map_err(|e| match e.kind() {
            std::io::ErrorKind::UnexpectedEof => Error::Format("model cache is truncated".into()),
            _ => Error::Io(e),
        })?;
        out.extend(bytes.chunks_exact(width).map(&conv));
        left -= take;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_grid, make_ring_array, Point2};
    use crate::model::build_model;

    #[test]
    fn cache_round_trip_and_geometry_check() {
        let grid = make_grid(10, 10, 0.3e-3, Point2::ORIGIN).unwrap();
        let array = make_ring_array(6, 0.015, 360.0, Point2::ORIGIN).unwrap();
        let timing = Timing::covering(&grid, &array, 20e6, 1500.0, None, 2).unwrap();
        let m = build_model(grid, array.clone(), timing).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.bin");
        write_model_cache(&path, &m).unwrap();
        let back = read_model_cache(&path, grid, array.clone(), timing, ModelOptions::default()).unwrap();
        assert_eq!(back, m);

        let mut other = timing;
        other.t0 += 1e-7;
        assert!(matches!(
            read_model_cache(&path, grid, array.clone(), other, ModelOptions::default()),
            Err(Error::Format(_))
        ));

        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
        assert!(matches!(
            read_model_cache(&path, grid, array, timing, ModelOptions::default()),
            Err(Error::Format(_))
        ));
    }
}
