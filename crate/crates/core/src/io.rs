//! Binary file formats.
//!
//! Every file starts with a 16-byte preamble:
//!
//! | bytes  | content                                              |
//! |--------|------------------------------------------------------|
//! | 0..4   | `FBMB`                                               |
//! | 4..8   | kind tag: `SINO`, `IMAG` or `MODL`                   |
//! | 8..12  | byte-order mark `0x01020304` as little-endian `u32`  |
//! | 12..14 | format version, `u16`                                |
//! | 14..16 | sample type, `u16` (1 = f32, 2 = f64)                |
//!
//! Sinogram header: `n_detectors: u64, n_samples: u64, sample_rate: f64,
//! t0: f64, speed_of_sound: f64`, then detector-major samples.
//! Image header: `nx: u64, ny: u64, pixel_size: f64, origin_x: f64,
//! origin_y: f64`, then row-major (`j * nx + i`) pixels.
//! All fields are little-endian. Writers default to f32 samples; f64 is
//! available when a bit-exact round trip of computed data is needed.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{ImagingGrid, Point2, Timing};
use crate::model::{Image, Sinogram};
use crate::render::RgbImage;

pub const FORMAT_VERSION: u16 = 1;
const MAGIC: &[u8; 4] = b"FBMB";
const BOM: u32 = 0x0102_0304;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Sinogram,
    Image,
    Model,
}

impl Kind {
    fn tag(self) -> &'static [u8; 4] {
        match self {
            Kind::Sinogram => b"SINO",
            Kind::Image => b"IMAG",
            Kind::Model => b"MODL",
        }
    }
}

/// Sample type of the payload.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DType {
    #[default]
    F32,
    F64,
}

impl DType {
    fn code(self) -> u16 {
        match self {
            DType::F32 => 1,
            DType::F64 => 2,
        }
    }

    fn width(self) -> usize {
        match self {
            DType::F32 => 4,
            DType::F64 => 8,
        }
    }
}

pub(crate) fn write_preamble(w: &mut impl Write, kind: Kind, dtype: DType) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(kind.tag())?;
    w.write_all(&BOM.to_le_bytes())?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&dtype.code().to_le_bytes())?;
    Ok(())
}

pub(crate) fn read_preamble(r: &mut impl Read, kind: Kind) -> Result<DType> {
    let mut b = [0u8; 16];
    read_exact(r, &mut b)?;
    if &b[0..4] != MAGIC {
        return Err(Error::Format("missing FBMB magic bytes".into()));
    }
    if &b[4..8] != kind.tag() {
        return Err(Error::Format(format!(
            "expected a {} file, found tag {:?}",
            String::from_utf8_lossy(kind.tag()),
            String::from_utf8_lossy(&b[4..8])
        )));
    }
    let bom = [b[8], b[9], b[10], b[11]];
    if bom == BOM.to_be_bytes() {
        return Err(Error::Format("big-endian file rejected: only little-endian data is supported".into()));
    }
    if bom != BOM.to_le_bytes() {
        return Err(Error::Format("corrupted byte-order mark".into()));
    }
    let version = u16::from_le_bytes([b[12], b[13]]);
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported format version {version}")));
    }
    match u16::from_le_bytes([b[14], b[15]]) {
        1 => Ok(DType::F32),
        2 => Ok(DType::F64),
        other => Err(Error::Format(format!("unknown sample type code {other}"))),
    }
}

fn read_exact(r: &mut impl Read, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Format("file is truncated".into()),
        _ => Error::Io(e),
    })
}

pub(crate) fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    Ok(f64::from_bits(read_u64(r)?))
}

fn write_samples(w: &mut impl Write, data: &[f64], dtype: DType) -> Result<()> {
    let mut buf = Vec::with_capacity(data.len() * dtype.width());
    for &v in data {
        match dtype {
            DType::F32 => buf.extend_from_slice(&(v as f32).to_le_bytes()),
            DType::F64 => buf.extend_from_slice(&v.to_le_bytes()),
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

fn read_samples(r: &mut impl Read, n: usize, dtype: DType) -> Result<Vec<f64>> {
    let mut buf = vec![0u8; n * dtype.width()];
    read_exact(r, &mut buf)?;
    let mut rest = Vec::new();
    if r.read_to_end(&mut rest)? != 0 {
        return Err(Error::Format(format!("{} trailing bytes after payload", rest.len())));
    }
    Ok(match dtype {
        DType::F32 => buf
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect(),
        DType::F64 => buf
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect(),
    })
}

pub fn encode_sinogram(sino: &Sinogram, dtype: DType) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    write_preamble(&mut out, Kind::Sinogram, dtype)?;
    let t = sino.timing();
    out.extend_from_slice(&(sino.n_detectors() as u64).to_le_bytes());
    out.extend_from_slice(&(t.n_samples as u64).to_le_bytes());
    out.extend_from_slice(&t.sample_rate.to_le_bytes());
    out.extend_from_slice(&t.t0.to_le_bytes());
    out.extend_from_slice(&t.speed_of_sound.to_le_bytes());
    write_samples(&mut out, sino.data(), dtype)?;
    Ok(out)
}

pub fn decode_sinogram(mut r: impl Read) -> Result<Sinogram> {
    let dtype = read_preamble(&mut r, Kind::Sinogram)?;
    let nd = read_u64(&mut r)? as usize;
    let ns = read_u64(&mut r)? as usize;
    let fs = read_f64(&mut r)?;
    let t0 = read_f64(&mut r)?;
    let c = read_f64(&mut r)?;
    let timing = Timing::new(ns, fs, t0, c).map_err(|e| Error::Format(format!("bad sinogram header: {e}")))?;
    let n = nd.checked_mul(ns).ok_or_else(|| Error::Format("sinogram dimensions overflow".into()))?;
    let data = read_samples(&mut r, n, dtype)?;
    Sinogram::from_data(nd, timing, data)
}

pub fn write_sinogram(path: &Path, sino: &Sinogram, dtype: DType) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&encode_sinogram(sino, dtype)?)?;
    w.flush()?;
    Ok(())
}

pub fn read_sinogram(path: &Path) -> Result<Sinogram> {
    decode_sinogram(BufReader::new(File::open(path)?))
}

pub fn encode_image(img: &Image, dtype: DType) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    write_preamble(&mut out, Kind::Image, dtype)?;
    let g = img.grid();
    out.extend_from_slice(&(g.nx() as u64).to_le_bytes());
    out.extend_from_slice(&(g.ny() as u64).to_le_bytes());
    out.extend_from_slice(&g.pixel_size().to_le_bytes());
    out.extend_from_slice(&g.origin().x.to_le_bytes());
    out.extend_from_slice(&g.origin().y.to_le_bytes());
    write_samples(&mut out, img.values(), dtype)?;
    Ok(out)
}

pub fn decode_image(mut r: impl Read) -> Result<Image> {
    let dtype = read_preamble(&mut r, Kind::Image)?;
    let nx = read_u64(&mut r)? as usize;
    let ny = read_u64(&mut r)? as usize;
    let h = read_f64(&mut r)?;
    let ox = read_f64(&mut r)?;
    let oy = read_f64(&mut r)?;
    let grid = ImagingGrid::new(nx, ny, h, Point2::new(ox, oy))
        .map_err(|e| Error::Format(format!("bad image header: {e}")))?;
    let data = read_samples(&mut r, grid.n_pixels(), dtype)?;
    Image::from_values(grid, data)
}

pub fn write_image(path: &Path, img: &Image, dtype: DType) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&encode_image(img, dtype)?)?;
    w.flush()?;
    Ok(())
}

pub fn read_image(path: &Path) -> Result<Image> {
    decode_image(BufReader::new(File::open(path)?))
}

/// 8-bit RGB PNG, row 0 at the top (largest y).
pub fn encode_png(img: &RgbImage) -> Result<Vec<u8>> {
    let (w, h) = (img.width(), img.height());
    let mut raw = Vec::with_capacity(w * h * 3);
    for row in (0..h).rev() {
        for col in 0..w {
            for c in img.pixel(col, row) {
                raw.push((c.clamp(0.0, 1.0) * 255.0).round() as u8);
            }
        }
    }
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, w as u32, h as u32);
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header().map_err(|e| Error::Format(e.to_string()))?;
        writer.write_image_data(&raw).map_err(|e| Error::Format(e.to_string()))?;
    }
    Ok(out)
}

pub fn write_png(path: &Path, img: &RgbImage) -> Result<()> {
    std::fs::write(path, encode_png(img)?)?;
    Ok(())
}
