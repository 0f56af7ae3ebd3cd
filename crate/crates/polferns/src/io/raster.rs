//! `PSC1` covariance rasters.
//!
//! Layout, all little-endian: magic `PSC1`, `u32` width, `u32` height,
//! `u32` precision (32 or 64), then per pixel in row-major order the nine
//! values C11, C22, C33, Re C12, Im C12, Re C13, Im C13, Re C23, Im C23.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use polferns_core::polsar::HermitianMat;

use crate::error::{Error, Result};

pub const RASTER_MAGIC: &[u8; 4] = b"PSC1";
pub const RASTER_HEADER_LEN: u64 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Precision {
    F32,
    #[default]
    F64,
}

impl Precision {
    pub fn bits(self) -> u32 {
        match self {
            Precision::F32 => 32,
            Precision::F64 => 64,
        }
    }

    pub fn from_bits(bits: u32) -> Option<Self> {
        match bits {
            32 => Some(Precision::F32),
            64 => Some(Precision::F64),
            _ => None,
        }
    }

    fn bytes(self) -> u64 {
        self.bits() as u64 / 8
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceRaster {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<HermitianMat>,
}

/// Body length in bytes, or `None` when it does not fit in a `u64`.
pub fn body_len(width: u32, height: u32, precision: Precision) -> Option<u64> {
    (width as u64)
        .checked_mul(height as u64)?
        .checked_mul(9)?
        .checked_mul(precision.bytes())
}

pub fn write_covariance_raster(
    path: &Path,
    width: usize,
    height: usize,
    pixels: &[HermitianMat],
    precision: Precision,
) -> Result<()> {
    let (w, h) = match (u32::try_from(width), u32::try_from(height)) {
        (Ok(w), Ok(h)) if width * height == pixels.len() => (w, h),
        _ => {
            return Err(Error::Usage(format!(
                "raster of {width}x{height} cannot hold {} pixels",
                pixels.len()
            )))
        }
    };
    let file = File::create(path).map_err(Error::io(path))?;
    let mut out = BufWriter::new(file);
    let mut header = Vec::with_capacity(RASTER_HEADER_LEN as usize);
    header.extend_from_slice(RASTER_MAGIC);
    header.extend_from_slice(&w.to_le_bytes());
    header.extend_from_slice(&h.to_le_bytes());
    header.extend_from_slice(&precision.bits().to_le_bytes());
    out.write_all(&header).map_err(Error::io(path))?;
    for m in pixels {
        for &v in &m.0 {
            match precision {
                Precision::F32 => out.write_all(&(v as f32).to_le_bytes()),
                Precision::F64 => out.write_all(&v.to_le_bytes()),
            }
            .map_err(Error::io(path))?;
        }
    }
    out.flush().map_err(Error::io(path))
}

fn format_error(path: &Path, offset: u64, message: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        offset,
        message: message.into(),
    }
}

/// Reads a raster after checking the file length against its header.
pub fn read_covariance_raster(path: &Path) -> Result<(CovarianceRaster, Precision)> {
    let file = File::open(path).map_err(Error::io(path))?;
    let actual = file.metadata().map_err(Error::io(path))?.len();
    let mut input = BufReader::new(file);
    if actual < RASTER_HEADER_LEN {
        return Err(format_error(
            path,
            actual,
            format!("truncated header: expected {RASTER_HEADER_LEN} bytes, found {actual}"),
        ));
    }
    let mut header = [0u8; RASTER_HEADER_LEN as usize];
    input.read_exact(&mut header).map_err(Error::io(path))?;
    if &header[..4] != RASTER_MAGIC {
        return Err(format_error(
            path,
            0,
            format!("bad magic {:?}, expected \"PSC1\"", &header[..4]),
        ));
    }
    let word = |i: usize| u32::from_le_bytes(header[i..i + 4].try_into().expect("4-byte slice"));
    let (w, h, bits) = (word(4), word(8), word(12));
    let precision = Precision::from_bits(bits).ok_or_else(|| {
        format_error(
            path,
            12,
            format!("unsupported precision {bits}, expected 32 or 64"),
        )
    })?;
    let body = body_len(w, h, precision)
        .filter(|&b| b <= u64::MAX - RASTER_HEADER_LEN)
        .ok_or_else(|| format_error(path, 4, format!("dimensions {w}x{h} overflow")))?;
    let expected = RASTER_HEADER_LEN + body;
    if actual != expected {
        let what = if actual < expected {
            "truncated body"
        } else {
            "trailing bytes"
        };
        return Err(format_error(
            path,
            actual.min(expected),
            format!("{what}: expected {expected} bytes in total, found {actual}"),
        ));
    }
    let n = w as usize * h as usize;
    let mut bytes = vec![0u8; body as usize];
    input.read_exact(&mut bytes).map_err(Error::io(path))?;
    let pixels = match precision {
        Precision::F64 => bytes
            .chunks_exact(72)
            .map(|px| {
                HermitianMat(std::array::from_fn(|k| {
                    f64::from_le_bytes(px[8 * k..8 * k + 8].try_into().unwrap())
                }))
            })
            .collect(),
        Precision::F32 => bytes
            .chunks_exact(36)
            .map(|px| {
                HermitianMat(std::array::from_fn(|k| {
                    f32::from_le_bytes(px[4 * k..4 * k + 4].try_into().unwrap()) as f64
                }))
            })
            .collect::<Vec<_>>(),
    };
    debug_assert_eq!(pixels.len(), n);
    Ok((
        CovarianceRaster {
            width: w as usize,
            height: h as usize,
            pixels,
        },
        precision,
    ))
}
