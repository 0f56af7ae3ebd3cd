//! `PSP1` posterior rasters: magic, `u32` width, height and class count
//! (little-endian), then `width × height × L` little-endian `f64` values in
//! row-major pixel order.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const POSTERIOR_MAGIC: &[u8; 4] = b"PSP1";

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorRaster {
    pub width: usize,
    pub height: usize,
    pub num_classes: u8,
    pub values: Vec<f64>,
}

pub fn write_posteriors(path: &Path, raster: &PosteriorRaster) -> Result<()> {
    if raster.values.len() != raster.width * raster.height * raster.num_classes as usize {
        return Err(Error::Usage(
            "posterior raster size does not match its dimensions".into(),
        ));
    }
    let mut out = BufWriter::new(File::create(path).map_err(Error::io(path))?);
    let mut header = POSTERIOR_MAGIC.to_vec();
    for v in [
        raster.width as u32,
        raster.height as u32,
        raster.num_classes as u32,
    ] {
        header.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&header).map_err(Error::io(path))?;
    for v in &raster.values {
        out.write_all(&v.to_le_bytes()).map_err(Error::io(path))?;
    }
    out.flush().map_err(Error::io(path))
}

pub fn read_posteriors(path: &Path) -> Result<PosteriorRaster> {
    let bytes = fs::read(path).map_err(Error::io(path))?;
    let err = |offset: usize, message: String| Error::Format {
        path: path.to_path_buf(),
        offset: offset as u64,
        message,
    };
    if bytes.len() < 16 {
        return Err(err(
            bytes.len(),
            format!("truncated header: expected 16 bytes, found {}", bytes.len()),
        ));
    }
    if &bytes[..4] != POSTERIOR_MAGIC {
        return Err(err(0, "bad magic, expected \"PSP1\"".into()));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap()) as u64;
    let (w, h, l) = (word(4), word(8), word(12));
    if l == 0 || l > u8::MAX as u64 {
        return Err(err(12, format!("class count {l} out of range")));
    }
    let expected = w * h * l * 8 + 16;
    if bytes.len() as u64 != expected {
        return Err(err(
            bytes.len().min(expected as usize),
            format!("expected {expected} bytes in total, found {}", bytes.len()),
        ));
    }
    Ok(PosteriorRaster {
        width: w as usize,
        height: h as usize,
        num_classes: l as u8,
        values: bytes[16..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect(),
    })
}
