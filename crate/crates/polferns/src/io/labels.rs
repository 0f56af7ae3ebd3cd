//! Label maps as binary PGM (`P5`, maxval 255): 0 is unlabeled, 1..=L are
//! classes.

use std::fs;
use std::path::Path;

use polferns_core::polsar::LabelMap;

use crate::error::{Error, Result};

pub fn encode_label_map(map: &LabelMap) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", map.width(), map.height()).into_bytes();
    out.extend_from_slice(map.labels());
    out
}

pub fn write_label_map(path: &Path, map: &LabelMap) -> Result<()> {
    fs::write(path, encode_label_map(map)).map_err(Error::io(path))
}

struct Header {
    width: usize,
    height: usize,
    body_offset: usize,
}

fn parse_header(path: &Path, bytes: &[u8]) -> Result<Header> {
    let err = |offset: usize, message: String| Error::Format {
        path: path.to_path_buf(),
        offset: offset as u64,
        message,
    };
    let mut pos = 0;
    let mut tokens = Vec::with_capacity(4);
    while tokens.len() < 4 {
        // Whitespace and comments between tokens.
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while bytes
            .get(pos)
            .is_some_and(|b| !b.is_ascii_whitespace() && *b != b'#')
        {
            pos += 1;
        }
        if start == pos {
            return Err(err(pos, "truncated PGM header".into()));
        }
        tokens.push((
            start,
            String::from_utf8_lossy(&bytes[start..pos]).into_owned(),
        ));
    }
    if tokens[0].1 != "P5" {
        return Err(err(
            0,
            format!("expected binary PGM magic \"P5\", found {:?}", tokens[0].1),
        ));
    }
    let number = |(offset, text): &(usize, String)| {
        text.parse::<usize>().map_err(|_| {
            err(
                *offset,
                format!("expected a decimal number, found {text:?}"),
            )
        })
    };
    let width = number(&tokens[1])?;
    let height = number(&tokens[2])?;
    let maxval = number(&tokens[3])?;
    if maxval != 255 {
        return Err(err(
            tokens[3].0,
            format!("maxval must be 255, found {maxval}"),
        ));
    }
    // Exactly one whitespace byte separates the header from the raster.
    if !bytes.get(pos).is_some_and(|b| b.is_ascii_whitespace()) {
        return Err(err(pos, "missing whitespace after maxval".into()));
    }
    Ok(Header {
        width,
        height,
        body_offset: pos + 1,
    })
}

/// Parses a PGM label map. With `num_classes = None` the class count is the
/// largest label present (at least 1).
pub fn decode_label_map(path: &Path, bytes: &[u8], num_classes: Option<u8>) -> Result<LabelMap> {
    let header = parse_header(path, bytes)?;
    let n = header
        .width
        .checked_mul(header.height)
        .ok_or_else(|| Error::Format {
            path: path.to_path_buf(),
            offset: 0,
            message: format!("dimensions {}x{} overflow", header.width, header.height),
        })?;
    let body = &bytes[header.body_offset..];
    if body.len() != n {
        return Err(Error::Format {
            path: path.to_path_buf(),
            offset: (header.body_offset + body.len().min(n)) as u64,
            message: format!("expected {n} raster bytes, found {}", body.len()),
        });
    }
    let max = body.iter().copied().max().unwrap_or(0);
    let classes = num_classes.unwrap_or(max.max(1));
    if let Some(i) = body.iter().position(|&v| v > classes) {
        return Err(Error::Format {
            path: path.to_path_buf(),
            offset: (header.body_offset + i) as u64,
            message: format!("label {} exceeds the class count {classes}", body[i]),
        });
    }
    Ok(LabelMap::new(
        header.width,
        header.height,
        classes,
        body.to_vec(),
    )?)
}

pub fn read_label_map(path: &Path, num_classes: Option<u8>) -> Result<LabelMap> {
    let bytes = fs::read(path).map_err(Error::io(path))?;
    decode_label_map(path, &bytes, num_classes)
}
