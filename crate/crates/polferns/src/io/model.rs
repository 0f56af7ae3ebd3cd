//! Versioned text serialization of fern models.
//!
//! ```text
//! polferns-model v1
//! classes 5
//! smoothing 1.0
//! patch-radius 25.0
//! log-prior -1.6094379124341003 ... (one per class)
//! ferns 30
//! fern 0 size 8
//! feature one-point r=3.5 alpha=120.0 s=3 delta=0.7 ref=c11,c22,c33,re12,im12,re13,im13,re23,im23
//! feature two-point r=3.5 alpha=120.0 s=3 r2=9.0 alpha2=10.0 s2=1 delta=0.7
//! counts
//! n_1 ... n_L            (2^size lines, bin 0 first)
//! end
//! ```
//!
//! Floats are written in Rust's shortest round-trip notation, so loading a
//! saved model reproduces it bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use polferns_core::features::{BinaryFeature, Projection, RegionSpec};
use polferns_core::ferns::{Fern, RandomFernsModel};
use polferns_core::polsar::HermitianMat;

use crate::error::{Error, Result};

pub const MODEL_HEADER: &str = "polferns-model v1";

fn region(out: &mut String, suffix: &str, r: &RegionSpec) {
    write!(
        out,
        " r{suffix}={:?} alpha{suffix}={:?} s{suffix}={}",
        r.radius, r.angle_deg, r.size
    )
    .unwrap();
}

fn feature_line(f: &BinaryFeature) -> String {
    let mut out = String::from("feature");
    match &f.projection {
        Projection::OnePoint {
            region: r,
            reference,
        } => {
            out.push_str(" one-point");
            region(&mut out, "", r);
            write!(out, " delta={:?} ref=", f.threshold).unwrap();
            let values: Vec<String> = reference.0.iter().map(|v| format!("{v:?}")).collect();
            out.push_str(&values.join(","));
        }
        Projection::TwoPoint { first, second } => {
            out.push_str(" two-point");
            region(&mut out, "", first);
            region(&mut out, "2", second);
            write!(out, " delta={:?}", f.threshold).unwrap();
        }
    }
    out
}

pub fn serialize_model(model: &RandomFernsModel) -> String {
    let mut out = String::new();
    let l = model.num_classes() as usize;
    writeln!(out, "{MODEL_HEADER}").unwrap();
    writeln!(out, "classes {l}").unwrap();
    writeln!(out, "smoothing {:?}", model.smoothing()).unwrap();
    writeln!(out, "patch-radius {:?}", model.patch_radius()).unwrap();
    let prior: Vec<String> = model
        .class_log_prior()
        .iter()
        .map(|v| format!("{v:?}"))
        .collect();
    writeln!(out, "log-prior {}", prior.join(" ")).unwrap();
    writeln!(out, "ferns {}", model.num_ferns()).unwrap();
    for (j, fern) in model.ferns().iter().enumerate() {
        writeln!(out, "fern {j} size {}", fern.len()).unwrap();
        for f in fern.features() {
            writeln!(out, "{}", feature_line(f)).unwrap();
        }
        out.push_str("counts\n");
        for row in fern.counts().chunks(l) {
            let row: Vec<String> = row.iter().map(|c| c.to_string()).collect();
            writeln!(out, "{}", row.join(" ")).unwrap();
        }
    }
    out.push_str("end\n");
    out
}

struct Lines<'a> {
    path: PathBuf,
    iter: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn err(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.clone(),
            line: self.line,
            message: message.into(),
        }
    }

    fn next(&mut self, what: &str) -> Result<&'a str> {
        match self.iter.next() {
            Some((i, text)) => {
                self.line = i + 1;
                Ok(text)
            }
            None => {
                self.line += 1;
                Err(self.err(format!("unexpected end of file, expected {what}")))
            }
        }
    }

    /// Next line as `key value...`; returns the remainder after the key.
    fn keyed(&mut self, key: &str) -> Result<&'a str> {
        let text = self.next(key)?;
        match text.split_once(' ') {
            Some((k, rest)) if k == key => Ok(rest),
            _ => Err(self.err(format!("expected `{key} ...`, found {text:?}"))),
        }
    }

    fn parse<T: std::str::FromStr>(&self, token: &str, what: &str) -> Result<T> {
        token
            .parse()
            .map_err(|_| self.err(format!("invalid {what} {token:?}")))
    }
}

fn parse_feature(lines: &mut Lines<'_>) -> Result<BinaryFeature> {
    let text = lines.next("a feature line")?;
    let mut tokens = text.split(' ');
    if tokens.next() != Some("feature") {
        return Err(lines.err(format!("expected a feature line, found {text:?}")));
    }
    let kind = tokens.next().unwrap_or("");
    let mut field = |key: &str| -> Result<&str> {
        let token = tokens.next().unwrap_or("");
        match token.split_once('=') {
            Some((k, v)) if k == key => Ok(v),
            _ => Err(lines.err(format!("expected `{key}=...`, found {token:?}"))),
        }
    };
    let mut values = Vec::new();
    let keys: &[&str] = match kind {
        "one-point" => &["r", "alpha", "s", "delta", "ref"],
        "two-point" => &["r", "alpha", "s", "r2", "alpha2", "s2", "delta"],
        _ => return Err(lines.err(format!("unknown feature kind {kind:?}"))),
    };
    for key in keys {
        values.push(field(key)?.to_string());
    }
    if tokens.next().is_some() {
        return Err(lines.err("unexpected trailing fields"));
    }
    let spec = |lines: &Lines<'_>, v: &[String]| -> Result<RegionSpec> {
        Ok(RegionSpec {
            radius: lines.parse(&v[0], "radius")?,
            angle_deg: lines.parse(&v[1], "angle")?,
            size: lines.parse(&v[2], "region size")?,
        })
    };
    let first = spec(lines, &values[0..3])?;
    let (projection, threshold) = if kind == "one-point" {
        let parts: Vec<&str> = values[4].split(',').collect();
        if parts.len() != 9 {
            return Err(lines.err(format!("reference needs 9 values, found {}", parts.len())));
        }
        let mut reference = [0.0; 9];
        for (slot, p) in reference.iter_mut().zip(parts) {
            *slot = lines.parse(p, "reference value")?;
        }
        (
            Projection::OnePoint {
                region: first,
                reference: HermitianMat(reference),
            },
            lines.parse(&values[3], "threshold")?,
        )
    } else {
        (
            Projection::TwoPoint {
                first,
                second: spec(lines, &values[3..6])?,
            },
            lines.parse(&values[6], "threshold")?,
        )
    };
    Ok(BinaryFeature {
        projection,
        threshold,
    })
}

pub fn parse_model(path: &Path, text: &str) -> Result<RandomFernsModel> {
    let mut lines = Lines {
        path: path.to_path_buf(),
        iter: text.lines().enumerate(),
        line: 0,
    };
    let header = lines.next("the format header")?;
    if header != MODEL_HEADER {
        return Err(lines.err(format!(
            "unsupported format {header:?}, expected {MODEL_HEADER:?}"
        )));
    }
    let classes: u8 = {
        let v = lines.keyed("classes")?;
        lines.parse(v, "class count")?
    };
    let smoothing: f64 = {
        let v = lines.keyed("smoothing")?;
        lines.parse(v, "smoothing")?
    };
    let patch_radius: f64 = {
        let v = lines.keyed("patch-radius")?;
        lines.parse(v, "patch radius")?
    };
    let prior = lines
        .keyed("log-prior")?
        .split(' ')
        .map(|t| lines.parse::<f64>(t, "log prior"))
        .collect::<Result<Vec<_>>>()?;
    let num_ferns: usize = {
        let v = lines.keyed("ferns")?;
        lines.parse(v, "fern count")?
    };
    let mut ferns = Vec::with_capacity(num_ferns.min(1 << 16));
    for j in 0..num_ferns {
        let rest = lines.keyed("fern")?;
        let size = match rest.split(' ').collect::<Vec<_>>()[..] {
            [idx, "size", n] if idx == j.to_string() => lines.parse::<usize>(n, "fern size")?,
            _ => return Err(lines.err(format!("expected `fern {j} size N`, found {rest:?}"))),
        };
        if size > polferns_core::ferns::MAX_FERN_SIZE {
            return Err(lines.err(format!(
                "fern size {size} exceeds {}",
                polferns_core::ferns::MAX_FERN_SIZE
            )));
        }
        let features = (0..size)
            .map(|_| parse_feature(&mut lines))
            .collect::<Result<Vec<_>>>()?;
        let marker = lines.next("counts")?;
        if marker != "counts" {
            return Err(lines.err(format!("expected `counts`, found {marker:?}")));
        }
        let mut counts = Vec::with_capacity((1usize << size) * classes as usize);
        for _ in 0..1usize << size {
            let row = lines.next("a counts row")?;
            let before = counts.len();
            for t in row.split(' ') {
                counts.push(lines.parse::<u32>(t, "count")?);
            }
            if counts.len() - before != classes as usize {
                return Err(lines.err(format!(
                    "expected {classes} counts, found {}",
                    counts.len() - before
                )));
            }
        }
        let fern =
            Fern::from_counts(features, classes, counts).map_err(|e| lines.err(e.to_string()))?;
        ferns.push(fern);
    }
    if lines.next("end")? != "end" {
        return Err(lines.err("expected `end`"));
    }
    if let Some((i, _)) = lines.iter.find(|(_, l)| !l.trim().is_empty()) {
        lines.line = i + 1;
        return Err(lines.err("content after `end`"));
    }
    RandomFernsModel::new(ferns, classes, smoothing, prior, patch_radius)
        .map_err(|e| lines.err(e.to_string()))
}

pub fn save_model(path: &Path, model: &RandomFernsModel) -> Result<()> {
    fs::write(path, serialize_model(model)).map_err(Error::io(path))
}

pub fn load_model(path: &Path) -> Result<RandomFernsModel> {
    let text = fs::read_to_string(path).map_err(Error::io(path))?;
    parse_model(path, &text)
}
