use alloc::vec::Vec;

use super::hermitian::HermitianMat;
use super::ops::{matrix_log, span};
use crate::error::{Error, Result};

/// Pixel coordinate, `x` along a row and `y` down the columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pixel {
    pub x: usize,
    pub y: usize,
}

impl Pixel {
    pub const fn new(x: usize, y: usize) -> Self {
        Pixel { x, y }
    }
}

/// A covariance raster with its per-pixel matrix logarithms and spans.
///
/// Construct through [`precompute_image`]; the three rasters are kept
/// consistent and are read-only afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct PolSarImage {
    width: usize,
    height: usize,
    cov: Vec<HermitianMat>,
    log_cov: Vec<HermitianMat>,
    span: Vec<f64>,
    // representatives[s - 2][i]: maximal-span pixel of the s × s window
    // anchored at pixel i, for s in 2..=CACHED_REGION_SIZE.
    representatives: Vec<Vec<u32>>,
}

/// Largest region size whose maximal-span pixels are tabulated per image.
pub const CACHED_REGION_SIZE: usize = 9;

impl PolSarImage {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.cov.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cov.is_empty()
    }

    #[inline]
    pub fn index(&self, p: Pixel) -> usize {
        p.y * self.width + p.x
    }

    #[inline]
    pub fn pixel(&self, index: usize) -> Pixel {
        Pixel::new(index % self.width, index / self.width)
    }

    pub fn contains(&self, p: Pixel) -> bool {
        p.x < self.width && p.y < self.height
    }

    pub fn cov(&self) -> &[HermitianMat] {
        &self.cov
    }

    pub fn log_cov(&self) -> &[HermitianMat] {
        &self.log_cov
    }

    pub fn spans(&self) -> &[f64] {
        &self.span
    }

    #[inline]
    pub fn log_at(&self, index: usize) -> &HermitianMat {
        &self.log_cov[index]
    }

    #[inline]
    pub fn span_at(&self, index: usize) -> f64 {
        self.span[index]
    }

    /// Tabulated maximal-span pixel for window `size` anchored at `index`,
    /// when that size is cached.
    #[inline]
    pub fn cached_representative(&self, index: usize, size: usize) -> Option<usize> {
        self.representatives
            .get(size.wrapping_sub(2))
            .map(|t| t[index] as usize)
    }

    /// Consumes the image and returns its covariance raster.
    pub fn into_cov(self) -> Vec<HermitianMat> {
        self.cov
    }
}

/// Computes the logarithm and span rasters for a row-major covariance raster.
pub fn precompute_image(
    width: usize,
    height: usize,
    cov: Vec<HermitianMat>,
) -> Result<PolSarImage> {
    if width == 0 || height == 0 {
        return Err(Error::Empty("covariance raster"));
    }
    let n = width
        .checked_mul(height)
        .ok_or(Error::Config("raster dimensions overflow".into()))?;
    if cov.len() != n {
        return Err(Error::LengthMismatch {
            left: cov.len(),
            right: n,
        });
    }
    let log_one = |(i, c): (usize, &HermitianMat)| {
        matrix_log(c).map_err(|e| e.at_pixel(i % width, i / width))
    };

    #[cfg(feature = "parallel")]
    let log_cov = {
        use rayon::prelude::*;
        cov.par_iter()
            .enumerate()
            .map(log_one)
            .collect::<Result<Vec<_>>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let log_cov = cov
        .iter()
        .enumerate()
        .map(log_one)
        .collect::<Result<Vec<_>>>()?;

    let span: Vec<f64> = cov.iter().map(span).collect();
    let representatives = if n <= u32::MAX as usize {
        (2..=CACHED_REGION_SIZE)
            .map(|size| window_argmax(width, height, &span, size))
            .collect()
    } else {
        Vec::new()
    };
    Ok(PolSarImage {
        width,
        height,
        cov,
        log_cov,
        span,
        representatives,
    })
}

/// Index of the first maximum, in row-major order, of every clipped
/// `size × size` window. Windows extend `(size - 1) / 2` pixels up and left
/// of their anchor and `size / 2` pixels down and right.
fn window_argmax(width: usize, height: usize, values: &[f64], size: usize) -> Vec<u32> {
    let before = (size - 1) / 2;
    let after = size / 2;
    // Horizontal pass: first maximum along each row segment.
    let mut horizontal = alloc::vec![0u32; width * height];
    for y in 0..height {
        let row = y * width;
        for x in 0..width {
            let x0 = x.saturating_sub(before);
            let x1 = (x + after).min(width - 1);
            let mut best = row + x0;
            for i in row + x0 + 1..=row + x1 {
                if values[i] > values[best] {
                    best = i;
                }
            }
            horizontal[row + x] = best as u32;
        }
    }
    // Vertical pass: earlier rows win ties, which preserves row-major order.
    let mut out = alloc::vec![0u32; width * height];
    for y in 0..height {
        let y0 = y.saturating_sub(before);
        let y1 = (y + after).min(height - 1);
        for x in 0..width {
            let mut best = horizontal[y0 * width + x];
            for yy in y0 + 1..=y1 {
                let c = horizontal[yy * width + x];
                if values[c as usize] > values[best as usize] {
                    best = c;
                }
            }
            out[y * width + x] = best;
        }
    }
    out
}

/// Row-major class raster. `0` marks an unlabeled pixel, `1..=num_classes`
/// are classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    width: usize,
    height: usize,
    num_classes: u8,
    labels: Vec<u8>,
}

impl LabelMap {
    pub fn new(width: usize, height: usize, num_classes: u8, labels: Vec<u8>) -> Result<Self> {
        if labels.len() != width * height {
            return Err(Error::LengthMismatch {
                left: labels.len(),
                right: width * height,
            });
        }
        if let Some(&label) = labels.iter().find(|&&l| l > num_classes) {
            return Err(Error::LabelOutOfRange {
                label,
                classes: num_classes,
            });
        }
        Ok(LabelMap {
            width,
            height,
            num_classes,
            labels,
        })
    }

    pub fn unlabeled(width: usize, height: usize, num_classes: u8) -> Self {
        LabelMap {
            width,
            height,
            num_classes,
            labels: alloc::vec![0; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn num_classes(&self) -> u8 {
        self.num_classes
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn get(&self, p: Pixel) -> u8 {
        self.labels[p.y * self.width + p.x]
    }

    pub fn set(&mut self, p: Pixel, label: u8) {
        assert!(label <= self.num_classes, "label {label} out of range");
        self.labels[p.y * self.width + p.x] = label;
    }

    pub fn same_shape(&self, width: usize, height: usize) -> bool {
        self.width == width && self.height == height
    }

    /// Labeled pixels of class `c`, in row-major order.
    pub fn pixels_of(&self, class: u8) -> Vec<Pixel> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == class)
            .map(|(i, _)| Pixel::new(i % self.width, i / self.width))
            .collect()
    }

    /// Number of labeled pixels per class, indexed by `class - 1`.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = alloc::vec![0; self.num_classes as usize];
        for &l in &self.labels {
            if l > 0 {
                counts[l as usize - 1] += 1;
            }
        }
        counts
    }

    /// Copy with every pixel outside `keep` set to unlabeled.
    pub fn masked(&self, keep: impl Fn(Pixel) -> bool) -> LabelMap {
        let labels = self
            .labels
            .iter()
            .enumerate()
            .map(|(i, &l)| {
                if keep(Pixel::new(i % self.width, i / self.width)) {
                    l
                } else {
                    0
                }
            })
            .collect();
        LabelMap { labels, ..*self }
    }
}
