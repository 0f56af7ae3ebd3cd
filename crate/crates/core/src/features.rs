//! Binary patch features over covariance images.
//!
//! A feature picks one or two regions around the query pixel, reduces each
//! region to the pixel with maximal span, measures the log-Euclidean distance
//! between the two (or between one region and a fixed reference matrix) and
//! compares that distance with a threshold.

use rand::seq::index;
use rand::Rng;

use crate::error::{Error, Result};
use crate::polsar::{log_euclidean_distance, HermitianMat, Pixel, PolSarImage};

/// Maximum number of training pixels used to estimate a threshold range.
pub const THRESHOLD_SUBSAMPLE: usize = 1000;

/// A region offset from the patch center in polar form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionSpec {
    /// Distance from the patch center in pixels.
    pub radius: f64,
    /// Orientation in degrees, counter-clockwise from +x with y pointing down.
    pub angle_deg: f64,
    /// Side length of the square region.
    pub size: u32,
}

impl RegionSpec {
    pub const CENTER: RegionSpec = RegionSpec {
        radius: 0.0,
        angle_deg: 0.0,
        size: 1,
    };

    /// Integer pixel offset of the region anchor.
    pub fn offset(&self) -> (i64, i64) {
        let rad = self.angle_deg.to_radians();
        (
            libm::round(self.radius * libm::cos(rad)) as i64,
            libm::round(self.radius * libm::sin(rad)) as i64,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Projection {
    /// Region compared against the log-covariance of a fixed reference pixel.
    OnePoint {
        region: RegionSpec,
        reference: HermitianMat,
    },
    /// Two regions of the same patch compared with each other.
    TwoPoint {
        first: RegionSpec,
        second: RegionSpec,
    },
}

impl Projection {
    pub fn is_one_point(&self) -> bool {
        matches!(self, Projection::OnePoint { .. })
    }

    /// Scalar projection of the patch centered at `center`; always `>= 0`.
    #[inline]
    pub fn project(&self, img: &PolSarImage, center: Pixel) -> f64 {
        match self {
            Projection::OnePoint { region, reference } => {
                let a = region_representative(
                    img,
                    region_anchor(img.width(), img.height(), center, region),
                    region.size,
                );
                log_euclidean_distance(img.log_at(a), reference)
            }
            Projection::TwoPoint { first, second } => {
                let a = region_representative(
                    img,
                    region_anchor(img.width(), img.height(), center, first),
                    first.size,
                );
                let b = region_representative(
                    img,
                    region_anchor(img.width(), img.height(), center, second),
                    second.size,
                );
                log_euclidean_distance(img.log_at(a), img.log_at(b))
            }
        }
    }
}

/// A projection plus threshold; evaluates to one bit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinaryFeature {
    pub projection: Projection,
    pub threshold: f64,
}

impl BinaryFeature {
    #[inline]
    pub fn eval(&self, img: &PolSarImage, center: Pixel) -> bool {
        self.projection.project(img, center) >= self.threshold
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureConfig {
    pub r_max: f64,
    pub s_max: u32,
    pub one_point_prob: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            r_max: 25.0,
            s_max: 9,
            one_point_prob: 0.5,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<()> {
        // r_max = 0 is accepted: it pins every region to the patch center.
        if !(self.r_max >= 0.0 && self.r_max.is_finite()) {
            return Err(Error::Config(alloc::format!(
                "r_max must be finite and >= 0, got {}",
                self.r_max
            )));
        }
        if self.s_max < 1 {
            return Err(Error::Config("s_max must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.one_point_prob) {
            return Err(Error::Config(alloc::format!(
                "one_point_prob must lie in [0, 1], got {}",
                self.one_point_prob
            )));
        }
        Ok(())
    }
}

/// Anchor of a region: the center shifted by the rounded polar offset,
/// clamped to the image.
pub fn region_anchor(width: usize, height: usize, center: Pixel, spec: &RegionSpec) -> Pixel {
    let (dx, dy) = spec.offset();
    let x = (center.x as i64 + dx).clamp(0, width as i64 - 1);
    let y = (center.y as i64 + dy).clamp(0, height as i64 - 1);
    Pixel::new(x as usize, y as usize)
}

/// Row-major index of the maximal-span pixel in the `size × size` window
/// around `anchor`, clipped to the image. The first maximum in row-major
/// order wins.
#[inline]
pub fn region_representative(img: &PolSarImage, anchor: Pixel, size: u32) -> usize {
    let size = size.max(1) as usize;
    if size == 1 {
        return img.index(anchor);
    }
    if let Some(i) = img.cached_representative(img.index(anchor), size) {
        return i;
    }
    scan_representative(img, anchor, size)
}

/// Direct window scan behind [`region_representative`].
pub fn scan_representative(img: &PolSarImage, anchor: Pixel, size: usize) -> usize {
    let before = (size - 1) / 2;
    let after = size / 2;
    let x0 = anchor.x.saturating_sub(before);
    let x1 = (anchor.x + after).min(img.width() - 1);
    let y0 = anchor.y.saturating_sub(before);
    let y1 = (anchor.y + after).min(img.height() - 1);
    let spans = img.spans();
    let mut best = y0 * img.width() + x0;
    let mut best_span = spans[best];
    for y in y0..=y1 {
        let row = y * img.width();
        for (i, &s) in spans[row + x0..=row + x1].iter().enumerate() {
            if s > best_span {
                best_span = s;
                best = row + x0 + i;
            }
        }
    }
    best
}

pub fn project(feature: &BinaryFeature, img: &PolSarImage, center: Pixel) -> f64 {
    feature.projection.project(img, center)
}

pub fn eval_feature(feature: &BinaryFeature, img: &PolSarImage, center: Pixel) -> bool {
    feature.eval(img, center)
}

fn sample_region<R: Rng + ?Sized>(rng: &mut R, cfg: &FeatureConfig) -> RegionSpec {
    RegionSpec {
        radius: if cfg.r_max > 0.0 {
            rng.random_range(0.0..cfg.r_max)
        } else {
            0.0
        },
        angle_deg: rng.random_range(0.0..360.0),
        size: rng.random_range(1..=cfg.s_max),
    }
}

/// Draws a projection; one-point references come from a random training pixel.
pub fn sample_projection<R: Rng + ?Sized>(
    rng: &mut R,
    cfg: &FeatureConfig,
    img: &PolSarImage,
    samples: &[Pixel],
) -> Result<Projection> {
    if samples.is_empty() {
        return Err(Error::Empty("training samples"));
    }
    let one_point = rng.random_bool(cfg.one_point_prob);
    let first = sample_region(rng, cfg);
    Ok(if one_point {
        let reference = samples[rng.random_range(0..samples.len())];
        Projection::OnePoint {
            region: first,
            reference: *img.log_at(img.index(reference)),
        }
    } else {
        Projection::TwoPoint {
            first,
            second: sample_region(rng, cfg),
        }
    })
}

/// Min and max of the projection over a uniform subsample of at most
/// [`THRESHOLD_SUBSAMPLE`] training pixels.
pub fn threshold_range<R: Rng + ?Sized>(
    rng: &mut R,
    projection: &Projection,
    img: &PolSarImage,
    samples: &[Pixel],
) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Err(Error::Empty("training samples"));
    }
    let k = samples.len().min(THRESHOLD_SUBSAMPLE);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in index::sample(rng, samples.len(), k) {
        let v = projection.project(img, samples[i]);
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok((lo, hi))
}

/// Draws a threshold uniformly from the projection's observed range.
pub fn sample_threshold<R: Rng + ?Sized>(
    rng: &mut R,
    projection: &Projection,
    img: &PolSarImage,
    samples: &[Pixel],
) -> Result<f64> {
    let (lo, hi) = threshold_range(rng, projection, img, samples)?;
    Ok(if hi > lo {
        lo + (hi - lo) * rng.random::<f64>()
    } else {
        lo
    })
}

/// Draws a complete random binary feature.
pub fn sample_feature<R: Rng + ?Sized>(
    rng: &mut R,
    cfg: &FeatureConfig,
    img: &PolSarImage,
    samples: &[Pixel],
) -> Result<BinaryFeature> {
    let projection = sample_projection(rng, cfg, img, samples)?;
    let threshold = sample_threshold(rng, &projection, img, samples)?;
    Ok(BinaryFeature {
        projection,
        threshold,
    })
}
