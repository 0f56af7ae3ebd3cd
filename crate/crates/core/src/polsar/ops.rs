use alloc::vec::Vec;

use super::eigen::hermitian_eigen;
use super::hermitian::{HermitianMat, ScatteringVector};
use crate::error::{Error, Result};

/// Relative eigenvalue floor applied before taking logarithms.
pub const REGULARIZATION_RELATIVE: f64 = 1e-6;
/// Absolute trace floor used when the trace itself vanishes.
pub const REGULARIZATION_ABSOLUTE: f64 = 1e-12;

/// Default side length of the boxcar window used to form covariances.
pub const DEFAULT_COVARIANCE_WINDOW: usize = 5;

/// Average of `k k†` over the given scattering vectors.
pub fn covariance_from_scattering(window: &[ScatteringVector]) -> Result<HermitianMat> {
    if window.is_empty() {
        return Err(Error::Empty("scattering window"));
    }
    if window.iter().any(|k| !k.is_finite()) {
        return Err(Error::NonFinite("scattering vector"));
    }
    let sum = window
        .iter()
        .fold(HermitianMat::ZERO, |acc, k| acc + HermitianMat::outer(k));
    Ok(sum.scale(1.0 / window.len() as f64))
}

/// Boxcar-averaged covariance raster from a row-major raster of scattering
/// vectors. The window is clipped at the image border.
pub fn boxcar_covariance(
    width: usize,
    height: usize,
    vectors: &[ScatteringVector],
    window: usize,
) -> Result<Vec<HermitianMat>> {
    if vectors.len() != width * height {
        return Err(Error::LengthMismatch {
            left: vectors.len(),
            right: width * height,
        });
    }
    if window == 0 {
        return Err(Error::Config("covariance window must be at least 1".into()));
    }
    let before = (window - 1) / 2;
    let after = window / 2;
    let mut out = Vec::with_capacity(vectors.len());
    let mut buf = Vec::with_capacity(window * window);
    for y in 0..height {
        for x in 0..width {
            buf.clear();
            let (y0, y1) = (y.saturating_sub(before), (y + after).min(height - 1));
            let (x0, x1) = (x.saturating_sub(before), (x + after).min(width - 1));
            for yy in y0..=y1 {
                buf.extend_from_slice(&vectors[yy * width + x0..=yy * width + x1]);
            }
            out.push(covariance_from_scattering(&buf).map_err(|e| e.at_pixel(x, y))?);
        }
    }
    Ok(out)
}

/// Total backscattered power, the trace of the covariance.
pub fn span(c: &HermitianMat) -> f64 {
    c.trace()
}

/// Eigenvalue floor used by [`matrix_log`] for a matrix with the given trace.
pub fn regularization_floor(trace: f64) -> f64 {
    REGULARIZATION_RELATIVE * trace.max(REGULARIZATION_ABSOLUTE)
}

/// Principal logarithm `U log(Λ) U†` after clamping eigenvalues to the
/// regularization floor.
pub fn matrix_log(c: &HermitianMat) -> Result<HermitianMat> {
    if !c.is_finite() {
        return Err(Error::NonFinite("covariance matrix"));
    }
    let eig = hermitian_eigen(c);
    let floor = regularization_floor(c.trace());
    let logs = eig.values.map(|l| libm::log(l.max(floor)));
    Ok(HermitianMat::from_spectrum(&logs, &eig.vectors))
}

/// The covariance that [`matrix_log`] actually takes the logarithm of.
pub fn regularize(c: &HermitianMat) -> HermitianMat {
    let eig = hermitian_eigen(c);
    let floor = regularization_floor(c.trace());
    HermitianMat::from_spectrum(&eig.values.map(|l| l.max(floor)), &eig.vectors)
}

/// Matrix exponential of a Hermitian matrix.
pub fn matrix_exp(l: &HermitianMat) -> Result<HermitianMat> {
    if !l.is_finite() {
        return Err(Error::NonFinite("matrix"));
    }
    let eig = hermitian_eigen(l);
    Ok(HermitianMat::from_spectrum(
        &eig.values.map(libm::exp),
        &eig.vectors,
    ))
}

/// Frobenius distance between two precomputed matrix logarithms.
#[inline]
pub fn log_euclidean_distance(la: &HermitianMat, lb: &HermitianMat) -> f64 {
    let (a, b) = (&la.0, &lb.0);
    let mut diag = 0.0;
    for i in 0..3 {
        let d = a[i] - b[i];
        diag += d * d;
    }
    let mut off = 0.0;
    for i in 3..9 {
        let d = a[i] - b[i];
        off += d * d;
    }
    libm::sqrt(diag + 2.0 * off)
}
