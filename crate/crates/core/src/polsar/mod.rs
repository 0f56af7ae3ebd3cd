//! Polarimetric data model: covariance matrices, spans, matrix logarithms and
//! the log-Euclidean distance.

mod eigen;
mod hermitian;
mod image;
mod ops;

pub use eigen::{hermitian_eigen, HermitianEigen, JACOBI_TOLERANCE};
pub use hermitian::{HermitianMat, Mat3, ScatteringVector};
pub use image::{precompute_image, LabelMap, Pixel, PolSarImage, CACHED_REGION_SIZE};
pub use ops::{
    boxcar_covariance, covariance_from_scattering, log_euclidean_distance, matrix_exp, matrix_log,
    regularization_floor, regularize, span, DEFAULT_COVARIANCE_WINDOW, REGULARIZATION_ABSOLUTE,
    REGULARIZATION_RELATIVE,
};
