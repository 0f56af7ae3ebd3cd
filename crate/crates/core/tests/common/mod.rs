#![allow(dead_code)]

use num_complex::Complex64;
use polferns_core::polsar::{precompute_image, HermitianMat, Mat3, PolSarImage};
use rand::Rng;
use rand_distr::StandardNormal;

pub type C = Complex64;

pub fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

pub fn zero() -> Mat3 {
    [[c(0.0, 0.0); 3]; 3]
}

pub fn mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = zero();
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

pub fn adjoint(a: &Mat3) -> Mat3 {
    let mut out = zero();
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[j][i].conj();
        }
    }
    out
}

pub fn diag(d: [f64; 3]) -> Mat3 {
    let mut out = zero();
    for i in 0..3 {
        out[i][i] = c(d[i], 0.0);
    }
    out
}

pub fn max_abs_diff(a: &Mat3, b: &Mat3) -> f64 {
    let mut m: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            m = m.max((a[i][j] - b[i][j]).norm());
        }
    }
    m
}

pub fn frobenius(a: &Mat3) -> f64 {
    a.iter().flatten().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

pub fn gaussian<R: Rng>(rng: &mut R) -> C {
    c(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Random unitary from Gram-Schmidt on a complex Gaussian matrix.
pub fn random_unitary<R: Rng>(rng: &mut R) -> Mat3 {
    let mut cols: Vec<[C; 3]> = Vec::new();
    while cols.len() < 3 {
        let mut v = [gaussian(rng), gaussian(rng), gaussian(rng)];
        for u in &cols {
            let dot: C = (0..3).map(|i| u[i].conj() * v[i]).sum();
            for i in 0..3 {
                v[i] -= dot * u[i];
            }
        }
        let n = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if n > 1e-6 {
            cols.push(v.map(|x| x / n));
        }
    }
    let mut q = zero();
    for (j, col) in cols.iter().enumerate() {
        for i in 0..3 {
            q[i][j] = col[i];
        }
    }
    q
}

/// Q diag(d) Q† as a stored Hermitian matrix.
pub fn with_spectrum(q: &Mat3, d: [f64; 3]) -> HermitianMat {
    HermitianMat::from_upper(&mul(&mul(q, &diag(d)), &adjoint(q)))
}

/// Random well-conditioned positive definite matrix.
pub fn random_spd<R: Rng>(rng: &mut R) -> HermitianMat {
    let q = random_unitary(rng);
    let d = [0.0; 3].map(|_: f64| (rng.random_range(-3.0..3.0f64)).exp());
    with_spectrum(&q, d)
}

/// Random Hermitian matrix with entries in [-bound, bound].
pub fn random_hermitian<R: Rng>(rng: &mut R, bound: f64) -> HermitianMat {
    let mut r = || rng.random_range(-bound..bound);
    HermitianMat::new([r(), r(), r()], [c(r(), r()), c(r(), r()), c(r(), r())])
}

pub fn random_image<R: Rng>(rng: &mut R, width: usize, height: usize) -> PolSarImage {
    let cov = (0..width * height).map(|_| random_spd(rng)).collect();
    precompute_image(width, height, cov).unwrap()
}
