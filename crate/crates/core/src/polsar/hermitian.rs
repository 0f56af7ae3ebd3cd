use core::ops::{Add, Mul, Sub};

use num_complex::Complex64;

/// Dense 3×3 complex matrix, row-major.
pub type Mat3 = [[Complex64; 3]; 3];

/// Lexicographic scattering vector `(S_HH, √2·S_HV, S_VV)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatteringVector(pub [Complex64; 3]);

impl ScatteringVector {
    /// Builds the vector from the monostatic scattering matrix entries.
    pub fn from_scattering(s_hh: Complex64, s_hv: Complex64, s_vv: Complex64) -> Self {
        ScatteringVector([s_hh, s_hv * core::f64::consts::SQRT_2, s_vv])
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn power(&self) -> f64 {
        self.0.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// A 3×3 complex Hermitian matrix stored as its upper triangle.
///
/// Layout of the nine reals: `C11, C22, C33, Re C12, Im C12, Re C13, Im C13,
/// Re C23, Im C23`. The same order is used on disk.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HermitianMat(pub [f64; 9]);

// (row, col) of each stored off-diagonal pair, in storage order.
const UPPER: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

impl HermitianMat {
    pub const ZERO: HermitianMat = HermitianMat([0.0; 9]);
    pub const IDENTITY: HermitianMat = HermitianMat([1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);

    pub fn from_diag(d: [f64; 3]) -> Self {
        HermitianMat([d[0], d[1], d[2], 0.0, 0.0, 0.0, 0.0, 0.0, 0.0])
    }

    /// Builds from diagonal and upper off-diagonal entries `(C12, C13, C23)`.
    pub fn new(diag: [f64; 3], upper: [Complex64; 3]) -> Self {
        HermitianMat([
            diag[0],
            diag[1],
            diag[2],
            upper[0].re,
            upper[0].im,
            upper[1].re,
            upper[1].im,
            upper[2].re,
            upper[2].im,
        ])
    }

    /// Takes the upper triangle and real diagonal of a dense matrix. The lower
    /// triangle is ignored.
    pub fn from_upper(m: &Mat3) -> Self {
        HermitianMat::new(
            [m[0][0].re, m[1][1].re, m[2][2].re],
            [m[0][1], m[0][2], m[1][2]],
        )
    }

    pub fn diag(&self) -> [f64; 3] {
        [self.0[0], self.0[1], self.0[2]]
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        if row == col {
            return Complex64::new(self.0[row], 0.0);
        }
        let (r, c, conj) = if row < col {
            (row, col, false)
        } else {
            (col, row, true)
        };
        let k = UPPER
            .iter()
            .position(|&p| p == (r, c))
            .expect("index in 0..3");
        let z = Complex64::new(self.0[3 + 2 * k], self.0[4 + 2 * k]);
        if conj {
            z.conj()
        } else {
            z
        }
    }

    pub fn to_dense(&self) -> Mat3 {
        let mut m = [[Complex64::new(0.0, 0.0); 3]; 3];
        for (r, row) in m.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = self.get(r, c);
            }
        }
        m
    }

    pub fn trace(&self) -> f64 {
        self.0[0] + self.0[1] + self.0[2]
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    /// Squared Frobenius norm; off-diagonal entries count twice.
    pub fn frobenius_norm_sqr(&self) -> f64 {
        let d = &self.0;
        d[0] * d[0] + d[1] * d[1] + d[2] * d[2] + 2.0 * d[3..].iter().map(|v| v * v).sum::<f64>()
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.frobenius_norm_sqr())
    }

    /// Checks the covariance invariants: non-negative diagonal and every
    /// eigenvalue above `-1e-9 · trace`.
    pub fn is_psd(&self) -> bool {
        if !self.is_finite() || self.diag().iter().any(|&v| v < 0.0) {
            return false;
        }
        let tol = 1e-9 * self.trace().max(0.0);
        super::eigen::hermitian_eigen(self)
            .values
            .iter()
            .all(|&l| l >= -tol)
    }

    /// Outer product `k k†`.
    pub fn outer(k: &ScatteringVector) -> Self {
        let v = &k.0;
        HermitianMat::new(
            [v[0].norm_sqr(), v[1].norm_sqr(), v[2].norm_sqr()],
            [v[0] * v[1].conj(), v[0] * v[2].conj(), v[1] * v[2].conj()],
        )
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = self.0;
        out.iter_mut().for_each(|v| *v *= s);
        HermitianMat(out)
    }

    /// `U diag(values) U†`.
    pub fn from_spectrum(values: &[f64; 3], vectors: &Mat3) -> Self {
        let mut m = [[Complex64::new(0.0, 0.0); 3]; 3];
        for (r, row) in m.iter_mut().enumerate() {
            for (c, out) in row.iter_mut().enumerate().skip(r) {
                *out = (0..3)
                    .map(|k| vectors[r][k] * vectors[c][k].conj() * values[k])
                    .sum();
            }
        }
        HermitianMat::from_upper(&m)
    }
}

impl Add for HermitianMat {
    type Output = HermitianMat;
    fn add(self, rhs: HermitianMat) -> HermitianMat {
        let mut out = self.0;
        out.iter_mut().zip(rhs.0.iter()).for_each(|(a, b)| *a += b);
        HermitianMat(out)
    }
}

impl Sub for HermitianMat {
    type Output = HermitianMat;
    fn sub(self, rhs: HermitianMat) -> HermitianMat {
        let mut out = self.0;
        out.iter_mut().zip(rhs.0.iter()).for_each(|(a, b)| *a -= b);
        HermitianMat(out)
    }
}

impl Mul<f64> for HermitianMat {
    type Output = HermitianMat;
    fn mul(self, rhs: f64) -> HermitianMat {
        self.scale(rhs)
    }
}
