//! Eigendecomposition of 3×3 Hermitian matrices by cyclic complex Jacobi
//! rotations.

use num_complex::Complex64;

use super::hermitian::{HermitianMat, Mat3};

/// Relative off-diagonal Frobenius mass at which the sweep stops.
pub const JACOBI_TOLERANCE: f64 = 1e-12;
const MAX_SWEEPS: usize = 64;

/// Eigenvalues in ascending order; `vectors[i][k]` is component `i` of the
/// `k`-th unit eigenvector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HermitianEigen {
    pub values: [f64; 3],
    pub vectors: Mat3,
}

impl HermitianEigen {
    pub fn reconstruct(&self) -> HermitianMat {
        HermitianMat::from_spectrum(&self.values, &self.vectors)
    }
}

fn off_diagonal_mass(a: &Mat3) -> f64 {
    2.0 * (a[0][1].norm_sqr() + a[0][2].norm_sqr() + a[1][2].norm_sqr())
}

pub fn hermitian_eigen(h: &HermitianMat) -> HermitianEigen {
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let mut a = h.to_dense();
    let mut v = [[one, zero, zero], [zero, one, zero], [zero, zero, one]];

    let total = h.frobenius_norm_sqr();
    let threshold = JACOBI_TOLERANCE * JACOBI_TOLERANCE * total;

    for _ in 0..MAX_SWEEPS {
        let off = off_diagonal_mass(&a);
        if off <= threshold || off == 0.0 {
            break;
        }
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            let apq = a[p][q];
            let g = apq.norm();
            if g == 0.0 {
                continue;
            }
            // Phase that makes the (p, q) entry real and positive.
            let phase = apq / g;
            let app = a[p][p].re;
            let aqq = a[q][q].re;
            let tau = (aqq - app) / (2.0 * g);
            let t = if tau >= 0.0 {
                1.0 / (tau + libm::sqrt(1.0 + tau * tau))
            } else {
                -1.0 / (-tau + libm::sqrt(1.0 + tau * tau))
            };
            let c = 1.0 / libm::sqrt(1.0 + t * t);
            let s = t * c;

            // Columns p, q of the rotation U = diag(1, conj(phase)) · [[c, s], [-s, c]].
            let u_pp = Complex64::new(c, 0.0);
            let u_pq = Complex64::new(s, 0.0);
            let u_qp = -phase.conj() * s;
            let u_qq = phase.conj() * c;

            // A <- A U
            for row in a.iter_mut() {
                let (x, y) = (row[p], row[q]);
                row[p] = x * u_pp + y * u_qp;
                row[q] = x * u_pq + y * u_qq;
            }
            // A <- U† A
            for col in 0..3 {
                let (x, y) = (a[p][col], a[q][col]);
                a[p][col] = u_pp.conj() * x + u_qp.conj() * y;
                a[q][col] = u_pq.conj() * x + u_qq.conj() * y;
            }
            a[p][q] = zero;
            a[q][p] = zero;
            a[p][p].im = 0.0;
            a[q][q].im = 0.0;
            for row in v.iter_mut() {
                let (x, y) = (row[p], row[q]);
                row[p] = x * u_pp + y * u_qp;
                row[q] = x * u_pq + y * u_qq;
            }
        }
    }

    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| a[i][i].re.total_cmp(&a[j][j].re));
    let values = [
        a[order[0]][order[0]].re,
        a[order[1]][order[1]].re,
        a[order[2]][order[2]].re,
    ];
    let mut vectors = [[zero; 3]; 3];
    for (k, &src) in order.iter().enumerate() {
        for i in 0..3 {
            vectors[i][k] = v[i][src];
        }
    }
    HermitianEigen { values, vectors }
}
