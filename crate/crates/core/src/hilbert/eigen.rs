//! Hermitian eigendecomposition by cyclic complex Jacobi rotations, and the
//! matrix functions built on it.
//!
//! Jacobi is slow for large matrices but the spaces simulated here stay in the
//! tens of dimensions, where it is accurate to a few ulps and needs no
//! pivoting or deflation logic.

use alloc::vec::Vec;

use num_traits::Float;

use super::{CMatrix, C64};
use crate::{Error, Result};

const MAX_SWEEPS: usize = 100;

/// `A = V diag(values) V†` with orthonormal columns in `vectors`.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl HermitianEigen {
    /// Rebuilds `V f(Λ) V†` for a scalar function of the eigenvalues.
    pub fn map(&self, f: impl Fn(f64) -> C64) -> CMatrix {
        let n = self.values.len();
        let fv: Vec<C64> = self.values.iter().map(|&l| f(l)).collect();
        let v = &self.vectors;
        CMatrix::from_fn(n, |r, c| {
            (0..n).map(|k| v[(r, k)] * fv[k] * v[(c, k)].conj()).sum()
        })
    }
}

fn off_diagonal_norm(a: &CMatrix) -> f64 {
    let n = a.dim();
    let mut s = 0.0;
    for r in 0..n {
        for c in 0..n {
            if r != c {
                s += a[(r, c)].norm_sqr();
            }
        }
    }
    Float::sqrt(s)
}

/// Diagonalizes a Hermitian matrix. The input must be Hermitian within
/// `EPS_NORM`; its lower triangle is taken as the conjugate of the upper one.
pub fn hermitian_eigen(m: &CMatrix) -> Result<HermitianEigen> {
    if !m.is_hermitian(crate::EPS_NORM) {
        return Err(Error::arg("eigendecomposition requires a Hermitian matrix"));
    }
    let n = m.dim();
    let mut a = CMatrix::from_fn(n, |r, c| {
        if r == c {
            C64::new(m[(r, r)].re, 0.0)
        } else if r < c {
            m[(r, c)]
        } else {
            m[(c, r)].conj()
        }
    });
    let mut v = CMatrix::identity(n);
    let scale = a.frobenius_norm().max(f64::MIN_POSITIVE);

    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(&a) <= 1e-15 * scale {
            let values = (0..n).map(|i| a[(i, i)].re).collect();
            return Ok(HermitianEigen { values, vectors: v });
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let g = a[(p, q)];
                let r = g.norm();
                if r <= 1e-300 {
                    continue;
                }
                let phase = g / r;
                let theta = (a[(q, q)].re - a[(p, p)].re) / (2.0 * r);
                let t = Float::signum(theta) / (Float::abs(theta) + Float::sqrt(theta * theta + 1.0));
                let c = 1.0 / Float::sqrt(1.0 + t * t);
                let s = t * c;
                // J = D R with D = diag(1, conj(phase)) on (p, q):
                // J_pp = c, J_pq = s, J_qp = -s·conj(phase), J_qq = c·conj(phase).
                let jpp = C64::new(c, 0.0);
                let jpq = C64::new(s, 0.0);
                let jqp = -phase.conj() * s;
                let jqq = phase.conj() * c;
                // A ← A J
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * jpp + akq * jqp;
                    a[(k, q)] = akp * jpq + akq * jqq;
                }
                // A ← J† A
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = jpp.conj() * apk + jqp.conj() * aqk;
                    a[(q, k)] = jpq.conj() * apk + jqq.conj() * aqk;
                }
                a[(p, q)] = C64::new(0.0, 0.0);
                a[(q, p)] = C64::new(0.0, 0.0);
                a[(p, p)].im = 0.0;
                a[(q, q)].im = 0.0;
                // V ← V J
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * jpp + vkq * jqp;
                    v[(k, q)] = vkp * jpq + vkq * jqq;
                }
            }
        }
    }
    Err(Error::Numerical(alloc::format!(
        "Jacobi eigendecomposition did not converge in {MAX_SWEEPS} sweeps"
    )))
}

/// Propagator `exp(-i H t)` for Hermitian `H` (ħ = 1).
pub fn propagator(h: &CMatrix, t: f64) -> Result<CMatrix> {
    let eig = hermitian_eigen(h)?;
    Ok(eig.map(|l| {
        let phi = -l * t;
        C64::new(Float::cos(phi), Float::sin(phi))
    }))
}

/// Largest singular value.
pub fn spectral_norm(m: &CMatrix) -> Result<f64> {
    let gram = &m.adjoint() * m;
    let eig = hermitian_eigen(&gram)?;
    let top = eig.values.iter().copied().fold(0.0, f64::max);
    Ok(Float::sqrt(top))
}

/// Spectral norm of a rectangular block given as rows.
pub fn block_spectral_norm(rows: &[Vec<C64>]) -> Result<f64> {
    if rows.is_empty() || rows[0].is_empty() {
        return Ok(0.0);
    }
    let ncols = rows[0].len();
    let gram = CMatrix::from_fn(ncols, |i, j| {
        rows.iter().map(|row| row[i].conj() * row[j]).sum()
    });
    let eig = hermitian_eigen(&gram)?;
    Ok(Float::sqrt(eig.values.iter().copied().fold(0.0, f64::max)))
}

/// Principal square root of a positive semidefinite Hermitian matrix.
/// Eigenvalues within `-EPS_NORM` of zero are clamped.
pub fn psd_sqrt(m: &CMatrix) -> Result<CMatrix> {
    let eig = hermitian_eigen(m)?;
    if let Some(&bad) = eig.values.iter().find(|&&l| l < -crate::EPS_NORM) {
        return Err(Error::Numerical(alloc::format!(
            "matrix is not positive semidefinite (eigenvalue {bad})"
        )));
    }
    Ok(eig.map(|l| C64::new(Float::sqrt(l.max(0.0)), 0.0)))
}
