//! Dense small complex-matrix arithmetic and the matrix exponential.
//!
//! Every exponential taken elsewhere in the crate is of a skew-Hermitian
//! matrix, so `expm` detects that case and goes through a Hermitian
//! eigendecomposition of `i·M`, which keeps the result unitary up to
//! rounding. General matrices fall back to scaling-and-squaring with the
//! degree-13 Padé approximant.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = nalgebra::DVector<Complex64>;

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn frob_norm(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn frob_dist(a: &CMat, b: &CMat) -> f64 {
    frob_norm(&(a - b))
}

fn all_finite(m: &CMat) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn is_skew_hermitian(m: &CMat, tol: f64) -> bool {
    frob_norm(&(m + m.adjoint())) <= tol * frob_norm(m).max(1.0)
}

/// Matrix exponential e^M.
pub fn expm(m: &CMat) -> Result<CMat> {
    if !all_finite(m) {
        return Err(Error::invalid("expm: non-finite entries"));
    }
    if is_skew_hermitian(m, 1e-13) {
        Ok(expm_skew_hermitian(m))
    } else {
        Ok(expm_pade13(m))
    }
}

/// e^M for skew-Hermitian M via the Hermitian eigendecomposition of i·M.
fn expm_skew_hermitian(m: &CMat) -> CMat {
    let h = m.map(|z| Complex64::new(0.0, 1.0) * z);
    // symmetrize to kill rounding in the skew-Hermitian test margin
    let h = (&h + h.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = nalgebra::SymmetricEigen::new(h);
    let n = m.nrows();
    let mut d = CMat::zeros(n, n);
    for (i, lam) in eig.eigenvalues.iter().enumerate() {
        d[(i, i)] = Complex64::new(0.0, -lam).exp();
    }
    &eig.eigenvectors * d * eig.eigenvectors.adjoint()
}

/// Scaling-and-squaring with the degree-13 Padé approximant.
fn expm_pade13(m: &CMat) -> CMat {
    const THETA13: f64 = 5.371920351148152;
    let norm1 = (0..m.ncols())
        .map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let s = if norm1 > THETA13 {
        (norm1 / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let a = m * Complex64::new(0.5f64.powi(s), 0.0);

    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    let n = a.nrows();
    let id = identity(n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;
    let c = |k: usize| Complex64::new(B[k], 0.0);
    let u_inner = &a6 * (&a6 * c(13) + &a4 * c(11) + &a2 * c(9))
        + &a6 * c(7)
        + &a4 * c(5)
        + &a2 * c(3)
        + &id * c(1);
    let u = &a * u_inner;
    let v = &a6 * (&a6 * c(12) + &a4 * c(10) + &a2 * c(8))
        + &a6 * c(6)
        + &a4 * c(4)
        + &a2 * c(2)
        + &id * c(0);
    let num = &v + &u;
    let den = &v - &u;
    let mut r = den
        .lu()
        .solve(&num)
        .expect("pade denominator is invertible for scaled input");
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

/// True iff M is unitary with determinant 1, both to within `tol`.
pub fn is_special_unitary(m: &CMat, tol: f64) -> bool {
    if m.nrows() != m.ncols() {
        return false;
    }
    let n = m.nrows();
    let gram_err = frob_dist(&(m.adjoint() * m), &identity(n));
    let det = m.clone().lu().determinant();
    gram_err <= tol && (det - Complex64::new(1.0, 0.0)).norm() <= tol
}
