//! Fixed-size complex matrix helpers for one photon's two path modes.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Complex amplitude. Finite-ness is checked wherever amplitudes enter the crate.
pub type ComplexAmp = Complex64;

/// Row-major 2×2 complex matrix.
pub type Mat2 = [[Complex64; 2]; 2];

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub const IDENTITY: Mat2 = [[ONE, ZERO], [ZERO, ONE]];

/// Pauli X; swaps the two path modes.
pub const SWAP: Mat2 = [[ZERO, ONE], [ONE, ZERO]];

pub fn mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[ZERO; 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

pub fn transpose(a: &Mat2) -> Mat2 {
    [[a[0][0], a[1][0]], [a[0][1], a[1][1]]]
}

pub fn adjoint(a: &Mat2) -> Mat2 {
    [
        [a[0][0].conj(), a[1][0].conj()],
        [a[0][1].conj(), a[1][1].conj()],
    ]
}

pub fn det(a: &Mat2) -> Complex64 {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

pub fn trace(a: &Mat2) -> Complex64 {
    a[0][0] + a[1][1]
}

pub fn diag(d0: Complex64, d1: Complex64) -> Mat2 {
    [[d0, ZERO], [ZERO, d1]]
}

/// Largest elementwise modulus of `a - b`.
pub fn max_abs_diff(a: &Mat2, b: &Mat2) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn is_finite(a: &Mat2) -> bool {
    a.iter()
        .flatten()
        .all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Largest elementwise deviation of `U†U` from the identity.
pub fn unitarity_deviation(u: &Mat2) -> f64 {
    max_abs_diff(&mul(&adjoint(u), u), &IDENTITY)
}

/// Fails with [`Error::NotUnitary`] when `U†U` differs from `I` by more than `tol` in any entry.
pub fn check_unitary(u: &Mat2, tol: f64) -> Result<()> {
    if !is_finite(u) {
        return Err(Error::NonFinite("unitary matrix"));
    }
    let deviation = unitarity_deviation(u);
    if deviation > tol {
        return Err(Error::NotUnitary { deviation });
    }
    Ok(())
}
