//! Dirac–Pauli matrix actions on four-spinors.
//!
//! The representation is fixed once for the whole crate:
//! `beta = diag(1, 1, -1, -1)` and `alpha_i` with the Pauli matrices in the
//! off-diagonal blocks. In this representation `alpha_1 alpha_2` is the
//! diagonal matrix `i*diag(1, -1, 1, -1)`, so the rotation factor of the
//! wave function is a pure component-wise phase.
//!
//! Matrices are never materialized; each function applies one matrix to a
//! spinor, which is all the operator application and the spin expectations
//! need.

use num_complex::Complex64;

/// Four complex spinor components.
pub type Spinor4 = [Complex64; 4];

const I: Complex64 = Complex64::new(0.0, 1.0);

/// `alpha_1 v`
#[inline]
pub fn alpha_x(v: &Spinor4) -> Spinor4 {
    [v[3], v[2], v[1], v[0]]
}

/// `alpha_2 v`
#[inline]
pub fn alpha_y(v: &Spinor4) -> Spinor4 {
    [-I * v[3], I * v[2], -I * v[1], I * v[0]]
}

/// `alpha_3 v`
#[inline]
pub fn alpha_z(v: &Spinor4) -> Spinor4 {
    [v[2], -v[3], v[0], -v[1]]
}

/// `beta v`
#[inline]
pub fn beta(v: &Spinor4) -> Spinor4 {
    [v[0], v[1], -v[2], -v[3]]
}

/// `Sigma_1 v` where `Sigma_1 = diag(sigma_1, sigma_1) = -i alpha_2 alpha_3`.
#[inline]
pub fn sigma_x(v: &Spinor4) -> Spinor4 {
    [v[1], v[0], v[3], v[2]]
}

/// `Sigma_2 v` where `Sigma_2 = diag(sigma_2, sigma_2) = -i alpha_3 alpha_1`.
#[inline]
pub fn sigma_y(v: &Spinor4) -> Spinor4 {
    [-I * v[1], I * v[0], -I * v[3], I * v[2]]
}

/// `Sigma_3 v` where `Sigma_3 = diag(sigma_3, sigma_3) = -i alpha_1 alpha_2`.
#[inline]
pub fn sigma_z(v: &Spinor4) -> Spinor4 {
    [v[0], -v[1], v[2], -v[3]]
}

/// Hermitian inner product `<a, b> = sum_k conj(a_k) b_k`.
#[inline]
pub fn inner(a: &Spinor4, b: &Spinor4) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}
