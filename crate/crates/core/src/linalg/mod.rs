//! Dense complex linear algebra used throughout the crate.
//!
//! LU factorization, determinants and the raw non-Hermitian eigensolver are
//! delegated to LAPACK through `ndarray-linalg`. The matrix exponential, the
//! Pfaffian, the biorthonormal pairing of eigenvectors and the analytic
//! continuation of determinant square roots live here.

mod branch;
mod eig;
mod expm;
mod lu;
mod pfaffian;

pub use branch::{
    continue_sqrt_det, sqrt_det_analytic, sqrt_det_analytic_with, BranchForm, BranchOptions,
    BranchTrace, LogDetFn, WithRate,
};
pub use eig::{eig_biorthonormal, eigenvalues_sorted, SpectralDecomposition, NEAR_DEFECTIVE};
pub use expm::matexp;
pub use lu::{log_det, solve, LogDet, Lu};
pub use pfaffian::pfaffian;

use ndarray::{Array2, Axis};
pub use num_complex::Complex64 as C64;

pub type CMatrix = Array2<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn identity(n: usize) -> CMatrix {
    Array2::from_diag_elem(n, ONE)
}

pub fn diag(entries: &[C64]) -> CMatrix {
    let n = entries.len();
    let mut m = CMatrix::zeros((n, n));
    for (k, &v) in entries.iter().enumerate() {
        m[[k, k]] = v;
    }
    m
}

pub fn adjoint(a: &CMatrix) -> CMatrix {
    a.t().mapv(|z| z.conj())
}

/// `τ_x A^T τ_x` for a matrix on the two-block Nambu space.
pub fn tau_x_transpose(a: &CMatrix) -> CMatrix {
    let n2 = a.nrows();
    debug_assert_eq!(n2 % 2, 0);
    let n = n2 / 2;
    let s = |i: usize| (i + n) % n2;
    CMatrix::from_shape_fn((n2, n2), |(i, j)| a[[s(j), s(i)]])
}

/// `τ_x A^* τ_x`.
pub fn tau_x_conj(a: &CMatrix) -> CMatrix {
    let n2 = a.nrows();
    let n = n2 / 2;
    let s = |i: usize| (i + n) % n2;
    CMatrix::from_shape_fn((n2, n2), |(i, j)| a[[s(i), s(j)]].conj())
}

/// Diagonal of `τ_z` on a 2N-dimensional Nambu space.
pub fn tau_z_diag(n: usize) -> Vec<f64> {
    (0..2 * n).map(|i| if i < n { 1.0 } else { -1.0 }).collect()
}

pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().fold(0.0, |m, z| m.max(z.norm()))
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).fold(0.0, |m, (x, y)| m.max((x - y).norm()))
}

pub fn frobenius(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn norm_one(a: &CMatrix) -> f64 {
    a.axis_iter(Axis(1))
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn is_finite(a: &CMatrix) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub(crate) fn ensure_square(a: &CMatrix) -> crate::Result<usize> {
    if a.nrows() != a.ncols() {
        return Err(crate::Error::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    Ok(a.nrows())
}

/// Random matrix with i.i.d. entries uniform in the unit square, scaled.
pub fn random_matrix<R: rand::Rng>(rng: &mut R, rows: usize, cols: usize, scale: f64) -> CMatrix {
    CMatrix::from_shape_fn((rows, cols), |_| {
        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * scale
    })
}

/// Random K with `K + τ_x K^T τ_x = 0`.
pub fn random_symmetric_k<R: rand::Rng>(rng: &mut R, n: usize, scale: f64) -> CMatrix {
    let x = random_matrix(rng, 2 * n, 2 * n, scale);
    (&x - &tau_x_transpose(&x)) * C64::new(0.5, 0.0)
}
