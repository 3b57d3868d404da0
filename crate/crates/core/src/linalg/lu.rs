use ndarray::OwnedRepr;
use ndarray_linalg::{Determinant, Factorize, Inverse, LUFactorized, ReciprocalConditionNum};

use super::{ensure_square, is_finite, CMatrix, C64};
use crate::{Error, Result};

/// Determinant stored as `ln|det|` and a unit phase so that 256×256
/// determinants neither overflow nor underflow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogDet {
    pub ln_abs: f64,
    /// `det / |det|`; zero when the matrix is exactly singular.
    pub phase: C64,
}

impl LogDet {
    pub fn zero() -> Self {
        LogDet {
            ln_abs: f64::NEG_INFINITY,
            phase: C64::new(0.0, 0.0),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.phase.norm() == 0.0 || self.ln_abs == f64::NEG_INFINITY
    }

    pub fn value(&self) -> C64 {
        if self.is_zero() {
            return C64::new(0.0, 0.0);
        }
        self.phase * self.ln_abs.exp()
    }

    pub fn arg(&self) -> f64 {
        self.phase.arg()
    }

    pub fn mul(&self, other: &LogDet) -> LogDet {
        if self.is_zero() || other.is_zero() {
            return LogDet::zero();
        }
        LogDet {
            ln_abs: self.ln_abs + other.ln_abs,
            phase: self.phase * other.phase,
        }
    }
}

/// Partially pivoted LU factorization with a 1-norm condition estimate.
pub struct Lu {
    factors: LUFactorized<OwnedRepr<C64>>,
    n: usize,
    rcond: f64,
}

impl Lu {
    /// Factorizes `a`; an exactly singular matrix is reported as
    /// [`Error::Singular`] with `rcond = 0`.
    pub fn new(a: &CMatrix) -> Result<Lu> {
        let n = ensure_square(a)?;
        if !is_finite(a) {
            return Err(Error::NonFinite("LU input"));
        }
        let factors = a.factorize().map_err(|_| Error::Singular { rcond: 0.0 })?;
        let rcond = factors.rcond().unwrap_or(0.0);
        Ok(Lu { factors, n, rcond })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn rcond(&self) -> f64 {
        self.rcond
    }

    pub fn log_det(&self) -> LogDet {
        match self.factors.sln_det() {
            Ok((sign, ln)) if sign.norm() > 0.0 && ln.is_finite() => LogDet {
                ln_abs: ln,
                phase: sign,
            },
            _ => LogDet::zero(),
        }
    }

    pub fn inverse(&self) -> Result<CMatrix> {
        self.factors
            .inv()
            .map_err(|_| Error::Singular { rcond: self.rcond })
    }

    /// `A^{-1} B`.
    pub fn solve(&self, b: &CMatrix) -> Result<CMatrix> {
        if b.nrows() != self.n {
            return Err(Error::Dimension(format!(
                "right-hand side has {} rows, matrix is {}x{}",
                b.nrows(),
                self.n,
                self.n
            )));
        }
        let x = self.inverse()?.dot(b);
        if !is_finite(&x) {
            return Err(Error::Singular { rcond: self.rcond });
        }
        Ok(x)
    }

    /// `B A^{-1}`.
    pub fn solve_right(&self, b: &CMatrix) -> Result<CMatrix> {
        if b.ncols() != self.n {
            return Err(Error::Dimension(format!(
                "left-hand side has {} columns, matrix is {}x{}",
                b.ncols(),
                self.n,
                self.n
            )));
        }
        let x = b.dot(&self.inverse()?);
        if !is_finite(&x) {
            return Err(Error::Singular { rcond: self.rcond });
        }
        Ok(x)
    }
}

/// Solves `A X = B` and returns `X` with the reciprocal condition estimate of
/// `A`. Matrices with `rcond` below machine epsilon are rejected.
pub fn solve(a: &CMatrix, b: &CMatrix) -> Result<(CMatrix, f64)> {
    let lu = Lu::new(a)?;
    if lu.rcond() < f64::EPSILON {
        return Err(Error::Singular { rcond: lu.rcond() });
    }
    Ok((lu.solve(b)?, lu.rcond()))
}

/// `ln det A` in overflow-safe form; exact singularity yields [`LogDet::zero`].
pub fn log_det(a: &CMatrix) -> Result<LogDet> {
    match Lu::new(a) {
        Ok(lu) => Ok(lu.log_det()),
        Err(Error::Singular { .. }) => Ok(LogDet::zero()),
        Err(e) => Err(e),
    }
}
