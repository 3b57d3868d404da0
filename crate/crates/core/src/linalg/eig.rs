use ndarray::{Array1, Axis};
use ndarray_linalg::{Eig, EigVals};

use super::{ensure_square, frobenius, is_finite, norm_one, CMatrix, Lu, C64};
use crate::{Error, Result};

/// Eigenvector condition estimates above this are treated as defective.
pub const NEAR_DEFECTIVE: f64 = 1e8;

/// `A = Σ_k λ_k |R_k⟩⟨L_k|` with `⟨L_k|R_q⟩ = δ_kq`.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    /// Sorted by real part, then imaginary part.
    pub eigenvalues: Array1<C64>,
    /// Column `k` is the unit-norm right eigenvector of `λ_k`.
    pub right: CMatrix,
    /// Row `k` is the left eigenvector of `λ_k`.
    pub left: CMatrix,
    /// `‖R‖₁ ‖R^{-1}‖₁`.
    pub condition_estimate: f64,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn reconstruct(&self) -> CMatrix {
        let mut scaled = self.right.clone();
        for (mut col, &lam) in scaled.axis_iter_mut(Axis(1)).zip(self.eigenvalues.iter()) {
            col.mapv_inplace(|z| z * lam);
        }
        scaled.dot(&self.left)
    }

    /// `max |⟨L_k|R_q⟩ − δ_kq|`.
    pub fn biorthonormality_error(&self) -> f64 {
        let g = self.left.dot(&self.right);
        g.indexed_iter().fold(0.0, |m, ((i, j), z)| {
            let d = if i == j { z - 1.0 } else { *z };
            m.max(d.norm())
        })
    }

    /// `R f(Λ) L` for a scalar function of the eigenvalues.
    pub fn apply_fn<F: Fn(C64) -> C64>(&self, f: F) -> CMatrix {
        let mut scaled = self.right.clone();
        for (mut col, &lam) in scaled.axis_iter_mut(Axis(1)).zip(self.eigenvalues.iter()) {
            let v = f(lam);
            col.mapv_inplace(|z| z * v);
        }
        scaled.dot(&self.left)
    }
}

fn order(a: &C64, b: &C64) -> std::cmp::Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

/// Eigenvalues only, sorted by `(Re, Im)`.
pub fn eigenvalues_sorted(a: &CMatrix) -> Result<Array1<C64>> {
    ensure_square(a)?;
    if !is_finite(a) {
        return Err(Error::NonFinite("eigenvalue input"));
    }
    let mut w: Vec<C64> = a.eigvals().map_err(|_| Error::NoConvergence)?.to_vec();
    w.sort_by(order);
    Ok(Array1::from(w))
}

/// Right eigenvectors from LAPACK, paired with left eigenvectors taken as the
/// rows of the inverse right-vector matrix.
pub fn eig_biorthonormal(a: &CMatrix) -> Result<SpectralDecomposition> {
    let n = ensure_square(a)?;
    if !is_finite(a) {
        return Err(Error::NonFinite("eigendecomposition input"));
    }
    if n == 0 {
        return Ok(SpectralDecomposition {
            eigenvalues: Array1::zeros(0),
            right: CMatrix::zeros((0, 0)),
            left: CMatrix::zeros((0, 0)),
            condition_estimate: 1.0,
        });
    }
    let (w, v) = a.eig().map_err(|_| Error::NoConvergence)?;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| order(&w[i], &w[j]));

    let eigenvalues = Array1::from_iter(idx.iter().map(|&i| w[i]));
    let mut right = CMatrix::zeros((n, n));
    for (k, &i) in idx.iter().enumerate() {
        let col = v.column(i);
        let nrm = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if nrm == 0.0 {
            return Err(Error::NearDefective {
                estimate: f64::INFINITY,
            });
        }
        right.column_mut(k).assign(&col.mapv(|z| z / nrm));
    }

    let lu = match Lu::new(&right) {
        Ok(lu) => lu,
        Err(_) => {
            return Err(Error::NearDefective {
                estimate: f64::INFINITY,
            })
        }
    };
    if lu.rcond() < 1.0 / (NEAR_DEFECTIVE * 1e4) {
        return Err(Error::NearDefective {
            estimate: 1.0 / lu.rcond(),
        });
    }
    let left = lu.inverse()?;
    let condition_estimate = norm_one(&right) * norm_one(&left);
    if !(condition_estimate <= NEAR_DEFECTIVE) {
        return Err(Error::NearDefective {
            estimate: condition_estimate,
        });
    }
    let dec = SpectralDecomposition {
        eigenvalues,
        right,
        left,
        condition_estimate,
    };
    let scale = frobenius(a).max(f64::MIN_POSITIVE);
    let resid = frobenius(&(dec.reconstruct() - a)) / scale;
    if !(resid < 1e-6) {
        return Err(Error::NearDefective {
            estimate: condition_estimate,
        });
    }
    Ok(dec)
}
