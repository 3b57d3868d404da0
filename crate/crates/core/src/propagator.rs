//! The Gaussian dynamical map `B ↦ ½ + Q(B − ½)Q̄ + M` and its ingredients.
//!
//! With `A = 𝕏₊ + i𝐇 = Σ_k λ_k |R_k⟩⟨L_k|` one has `Q(t) = e^{−At}`,
//! `Q̄(t) = e^{−A†t} = Q(t)†` and, elementwise in the eigenbasis,
//! `M(t) = R [(L 𝕏₋ L†) ∘ F(t)] R†` with
//! `F_mn(t) = (1 − e^{−(λ_m + λ_n^*)t}) / (λ_m + λ_n^*)`.

use ndarray::Array1;

use crate::linalg::{
    adjoint, eig_biorthonormal, eigenvalues_sorted, identity, matexp, max_abs, tau_x_transpose,
    CMatrix, SpectralDecomposition, C64, I,
};
use crate::model::QuadraticModel;
use crate::{Error, Result};

/// Below this `|λ_m + λ_n^*|` the closed form of `F` switches to its series.
pub const SMALL_DENOMINATOR: f64 = 1e-8;

/// Gaps at or below this are treated as closed.
pub const GAP_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct PropagatorSet {
    pub t: f64,
    pub q: CMatrix,
    pub qbar: CMatrix,
    pub m: CMatrix,
}

#[derive(Debug, Clone)]
pub struct RapiditySpectrum {
    /// Eigenvalues of `𝕏₊ + i𝐇`, sorted by `(Re, Im)`.
    pub lambdas: Array1<C64>,
    pub gap: f64,
}

impl RapiditySpectrum {
    pub fn from_lambdas(lambdas: Array1<C64>) -> Self {
        let gap = lambdas.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
        RapiditySpectrum { lambdas, gap }
    }

    /// The `4^N` Liouvillian eigenvalues `−Σ_k ν_k λ_k`, `ν ∈ {0,1}^{2N}`.
    pub fn liouvillian_eigenvalues(&self) -> Result<Vec<C64>> {
        let m = self.lambdas.len();
        if m > 16 {
            return Err(Error::InvalidParameter(format!(
                "Liouvillian multiset is limited to 2N <= 16, got 2N = {m}"
            )));
        }
        Ok((0..1usize << m)
            .map(|mask| {
                -(0..m)
                    .filter(|k| mask >> k & 1 == 1)
                    .map(|k| self.lambdas[k])
                    .sum::<C64>()
            })
            .collect())
    }

    /// Rapidities whose imaginary part is below `tol` in magnitude.
    pub fn zero_frequency_modes(&self, tol: f64) -> Vec<C64> {
        self.lambdas
            .iter()
            .copied()
            .filter(|z| z.im.abs() < tol)
            .collect()
    }
}

#[derive(Debug, Clone)]
struct Spectral {
    dec: SpectralDecomposition,
    /// `L 𝕏₋ L†`.
    g: CMatrix,
    right_adj: CMatrix,
    left_adj: CMatrix,
}

/// Precomputed dynamics of one model.
///
/// Uses the eigendecomposition of `𝕏₊ + i𝐇` when it is well conditioned and
/// falls back to dense matrix exponentials otherwise.
#[derive(Debug, Clone)]
pub struct Dynamics {
    n: usize,
    a: CMatrix,
    x_minus: CMatrix,
    spectrum: RapiditySpectrum,
    spectral: Option<Spectral>,
}

fn f_factor(z: C64, t: f64) -> C64 {
    if z.norm() < SMALL_DENOMINATOR {
        let zt = z * t;
        t * (1.0 - zt / 2.0 + zt * zt / 6.0)
    } else {
        -expm1(-z * t) / z
    }
}

/// `e^w − 1` without cancellation for small `|w|`.
fn expm1(w: C64) -> C64 {
    let (a, b) = (w.re, w.im);
    let half = (0.5 * b).sin();
    C64::new(
        a.exp_m1() * b.cos() - 2.0 * half * half,
        a.exp() * b.sin(),
    )
}

impl Dynamics {
    pub fn new(model: &QuadraticModel) -> Result<Self> {
        let a = model.generator();
        let x_minus = model.x_minus().clone();
        match eig_biorthonormal(&a) {
            Ok(dec) => {
                let spectrum = RapiditySpectrum::from_lambdas(dec.eigenvalues.clone());
                let left_adj = adjoint(&dec.left);
                let g = dec.left.dot(&x_minus).dot(&left_adj);
                let right_adj = adjoint(&dec.right);
                Ok(Dynamics {
                    n: model.n(),
                    a,
                    x_minus,
                    spectrum,
                    spectral: Some(Spectral {
                        dec,
                        g,
                        right_adj,
                        left_adj,
                    }),
                })
            }
            Err(Error::NearDefective { .. }) => {
                let spectrum = RapiditySpectrum::from_lambdas(eigenvalues_sorted(&a)?);
                Ok(Dynamics {
                    n: model.n(),
                    a,
                    x_minus,
                    spectrum,
                    spectral: None,
                })
            }
            Err(e) => Err(e),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spectrum(&self) -> &RapiditySpectrum {
        &self.spectrum
    }

    pub fn gap(&self) -> f64 {
        self.spectrum.gap
    }

    pub fn decomposition(&self) -> Option<&SpectralDecomposition> {
        self.spectral.as_ref().map(|s| &s.dec)
    }

    fn check_t(t: f64) -> Result<()> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "time must be finite and nonnegative, got {t}"
            )));
        }
        Ok(())
    }

    /// `Q(t) = e^{−(𝕏₊+i𝐇)t}`.
    pub fn q(&self, t: f64) -> Result<CMatrix> {
        Self::check_t(t)?;
        if t == 0.0 {
            return Ok(identity(2 * self.n));
        }
        match &self.spectral {
            Some(s) => Ok(s.dec.apply_fn(|l| (-l * t).exp())),
            None => matexp(&(&self.a * C64::new(-t, 0.0))),
        }
    }

    /// `M(t) = ∫₀^t Q(t′) 𝕏₋ Q̄(t′) dt′`.
    pub fn m(&self, t: f64) -> Result<CMatrix> {
        Self::check_t(t)?;
        if t == 0.0 {
            return Ok(CMatrix::zeros((2 * self.n, 2 * self.n)));
        }
        match &self.spectral {
            Some(s) => {
                let lam = &s.dec.eigenvalues;
                let inner = CMatrix::from_shape_fn(s.g.raw_dim(), |(m, n)| {
                    s.g[[m, n]] * f_factor(lam[m] + lam[n].conj(), t)
                });
                Ok(s.dec.right.dot(&inner).dot(&s.right_adj))
            }
            None => self.m_van_loan(t),
        }
    }

    /// `M(t)` from the upper-right block of `exp([[−A, 𝕏₋], [0, A†]] t)`.
    fn m_van_loan(&self, t: f64) -> Result<CMatrix> {
        let d = 2 * self.n;
        let mut big = CMatrix::zeros((2 * d, 2 * d));
        let a_adj = adjoint(&self.a);
        for i in 0..d {
            for j in 0..d {
                big[[i, j]] = -self.a[[i, j]] * t;
                big[[i, d + j]] = self.x_minus[[i, j]] * t;
                big[[d + i, d + j]] = a_adj[[i, j]] * t;
            }
        }
        let e = matexp(&big)?;
        let block = e.slice(ndarray::s![0..d, d..2 * d]).to_owned();
        let q = matexp(&(&self.a * C64::new(-t, 0.0)))?;
        Ok(block.dot(&adjoint(&q)))
    }

    /// `M∞ = lim M(t)`; requires a positive gap.
    pub fn m_inf(&self) -> Result<CMatrix> {
        if self.gap() <= GAP_TOL {
            return Err(Error::ZeroGap { gap: self.gap() });
        }
        match &self.spectral {
            Some(s) => {
                let lam = &s.dec.eigenvalues;
                let inner = CMatrix::from_shape_fn(s.g.raw_dim(), |(m, n)| {
                    s.g[[m, n]] / (lam[m] + lam[n].conj())
                });
                Ok(s.dec.right.dot(&inner).dot(&s.right_adj))
            }
            None => self.m_inf_doubling(),
        }
    }

    /// `M(2t) = M(t) + Q(t) M(t) Q(t)†`, iterated until `Q` has decayed.
    pub fn m_inf_doubling(&self) -> Result<CMatrix> {
        let t0 = 0.5 / crate::linalg::norm_one(&self.a).max(1.0);
        let mut q = matexp(&(&self.a * C64::new(-t0, 0.0)))?;
        let mut m = self.m_van_loan(t0)?;
        for _ in 0..200 {
            if max_abs(&q) < 1e-17 {
                return Ok(m);
            }
            m = &m + &q.dot(&m).dot(&adjoint(&q));
            q = q.dot(&q);
        }
        Err(Error::NoConvergence)
    }

    pub fn propagators(&self, t: f64) -> Result<PropagatorSet> {
        let q = self.q(t)?;
        let qbar = adjoint(&q);
        Ok(PropagatorSet {
            t,
            q,
            qbar,
            m: self.m(t)?,
        })
    }

    /// `½ + Q(B₀ − ½)Q† + M(t)` for any covariance-type `B₀`.
    pub fn evolve(&self, b0: &CMatrix, t: f64) -> Result<CMatrix> {
        Self::check_t(t)?;
        let d = 2 * self.n;
        if b0.dim() != (d, d) {
            return Err(Error::Dimension(format!(
                "covariance must be {d}x{d}, got {:?}",
                b0.dim()
            )));
        }
        let half = identity(d) * C64::new(0.5, 0.0);
        let shifted = b0 - &half;
        match &self.spectral {
            Some(s) => {
                let lam = &s.dec.eigenvalues;
                let p = s.dec.left.dot(&shifted).dot(&s.left_adj);
                let inner = CMatrix::from_shape_fn((d, d), |(m, n)| {
                    let z = lam[m] + lam[n].conj();
                    p[[m, n]] * (-z * t).exp() + s.g[[m, n]] * f_factor(z, t)
                });
                Ok(s.dec.right.dot(&inner).dot(&s.right_adj) + half)
            }
            None => {
                let q = self.q(t)?;
                Ok(q.dot(&shifted).dot(&adjoint(&q)) + self.m(t)? + half)
            }
        }
    }

    /// `C∞ = ½ + M∞`.
    pub fn steady_covariance(&self) -> Result<CMatrix> {
        Ok(self.m_inf()? + identity(2 * self.n) * C64::new(0.5, 0.0))
    }
}

fn check_covariance(c: &CMatrix, what: &'static str) -> Result<()> {
    let d = c.nrows();
    let dev = max_abs(&(c + &tau_x_transpose(c) - identity(d)));
    if dev > 1e-8 * max_abs(c).max(1.0) {
        return Err(Error::Symmetry {
            what,
            magnitude: dev,
        });
    }
    Ok(())
}

/// `Q(t)` by matrix exponential, `Q̄ = Q†`, and `M(t)` in closed form.
pub fn propagators(model: &QuadraticModel, t: f64) -> Result<PropagatorSet> {
    let dynamics = Dynamics::new(model)?;
    Dynamics::check_t(t)?;
    let q = matexp(&(model.generator() * C64::new(-t, 0.0)))?;
    let qbar = matexp(&(model.generator_bar() * C64::new(-t, 0.0)))?;
    Ok(PropagatorSet {
        t,
        q,
        qbar,
        m: dynamics.m(t)?,
    })
}

pub fn steady_m(model: &QuadraticModel) -> Result<CMatrix> {
    Dynamics::new(model)?.m_inf()
}

/// Covariance `C = ⟨Φ Φ†⟩` after time `t`.
pub fn evolve_covariance(model: &QuadraticModel, c0: &CMatrix, t: f64) -> Result<CMatrix> {
    check_covariance(c0, "C0 + tau_x C0^T tau_x = 1")?;
    Dynamics::new(model)?.evolve(c0, t)
}

pub fn rapidity_spectrum(model: &QuadraticModel) -> Result<RapiditySpectrum> {
    Ok(RapiditySpectrum::from_lambdas(eigenvalues_sorted(
        &model.generator(),
    )?))
}

/// `G^R(t) = −iθ(t) Q(t)` with `θ(0) = 1`.
pub fn retarded_gf(model: &QuadraticModel, t: f64) -> Result<CMatrix> {
    if t < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "retarded Green's function needs t >= 0, got {t}"
        )));
    }
    Ok(Dynamics::new(model)?.q(t)? * (-I))
}

/// `D_ij(t) = −iθ(t)⟨[n̂_i(t), n̂_j]⟩` in the steady state, sites 1-based.
pub fn response_function(model: &QuadraticModel, i: usize, j: usize, t: f64) -> Result<C64> {
    let dynamics = Dynamics::new(model)?;
    let m_inf = dynamics.m_inf()?;
    response_from_parts(&dynamics, &m_inf, i, j, t)
}

pub fn response_from_parts(
    dynamics: &Dynamics,
    m_inf: &CMatrix,
    i: usize,
    j: usize,
    t: f64,
) -> Result<C64> {
    let n = dynamics.n();
    if i == 0 || j == 0 || i > n || j > n {
        return Err(Error::InvalidParameter(format!(
            "sites must lie in 1..={n}, got ({i}, {j})"
        )));
    }
    if t < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "response function needs t >= 0, got {t}"
        )));
    }
    let q = dynamics.q(t)?;
    let qbar = adjoint(&q);
    let qm = q.dot(m_inf);
    let mqbar = m_inf.dot(&qbar);
    let (i, j) = (i - 1, j - 1);
    let ip = i + n;
    let braces = qm[[i, j]] * qbar[[j, i]] - q[[i, j]] * mqbar[[j, i]] - qm[[ip, j]] * qbar[[j, ip]]
        + q[[ip, j]] * mqbar[[j, ip]];
    Ok(-I * braces)
}
