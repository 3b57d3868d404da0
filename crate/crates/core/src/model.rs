//! Quadratic Lindbladians `(𝐇, {L_μ})` and the boundary-driven Kitaev chain.
//!
//! The Hamiltonian is `Ĥ = ½ Φ† 𝐇 Φ` with `Φ = (c_1..c_N, c_1†..c_N†)^T` and
//! the jump operators are `L̂_μ = L_μ† Φ`. Scalar energy offsets produced by
//! reordering `c c†` are dropped.

use ndarray::Array1;

use crate::linalg::{
    adjoint, eigenvalues_sorted, max_abs, tau_x_transpose, CMatrix, C64, I, ONE, ZERO,
};
use crate::{Error, Result};

/// Symmetry tolerance enforced by [`QuadraticModel::new`].
pub const SYMMETRY_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct QuadraticModel {
    n: usize,
    h: CMatrix,
    dissipators: Vec<Array1<C64>>,
    x_plus: CMatrix,
    x_minus: CMatrix,
}

/// One failed invariant with the size of the deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub what: &'static str,
    pub magnitude: f64,
}

impl QuadraticModel {
    /// Builds a model, rejecting `𝐇` that is not Hermitian or violates
    /// `𝐇 + τ_x 𝐇^T τ_x = 0`.
    pub fn new(h: CMatrix, dissipators: Vec<Array1<C64>>) -> Result<Self> {
        let model = Self::new_unchecked(h, dissipators)?;
        let scale = max_abs(&model.h).max(1.0);
        for v in validate(&model) {
            if v.magnitude > SYMMETRY_TOL * scale {
                return Err(Error::Symmetry {
                    what: v.what,
                    magnitude: v.magnitude,
                });
            }
        }
        Ok(model)
    }

    /// Only checks dimensions; use [`validate`] to inspect the invariants.
    pub fn new_unchecked(h: CMatrix, dissipators: Vec<Array1<C64>>) -> Result<Self> {
        if h.nrows() != h.ncols() || h.nrows() % 2 != 0 || h.nrows() == 0 {
            return Err(Error::Dimension(format!(
                "H must be 2N x 2N, got {}x{}",
                h.nrows(),
                h.ncols()
            )));
        }
        let n = h.nrows() / 2;
        let (x_plus, x_minus) = x_matrices(&dissipators, n)?;
        Ok(QuadraticModel {
            n,
            h,
            dissipators,
            x_plus,
            x_minus,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> &CMatrix {
        &self.h
    }

    pub fn dissipators(&self) -> &[Array1<C64>] {
        &self.dissipators
    }

    pub fn x_plus(&self) -> &CMatrix {
        &self.x_plus
    }

    pub fn x_minus(&self) -> &CMatrix {
        &self.x_minus
    }

    /// `𝕏₊ + i𝐇`, whose eigenvalues are the rapidities.
    pub fn generator(&self) -> CMatrix {
        &self.x_plus + &self.h.mapv(|z| z * I)
    }

    /// `𝕏₊ − i𝐇`.
    pub fn generator_bar(&self) -> CMatrix {
        &self.x_plus - &self.h.mapv(|z| z * I)
    }
}

/// `𝕏_± = Σ_μ [L_μ L_μ† ± τ_x (L_μ L_μ†)^* τ_x]`.
pub fn x_matrices(dissipators: &[Array1<C64>], n: usize) -> Result<(CMatrix, CMatrix)> {
    let dim = 2 * n;
    let mut outer = CMatrix::zeros((dim, dim));
    for (mu, l) in dissipators.iter().enumerate() {
        if l.len() != dim {
            return Err(Error::Dimension(format!(
                "dissipator {mu} has length {}, expected {dim}",
                l.len()
            )));
        }
        for i in 0..dim {
            for j in 0..dim {
                outer[[i, j]] += l[i] * l[j].conj();
            }
        }
    }
    // τ_x X^* τ_x equals τ_x X^T τ_x for Hermitian X
    let mirrored = tau_x_transpose(&outer);
    Ok((&outer + &mirrored, &outer - &mirrored))
}

/// All invariants of a model, with their deviations; empty when valid.
pub fn validate(model: &QuadraticModel) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut check = |what: &'static str, magnitude: f64| {
        if magnitude > 1e-12 {
            out.push(Violation { what, magnitude });
        }
    };
    let h = &model.h;
    check("H + tau_x H^T tau_x = 0", max_abs(&(h + &tau_x_transpose(h))));
    check("H Hermitian", max_abs(&(h - &adjoint(h))));
    let xp = &model.x_plus;
    let xm = &model.x_minus;
    check("X+ Hermitian", max_abs(&(xp - &adjoint(xp))));
    check("tau_x X+^T tau_x = X+", max_abs(&(xp - &tau_x_transpose(xp))));
    check("tau_x X-^T tau_x = -X-", max_abs(&(xm + &tau_x_transpose(xm))));
    let herm = (xp + &adjoint(xp)).mapv(|z| z * 0.5);
    if let Ok(w) = eigenvalues_sorted(&herm) {
        let min = w.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
        check("X+ positive semidefinite", (-min).max(0.0));
    }
    out
}

/// Kitaev chain with gain `√γ_{j+} c_j†` and loss `√γ_{j−} c_j`.
///
/// Without overrides the rates act on sites 1 and N only.
#[derive(Debug, Clone, PartialEq)]
pub struct KitaevParams {
    pub n: usize,
    pub j: f64,
    pub delta: f64,
    pub mu: f64,
    pub gamma_plus: f64,
    pub gamma_minus: f64,
    /// Per-site gain rates, length N, replacing the boundary default.
    pub site_gamma_plus: Option<Vec<f64>>,
    /// Per-site loss rates, length N, replacing the boundary default.
    pub site_gamma_minus: Option<Vec<f64>>,
}

impl KitaevParams {
    pub fn new(n: usize, j: f64, delta: f64, mu: f64, gamma_plus: f64, gamma_minus: f64) -> Self {
        KitaevParams {
            n,
            j,
            delta,
            mu,
            gamma_plus,
            gamma_minus,
            site_gamma_plus: None,
            site_gamma_minus: None,
        }
    }

    pub fn with_mu(&self, mu: f64) -> Self {
        KitaevParams { mu, ..self.clone() }
    }

    fn rates(&self, uniform: f64, site: &Option<Vec<f64>>) -> Vec<f64> {
        match site {
            Some(v) => v.clone(),
            None => {
                let mut v = vec![0.0; self.n];
                v[0] = uniform;
                v[self.n - 1] = uniform;
                v
            }
        }
    }

    pub fn gain_rates(&self) -> Vec<f64> {
        self.rates(self.gamma_plus, &self.site_gamma_plus)
    }

    pub fn loss_rates(&self) -> Vec<f64> {
        self.rates(self.gamma_minus, &self.site_gamma_minus)
    }

    pub fn check(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidParameter(format!(
                "Kitaev chain needs N >= 2, got {}",
                self.n
            )));
        }
        for (name, v) in [("J", self.j), ("Delta", self.delta), ("mu", self.mu)] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} is not finite")));
            }
        }
        for (name, site) in [
            ("gamma_plus", &self.site_gamma_plus),
            ("gamma_minus", &self.site_gamma_minus),
        ] {
            if let Some(v) = site {
                if v.len() != self.n {
                    return Err(Error::InvalidParameter(format!(
                        "{name} override has {} entries, expected {}",
                        v.len(),
                        self.n
                    )));
                }
            }
        }
        for g in self.gain_rates().iter().chain(self.loss_rates().iter()) {
            if !(*g >= 0.0) || !g.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "dissipation rates must be finite and nonnegative, got {g}"
                )));
            }
        }
        Ok(())
    }

    /// `μ_c = 2J[1 − (Δ/J)²]`.
    pub fn critical_mu(&self) -> f64 {
        2.0 * self.j * (1.0 - (self.delta / self.j).powi(2))
    }
}

/// `𝐇 = [[h, Δ̃], [Δ̃†, −h^T]]` with `h_{l,l+1} = J`, `h_ll = −μ` and the
/// antisymmetric pairing block `(Δ̃†)_{l,l+1} = Δ`.
pub fn kitaev_h(p: &KitaevParams) -> CMatrix {
    let n = p.n;
    let mut h = CMatrix::zeros((2 * n, 2 * n));
    let jc = C64::new(p.j, 0.0);
    let dc = C64::new(p.delta, 0.0);
    for l in 0..n {
        h[[l, l]] = C64::new(-p.mu, 0.0);
        h[[n + l, n + l]] = C64::new(p.mu, 0.0);
    }
    for l in 0..n - 1 {
        h[[l, l + 1]] = jc;
        h[[l + 1, l]] = jc.conj();
        h[[n + l, n + l + 1]] = -jc.conj();
        h[[n + l + 1, n + l]] = -jc;
        // lower-left block: ½ c^T D c with D_{l,l+1} = Δ, D_{l+1,l} = −Δ
        h[[n + l, l + 1]] = dc;
        h[[n + l + 1, l]] = -dc;
        // upper-right block is its adjoint
        h[[l + 1, n + l]] = dc.conj();
        h[[l, n + l + 1]] = -dc.conj();
    }
    h
}

/// Loss on `c_j` (1-based) with rate `gamma`.
pub fn loss_vector(n: usize, j: usize, gamma: f64) -> Array1<C64> {
    let mut v = Array1::from_elem(2 * n, ZERO);
    v[j - 1] = ONE * gamma.sqrt();
    v
}

/// Gain on `c_j†` (1-based) with rate `gamma`.
pub fn gain_vector(n: usize, j: usize, gamma: f64) -> Array1<C64> {
    let mut v = Array1::from_elem(2 * n, ZERO);
    v[n + j - 1] = ONE * gamma.sqrt();
    v
}

pub fn build_kitaev(p: &KitaevParams) -> Result<QuadraticModel> {
    p.check()?;
    let mut dissipators = Vec::new();
    for (site, &g) in p.loss_rates().iter().enumerate() {
        if g > 0.0 {
            dissipators.push(loss_vector(p.n, site + 1, g));
        }
    }
    for (site, &g) in p.gain_rates().iter().enumerate() {
        if g > 0.0 {
            dissipators.push(gain_vector(p.n, site + 1, g));
        }
    }
    QuadraticModel::new(kitaev_h(p), dissipators)
}
