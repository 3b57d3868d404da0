#![allow(dead_code)]

pub mod criteria;
pub mod invariants;

use lindblad_cf::linalg::random_symmetric_k;
use lindblad_cf::model::build_kitaev;
use lindblad_cf::{CMatrix, KitaevParams, QuadraticModel, C64};

/// One sub-check of a criterion: label, measured value, outcome.
#[derive(Debug, Clone)]
pub struct Check {
    pub label: String,
    pub detail: String,
    pub pass: bool,
}

impl Check {
    pub fn below(label: impl Into<String>, value: f64, tol: f64) -> Self {
        Check {
            label: label.into(),
            detail: format!("{value:.3e} < {tol:.0e}"),
            pass: value < tol,
        }
    }

    pub fn truth(label: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Check {
            label: label.into(),
            detail: detail.into(),
            pass,
        }
    }
}

pub fn reference_kitaev(n: usize) -> QuadraticModel {
    build_kitaev(&KitaevParams::new(n, 1.0, 0.5, 1.0, 0.1, 0.3)).unwrap()
}

/// Random Hermitian `H₀` with `H₀ + τ_x H₀^T τ_x = 0`.
pub fn random_h0<R: rand::Rng>(rng: &mut R, n: usize) -> CMatrix {
    let k = random_symmetric_k(rng, n, 1.0);
    let kd = k.t().mapv(|z| z.conj());
    (&k + &kd) * C64::new(0.5, 0.0)
}

/// Random Kitaev-type model with boundary gain and loss.
pub fn random_kitaev<R: rand::Rng>(rng: &mut R, n: usize) -> QuadraticModel {
    let p = KitaevParams::new(
        n,
        1.0,
        rng.gen_range(0.1..1.0),
        rng.gen_range(-2.5..2.5),
        rng.gen_range(0.05..0.5),
        rng.gen_range(0.05..0.5),
    );
    build_kitaev(&p).unwrap()
}
