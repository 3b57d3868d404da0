//! Exact dynamics of quadratic open-fermion Lindbladians via the
//! characteristic-function solution, and dynamical correlators of nonlocal
//! (string / Gaussian) operators built on top of it.
//!
//! All single-particle matrices act on the Nambu vector
//! `(c_1, …, c_N, c_1†, …, c_N†)`: indices `0..N` are the annihilation block
//! and `N..2N` the creation block. The Pauli matrices `τ_x`, `τ_z` act on this
//! two-block structure. Site labels in public APIs are 1-based, matching the
//! physics convention; matrix indices are 0-based.
//!
//! Module map:
//!
//! * [`linalg`] dense complex primitives (LU, `expm`, biorthonormal
//!   eigendecomposition, analytic square roots of determinants).
//! * [`model`] quadratic Lindbladians and the boundary-driven Kitaev chain.
//! * [`propagator`] `Q(t)`, `Q̄(t)`, `M(t)`, steady state, rapidities.
//! * [`correlators`] Gaussian operators, Type-I / Type-II correlators and
//!   hard-core anyon Green's functions.
//! * [`observables`] counting statistics, Loschmidt echo, momentum
//!   distribution, bulk dispersion.
//! * [`oracle`] brute-force Fock-space reference implementation.

pub mod correlators;
pub mod error;
pub mod linalg;
pub mod model;
pub mod observables;
pub mod oracle;
pub mod propagator;

pub use error::{Error, Result};
pub use correlators::{
    AnyonCorrelator, AnyonKind, CorrelatorResult, CorrelatorValue, Exponent, GaussianOperator,
    Order, StringMatrix,
};
pub use linalg::{BranchTrace, CMatrix, SpectralDecomposition, C64};
pub use model::{KitaevParams, QuadraticModel};
pub use propagator::{Dynamics, PropagatorSet, RapiditySpectrum};
