//! Gaussian operators and dynamical correlators of nonlocal operators.
//!
//! All correlators are determinant formulas in the covariance data of the
//! initial state. Square roots of determinants are continued along the
//! physical path `K → sK`, `s ∈ [0, 1]`, on which the correlator is an entire
//! function of `s` equal to its `K = 0` value at `s = 0`.

use crate::linalg::{
    continue_sqrt_det, eig_biorthonormal, identity, matexp, max_abs, pfaffian, sqrt_det_analytic_with,
    tau_x_transpose, BranchForm, BranchOptions, BranchTrace, CMatrix, LogDet, Lu, C64, I, ONE,
    ZERO,
};
use crate::model::QuadraticModel;
use crate::propagator::{Dynamics, PropagatorSet};
use crate::{Error, Result};

/// Tolerance for the `τ_x` symmetry of K- and B-matrices.
pub const GAUSSIAN_SYMMETRY_TOL: f64 = 1e-10;

fn half(d: usize) -> CMatrix {
    identity(d) * C64::new(0.5, 0.0)
}

fn k_symmetry(k: &CMatrix) -> f64 {
    max_abs(&(k + &tau_x_transpose(k)))
}

fn b_symmetry(b: &CMatrix) -> f64 {
    max_abs(&(b + &tau_x_transpose(b) - identity(b.nrows())))
}

fn check_even(d: usize) -> Result<usize> {
    if d == 0 || d % 2 != 0 {
        return Err(Error::Dimension(format!(
            "Nambu matrices need even dimension, got {d}"
        )));
    }
    Ok(d / 2)
}

/// A Gaussian operator `e^{c} Γ̂₂(K)` stored through `B = (1 + e^K)^{-1}`.
///
/// The B-form also holds projector-like states (eigenvalues of `B` equal to
/// 0 or 1) that no finite `K` reaches. `log_trace` is `ln Tr` of the operator;
/// density matrices have `log_trace = 0`.
#[derive(Debug, Clone)]
pub struct GaussianOperator {
    n: usize,
    b: CMatrix,
    k: Option<CMatrix>,
    log_trace: C64,
}

impl GaussianOperator {
    /// Normalized state with covariance `B = ⟨Φ Φ†⟩`.
    pub fn from_b(b: CMatrix) -> Result<Self> {
        let n = check_even(b.nrows())?;
        let dev = b_symmetry(&b);
        if dev > 1e-8 {
            return Err(Error::Symmetry {
                what: "B + tau_x B^T tau_x = 1",
                magnitude: dev,
            });
        }
        Ok(GaussianOperator {
            n,
            b,
            k: None,
            log_trace: ZERO,
        })
    }

    /// The operator `Γ̂₂(K)` itself, unnormalized.
    pub fn from_k(k: CMatrix) -> Result<Self> {
        let n = check_even(k.nrows())?;
        let dev = k_symmetry(&k);
        if dev > GAUSSIAN_SYMMETRY_TOL * max_abs(&k).max(1.0) {
            return Err(Error::Symmetry {
                what: "K + tau_x K^T tau_x = 0",
                magnitude: dev,
            });
        }
        let ek = matexp(&k)?;
        let lu = Lu::new(&(identity(2 * n) + &ek))?;
        let b = lu.inverse()?;
        let (_, trace) = sqrt_det_analytic_with(BranchForm::GaussianTrace, &k, BranchOptions::default())?;
        Ok(GaussianOperator {
            n,
            b,
            k: Some(k),
            log_trace: trace.half_log(),
        })
    }

    /// `|0⟩⟨0|`, i.e. `B = diag(1_N, 0_N)`.
    pub fn vacuum(n: usize) -> Self {
        let mut b = CMatrix::zeros((2 * n, 2 * n));
        for i in 0..n {
            b[[i, i]] = ONE;
        }
        GaussianOperator {
            n,
            b,
            k: None,
            log_trace: ZERO,
        }
    }

    /// `e^{−βĤ₀} / Tr e^{−βĤ₀}` with `B = (1 + e^{−β𝐇₀})^{-1}`.
    pub fn thermal(h0: &CMatrix, beta: f64) -> Result<Self> {
        let n = check_even(h0.nrows())?;
        let dev = k_symmetry(h0);
        if dev > GAUSSIAN_SYMMETRY_TOL * max_abs(h0).max(1.0) {
            return Err(Error::Symmetry {
                what: "H0 + tau_x H0^T tau_x = 0",
                magnitude: dev,
            });
        }
        let k = h0 * C64::new(-beta, 0.0);
        let e = matexp(&k)?;
        let b = Lu::new(&(identity(2 * n) + e))?.inverse()?;
        Ok(GaussianOperator {
            n,
            b,
            k: Some(k),
            log_trace: ZERO,
        })
    }

    /// The steady state `B₀ = ½ + M∞`.
    pub fn steady(dynamics: &Dynamics) -> Result<Self> {
        let b = dynamics.steady_covariance()?;
        let mut op = Self::from_b(b)?;
        op.n = dynamics.n();
        Ok(op)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn b(&self) -> &CMatrix {
        &self.b
    }

    pub fn log_trace(&self) -> C64 {
        self.log_trace
    }

    pub fn trace(&self) -> C64 {
        self.log_trace.exp()
    }

    pub fn with_log_trace(mut self, c: C64) -> Self {
        self.log_trace = c;
        self
    }

    /// `K` with `B(1 + e^K) = 1`; `None` for projector-like `B`.
    pub fn k(&self) -> Option<CMatrix> {
        if let Some(k) = &self.k {
            return Some(k.clone());
        }
        let d = 2 * self.n;
        let inv = Lu::new(&self.b).ok()?;
        if inv.rcond() < 1e-12 {
            return None;
        }
        let ek = inv.inverse().ok()? - identity(d);
        let dec = eig_biorthonormal(&ek).ok()?;
        if dec.eigenvalues.iter().any(|z| z.norm() < 1e-12) {
            return None;
        }
        Some(dec.apply_fn(|z| z.ln()))
    }

    /// Largest violation of the `τ_x` symmetry of the active representation.
    pub fn symmetry_violation(&self) -> f64 {
        match &self.k {
            Some(k) => k_symmetry(k).max(b_symmetry(&self.b)),
            None => b_symmetry(&self.b),
        }
    }

    /// `max |B(1 + e^K) − 1|`, when K exists.
    pub fn consistency_error(&self) -> Option<f64> {
        let k = self.k()?;
        let e = matexp(&k).ok()?;
        let d = 2 * self.n;
        Some(max_abs(&(self.b.dot(&(identity(d) + e)) - identity(d))))
    }
}

/// Free-function form of [`GaussianOperator::thermal`].
pub fn gaussian_state_from_thermal(h0: &CMatrix, beta: f64) -> Result<GaussianOperator> {
    GaussianOperator::thermal(h0, beta)
}

pub fn steady_gaussian(model: &QuadraticModel) -> Result<GaussianOperator> {
    GaussianOperator::steady(&Dynamics::new(model)?)
}

/// Exponent `K` of an inserted Gaussian operator `Γ̂₂(K)`.
#[derive(Debug, Clone)]
pub enum Exponent {
    Zero,
    /// Diagonal `K`, stored as its diagonal.
    Diagonal(Vec<C64>),
    Dense(CMatrix),
}

impl Exponent {
    pub fn dense(k: CMatrix) -> Result<Self> {
        check_even(k.nrows())?;
        let dev = k_symmetry(&k);
        if dev > GAUSSIAN_SYMMETRY_TOL * max_abs(&k).max(1.0) {
            return Err(Error::Symmetry {
                what: "K + tau_x K^T tau_x = 0",
                magnitude: dev,
            });
        }
        Ok(Exponent::Dense(k))
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Exponent::Zero => true,
            Exponent::Diagonal(d) => d.iter().all(|z| *z == ZERO),
            Exponent::Dense(k) => k.iter().all(|z| *z == ZERO),
        }
    }

    /// `e^{sK}` as a `d × d` matrix.
    pub fn exp_scaled(&self, s: f64, d: usize) -> Result<CMatrix> {
        match self {
            Exponent::Zero => Ok(identity(d)),
            Exponent::Diagonal(v) => {
                let mut m = CMatrix::zeros((d, d));
                for (i, z) in v.iter().enumerate() {
                    m[[i, i]] = (z * s).exp();
                }
                Ok(m)
            }
            Exponent::Dense(k) => {
                if s == 1.0 {
                    matexp(k)
                } else {
                    matexp(&(k * C64::new(s, 0.0)))
                }
            }
        }
    }

    pub fn matrix(&self, d: usize) -> CMatrix {
        match self {
            Exponent::Zero => CMatrix::zeros((d, d)),
            Exponent::Diagonal(v) => crate::linalg::diag(v),
            Exponent::Dense(k) => k.clone(),
        }
    }
}

/// The diagonal matrix `i φ τ_z 𝔻` for a site set, 1-based.
#[derive(Debug, Clone, PartialEq)]
pub struct StringMatrix {
    pub n: usize,
    pub sites: Vec<usize>,
    pub phi: f64,
}

impl StringMatrix {
    /// Sites `1..=j`, as in `e^{iφ Σ_{m≤j} n̂_m}`.
    pub fn prefix(n: usize, j: usize, phi: f64) -> Self {
        StringMatrix {
            n,
            sites: (1..=j).collect(),
            phi,
        }
    }

    pub fn subsystem(n: usize, sites: &[usize], phi: f64) -> Self {
        StringMatrix {
            n,
            sites: sites.to_vec(),
            phi,
        }
    }

    /// Generic complex counting parameter: the diagonal of `λ τ_z 𝔻`.
    pub fn diagonal_for(n: usize, sites: &[usize], lambda: C64) -> Vec<C64> {
        let mut d = vec![ZERO; 2 * n];
        for &j in sites {
            d[j - 1] = lambda;
            d[n + j - 1] = -lambda;
        }
        d
    }

    /// `K = ± i φ τ_z 𝔻`.
    pub fn exponent(&self, sign: f64) -> Exponent {
        Exponent::Diagonal(Self::diagonal_for(
            self.n,
            &self.sites,
            I * (sign * self.phi),
        ))
    }

    /// `e^{± i φ τ_z 𝔻}`.
    pub fn matrix(&self, sign: f64) -> CMatrix {
        self.exponent(sign).exp_scaled(1.0, 2 * self.n).unwrap()
    }
}

/// Operator order inside the evolved argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    /// `Γ̂₂(K₂) Φ† ρ₀`
    Left,
    /// `ρ₀ Φ† Γ̂₂(K₂)`
    Right,
}

#[derive(Debug, Clone, Copy)]
pub struct CorrelatorOptions {
    pub branch: BranchOptions,
    /// Reciprocal condition below which inverses are not trusted.
    pub rcond_floor: f64,
    /// Offset of the Richardson extrapolation `2f(1−ε) − f(1−2ε)`.
    pub richardson_eps: f64,
}

impl Default for CorrelatorOptions {
    fn default() -> Self {
        CorrelatorOptions {
            branch: BranchOptions::default(),
            rcond_floor: 1e-12,
            richardson_eps: 1e-7,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CorrelatorDiagnostics {
    pub branch: BranchTrace,
    /// Smallest reciprocal condition of `R` and `S` at the endpoint.
    pub min_rcond: f64,
    /// The value was extrapolated past a near-singular endpoint.
    pub richardson: bool,
}

#[derive(Debug, Clone)]
pub enum CorrelatorValue {
    Scalar(C64),
    Matrix(CMatrix),
}

#[derive(Debug, Clone)]
pub struct CorrelatorResult {
    pub value: CorrelatorValue,
    pub t: f64,
    pub sites: Vec<usize>,
    pub phi: Option<f64>,
    pub diagnostics: CorrelatorDiagnostics,
}

impl CorrelatorResult {
    pub fn scalar(&self) -> Option<C64> {
        match &self.value {
            CorrelatorValue::Scalar(z) => Some(*z),
            CorrelatorValue::Matrix(_) => None,
        }
    }

    pub fn matrix(&self) -> Option<&CMatrix> {
        match &self.value {
            CorrelatorValue::Matrix(m) => Some(m),
            CorrelatorValue::Scalar(_) => None,
        }
    }
}

/// `W`, `B`, `R`, `S` for both operator orders.
#[derive(Debug, Clone)]
pub struct AuxiliaryMatrices {
    /// `e^{K₂} e^{K₀}`, absent for projector-like `B₀`.
    pub w20: Option<CMatrix>,
    pub w02: Option<CMatrix>,
    pub b20: CMatrix,
    pub b02: CMatrix,
    pub r20: CMatrix,
    pub r02: CMatrix,
    pub s20: CMatrix,
    pub s02: CMatrix,
}

/// One point of the continuation path.
struct Stage {
    e1: CMatrix,
    e2: CMatrix,
    r: Lu,
    s: Lu,
    /// `B₀R⁻¹` (left) or `R⁻¹B₀` (right).
    x: CMatrix,
}

impl Stage {
    fn log_det(&self) -> LogDet {
        self.r.log_det().mul(&self.s.log_det())
    }

    fn min_rcond(&self) -> f64 {
        self.r.rcond().min(self.s.rcond())
    }
}

struct Evaluator<'a> {
    b0: &'a CMatrix,
    props: &'a PropagatorSet,
    k1: &'a Exponent,
    k2: &'a Exponent,
    order: Order,
}

impl Evaluator<'_> {
    fn dim(&self) -> usize {
        self.b0.nrows()
    }

    /// `R`, `B₂₀` or `B₀₂`, and `S` at path parameter `s`.
    fn matrices(&self, s: f64) -> Result<(CMatrix, CMatrix, CMatrix, CMatrix, CMatrix, Lu)> {
        let d = self.dim();
        let id = identity(d);
        let e1 = self.k1.exp_scaled(s, d)?;
        let e2 = self.k2.exp_scaled(s, d)?;
        let one_minus_b0 = &id - self.b0;
        let r = match self.order {
            Order::Left => self.b0 + &e2.dot(&one_minus_b0),
            Order::Right => self.b0 + &one_minus_b0.dot(&e2),
        };
        let r_lu = Lu::new(&r)?;
        let x = match self.order {
            Order::Left => r_lu.solve_right(self.b0)?,
            Order::Right => r_lu.solve(self.b0)?,
        };
        let p = self.props;
        let b = p.q.dot(&(&x - &half(d))).dot(&p.qbar) + &p.m + half(d);
        Ok((e1, e2, r, b, x, r_lu))
    }

    fn stage(&self, s: f64) -> Result<Stage> {
        let d = self.dim();
        let (e1, e2, _r, b, x, r_lu) = self.matrices(s)?;
        let smat = &b + &(identity(d) - &b).dot(&e1);
        Ok(Stage {
            e1,
            e2,
            r: r_lu,
            s: Lu::new(&smat)?,
            x,
        })
    }

    fn log_det(&self, s: f64) -> Result<LogDet> {
        match self.stage(s) {
            Ok(st) => Ok(st.log_det()),
            Err(Error::Singular { .. }) => Ok(LogDet::zero()),
            Err(e) => Err(e),
        }
    }

    /// Continued prefactor `√(det R det S)` at path endpoint `end`.
    fn prefactor(&self, end: f64, opts: &CorrelatorOptions) -> Result<(C64, BranchTrace)> {
        if self.k1.is_zero() && self.k2.is_zero() {
            return Ok((ONE, BranchTrace::trivial(ONE)));
        }
        continue_sqrt_det(|u: f64| self.log_det(u * end), opts.branch)
    }

    /// `S⁻¹ Q B₀ R⁻¹` (left) or `S⁻¹ Q R⁻¹ (1 − B₀)` (right).
    fn core(&self, st: &Stage) -> Result<CMatrix> {
        let d = self.dim();
        let inner = match self.order {
            Order::Left => self.props.q.dot(&st.x),
            Order::Right => self
                .props
                .q
                .dot(&st.r.solve(&(identity(d) - self.b0))?),
        };
        st.s.solve(&inner)
    }

    fn full(&self, st: &Stage, core: &CMatrix) -> CMatrix {
        match self.order {
            Order::Left => st.e1.dot(core).dot(&st.e2),
            Order::Right => st.e1.dot(core),
        }
    }
}

/// Output of the Type-II engine before element selection.
struct TypeTwo {
    prefactor: C64,
    core: CMatrix,
    full: CMatrix,
    diagnostics: CorrelatorDiagnostics,
}

fn type_two_engine(ev: &Evaluator, opts: &CorrelatorOptions) -> Result<TypeTwo> {
    let at = |end: f64| -> Result<(C64, CMatrix, CMatrix, BranchTrace, f64)> {
        let (pref, trace) = ev.prefactor(end, opts)?;
        let st = ev.stage(end)?;
        let core = ev.core(&st)?;
        let full = ev.full(&st, &core);
        Ok((pref, core, full, trace, st.min_rcond()))
    };
    let direct = match ev.stage(1.0) {
        Ok(st) if st.min_rcond() >= opts.rcond_floor => Some(st.min_rcond()),
        Ok(_) | Err(Error::Singular { .. }) => None,
        Err(e) => return Err(e),
    };
    if direct.is_some() {
        let (pref, core, full, trace, rc) = at(1.0)?;
        return Ok(TypeTwo {
            prefactor: pref,
            core,
            full,
            diagnostics: CorrelatorDiagnostics {
                branch: trace,
                min_rcond: rc,
                richardson: false,
            },
        });
    }
    let eps = opts.richardson_eps;
    let (p1, c1, f1, t1, rc1) = at(1.0 - eps)?;
    let (p2, c2, f2, _, _) = at(1.0 - 2.0 * eps)?;
    let two = C64::new(2.0, 0.0);
    // core and full carry the prefactor after extrapolation
    Ok(TypeTwo {
        prefactor: ONE,
        core: &c1 * (p1 * two) - &c2 * p2,
        full: &f1 * (p1 * two) - &f2 * p2,
        diagnostics: CorrelatorDiagnostics {
            branch: t1,
            min_rcond: rc1,
            richardson: true,
        },
    })
}

fn check_state(state: &GaussianOperator, props: &PropagatorSet) -> Result<()> {
    let d = props.q.nrows();
    if state.b.nrows() != d {
        return Err(Error::Dimension(format!(
            "state has dimension {} but propagators have {d}",
            state.b.nrows()
        )));
    }
    Ok(())
}

/// `Tr{Γ̂₂(K₁) e^{ℒt}[Γ̂₂(K₂) ρ₀]} = √(det R₂₀ det S₂₀)`, times `Tr ρ₀`.
pub fn type_one_at(
    props: &PropagatorSet,
    state: &GaussianOperator,
    k1: &Exponent,
    k2: &Exponent,
    opts: &CorrelatorOptions,
) -> Result<CorrelatorResult> {
    check_state(state, props)?;
    let ev = Evaluator {
        b0: &state.b,
        props,
        k1,
        k2,
        order: Order::Left,
    };
    let (value, trace) = ev.prefactor(1.0, opts)?;
    let min_rcond = ev.stage(1.0).map(|s| s.min_rcond()).unwrap_or(0.0);
    Ok(CorrelatorResult {
        value: CorrelatorValue::Scalar(value * state.log_trace.exp()),
        t: props.t,
        sites: vec![],
        phi: None,
        diagnostics: CorrelatorDiagnostics {
            branch: trace,
            min_rcond,
            richardson: false,
        },
    })
}

/// All single-particle nonlocal correlators
/// `Tr{Φ_a Γ̂₂(K₁) e^{ℒ_f t}[Γ̂₂(K₂) Φ_b† ρ₀]}` (left) or
/// `Tr{Φ_a Γ̂₂(K₁) e^{ℒ_f t}[ρ₀ Φ_b† Γ̂₂(K₂)]}` (right) as one matrix.
pub fn type_two_at(
    props: &PropagatorSet,
    state: &GaussianOperator,
    k1: &Exponent,
    k2: &Exponent,
    order: Order,
    opts: &CorrelatorOptions,
) -> Result<CorrelatorResult> {
    check_state(state, props)?;
    let ev = Evaluator {
        b0: &state.b,
        props,
        k1,
        k2,
        order,
    };
    let out = type_two_engine(&ev, opts)?;
    Ok(CorrelatorResult {
        value: CorrelatorValue::Matrix(out.full * (out.prefactor * state.log_trace.exp())),
        t: props.t,
        sites: vec![],
        phi: None,
        diagnostics: out.diagnostics,
    })
}

pub fn type_one(
    model: &QuadraticModel,
    k1: &CMatrix,
    k2: &CMatrix,
    state: &GaussianOperator,
    t: f64,
) -> Result<CorrelatorResult> {
    let props = Dynamics::new(model)?.propagators(t)?;
    type_one_at(
        &props,
        state,
        &Exponent::dense(k1.clone())?,
        &Exponent::dense(k2.clone())?,
        &CorrelatorOptions::default(),
    )
}

pub fn type_two(
    model: &QuadraticModel,
    k1: &CMatrix,
    k2: &CMatrix,
    state: &GaussianOperator,
    t: f64,
    order: Order,
) -> Result<CorrelatorResult> {
    let props = Dynamics::new(model)?.propagators(t)?;
    type_two_at(
        &props,
        state,
        &Exponent::dense(k1.clone())?,
        &Exponent::dense(k2.clone())?,
        order,
        &CorrelatorOptions::default(),
    )
}

/// Auxiliary matrices of both orders at one time.
pub fn auxiliary_matrices(
    props: &PropagatorSet,
    state: &GaussianOperator,
    k1: &Exponent,
    k2: &Exponent,
) -> Result<AuxiliaryMatrices> {
    check_state(state, props)?;
    let d = state.b.nrows();
    let mk = |order| Evaluator {
        b0: &state.b,
        props,
        k1,
        k2,
        order,
    };
    let (e1, e2, r20, b20, _, _) = mk(Order::Left).matrices(1.0)?;
    let (_, _, r02, b02, _, _) = mk(Order::Right).matrices(1.0)?;
    let id = identity(d);
    let s20 = &b20 + &(&id - &b20).dot(&e1);
    let s02 = &b02 + &(&id - &b02).dot(&e1);
    let ek0 = Lu::new(&state.b)
        .ok()
        .filter(|lu| lu.rcond() > 1e-12)
        .and_then(|lu| lu.inverse().ok())
        .map(|inv| inv - &id);
    Ok(AuxiliaryMatrices {
        w20: ek0.as_ref().map(|e| e2.dot(e)),
        w02: ek0.as_ref().map(|e| e.dot(&e2)),
        b20,
        b02,
        r20,
        r02,
        s20,
        s02,
    })
}

/// Hard-core anyon Green's functions in the steady state,
/// `f_l = e^{−iφ Σ_{m≤l} n̂_m} ĉ_l`.
#[derive(Debug, Clone)]
pub struct AnyonCorrelator {
    dynamics: Dynamics,
    steady: GaussianOperator,
    pub options: CorrelatorOptions,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnyonKind {
    /// `iG^>_{lj}(t) = ⟨f_l(t) f_j†⟩`
    Greater,
    /// `iG^<_{lj}(t) = ⟨f_j† f_l(t)⟩`
    Lesser,
}

impl AnyonCorrelator {
    pub fn new(model: &QuadraticModel) -> Result<Self> {
        let dynamics = Dynamics::new(model)?;
        let steady = GaussianOperator::steady(&dynamics)?;
        Ok(AnyonCorrelator {
            dynamics,
            steady,
            options: CorrelatorOptions::default(),
        })
    }

    pub fn n(&self) -> usize {
        self.dynamics.n()
    }

    pub fn dynamics(&self) -> &Dynamics {
        &self.dynamics
    }

    pub fn steady(&self) -> &GaussianOperator {
        &self.steady
    }

    /// Propagators at `|t|`, shareable across sites and `φ`.
    pub fn propagators(&self, t: f64) -> Result<PropagatorSet> {
        self.dynamics.propagators(t.abs())
    }

    fn check_sites(&self, l: usize, j: usize) -> Result<()> {
        let n = self.n();
        if l == 0 || j == 0 || l > n || j > n {
            return Err(Error::InvalidParameter(format!(
                "sites must lie in 1..={n}, got ({l}, {j})"
            )));
        }
        Ok(())
    }

    /// Evaluates with precomputed propagators at `|t|`; `negative` selects `−|t|`.
    pub fn evaluate_with(
        &self,
        props: &PropagatorSet,
        kind: AnyonKind,
        l: usize,
        j: usize,
        negative: bool,
        phi: f64,
    ) -> Result<CorrelatorResult> {
        self.check_sites(l, j)?;
        let n = self.n();
        let sl = StringMatrix::prefix(n, l, phi);
        let sj = StringMatrix::prefix(n, j, phi);
        // each case is one Type-II element; the reordering phases of the
        // strings cancel against the diagonal e^{K} factors
        let (k1, k2, order, a, b) = match (kind, negative) {
            (AnyonKind::Greater, false) => (sl.exponent(-1.0), sj.exponent(1.0), Order::Left, l - 1, j - 1),
            (AnyonKind::Greater, true) => (sj.exponent(1.0), sl.exponent(-1.0), Order::Right, n + j - 1, n + l - 1),
            (AnyonKind::Lesser, false) => (sl.exponent(-1.0), sj.exponent(1.0), Order::Right, l - 1, j - 1),
            (AnyonKind::Lesser, true) => (sj.exponent(1.0), sl.exponent(-1.0), Order::Left, n + j - 1, n + l - 1),
        };
        let ev = Evaluator {
            b0: &self.steady.b,
            props,
            k1: &k1,
            k2: &k2,
            order,
        };
        let out = type_two_engine(&ev, &self.options)?;
        let phase = C64::from_polar(1.0, phi * (j as f64 - l as f64) / 2.0);
        let value = phase * out.prefactor * out.core[[a, b]];
        let t = if negative { -props.t } else { props.t };
        Ok(CorrelatorResult {
            value: CorrelatorValue::Scalar(value),
            t,
            sites: vec![l, j],
            phi: Some(phi),
            diagnostics: out.diagnostics,
        })
    }

    pub fn evaluate(&self, kind: AnyonKind, l: usize, j: usize, t: f64, phi: f64) -> Result<CorrelatorResult> {
        let props = self.propagators(t)?;
        self.evaluate_with(&props, kind, l, j, t < 0.0, phi)
    }

    pub fn greater(&self, l: usize, j: usize, t: f64, phi: f64) -> Result<C64> {
        Ok(self.evaluate(AnyonKind::Greater, l, j, t, phi)?.scalar().unwrap())
    }

    pub fn lesser(&self, l: usize, j: usize, t: f64, phi: f64) -> Result<C64> {
        Ok(self.evaluate(AnyonKind::Lesser, l, j, t, phi)?.scalar().unwrap())
    }

    /// Values on a `(t, l)` grid at fixed `j` and `φ`, sharing propagators per time.
    pub fn greater_grid(&self, j: usize, phi: f64, times: &[f64], sites: &[usize]) -> Result<Vec<Vec<C64>>> {
        times
            .iter()
            .map(|&t| {
                let props = self.propagators(t)?;
                sites
                    .iter()
                    .map(|&l| {
                        Ok(self
                            .evaluate_with(&props, AnyonKind::Greater, l, j, t < 0.0, phi)?
                            .scalar()
                            .unwrap())
                    })
                    .collect()
            })
            .collect()
    }
}

pub fn anyon_greater(model: &QuadraticModel, l: usize, j: usize, t: f64, phi: f64) -> Result<C64> {
    AnyonCorrelator::new(model)?.greater(l, j, t, phi)
}

pub fn anyon_lesser(model: &QuadraticModel, l: usize, j: usize, t: f64, phi: f64) -> Result<C64> {
    AnyonCorrelator::new(model)?.lesser(l, j, t, phi)
}

pub(crate) fn check_sites(n: usize, sites: &[usize]) -> Result<()> {
    if sites.is_empty() {
        return Err(Error::InvalidParameter("subsystem must be nonempty".into()));
    }
    let mut seen = vec![false; n + 1];
    for &s in sites {
        if s == 0 || s > n || seen[s] {
            return Err(Error::InvalidParameter(format!(
                "subsystem sites must be distinct and lie in 1..={n}, got {sites:?}"
            )));
        }
        seen[s] = true;
    }
    Ok(())
}

/// Counting generating function as a Pfaffian.
///
/// On `A ∪ (A + N)` write `V = P(1 − B) + QB` with `P`, `Q` the particle and
/// hole projectors and `J = [[0, −1], [1, 0]]`. Then `J V` is antisymmetric,
/// `χ(λ)² = det[1 + (e^λ − 1)V]` and `χ(λ) = Pf[J + (e^λ − 1)JV] / Pf J`.
#[derive(Debug, Clone)]
pub struct CountingPfaffian {
    j: CMatrix,
    jv: CMatrix,
    pf_j: LogDet,
    /// Antisymmetry defect of `J V` before projection.
    pub defect: f64,
}

impl CountingPfaffian {
    pub fn new(b: &CMatrix, sites: &[usize]) -> Result<Self> {
        check_sites(b.nrows() / 2, sites)?;
        let n = b.nrows() / 2;
        let m = sites.len();
        let idx: Vec<usize> = sites
            .iter()
            .map(|&s| s - 1)
            .chain(sites.iter().map(|&s| n + s - 1))
            .collect();
        let v = CMatrix::from_shape_fn((2 * m, 2 * m), |(a, c)| {
            let x = b[[idx[a], idx[c]]];
            match (a < m, a == c) {
                (true, true) => ONE - x,
                (true, false) => -x,
                (false, _) => x,
            }
        });
        let mut j = CMatrix::zeros((2 * m, 2 * m));
        for a in 0..m {
            j[[a, m + a]] = -ONE;
            j[[m + a, a]] = ONE;
        }
        let jv = j.dot(&v);
        let defect = max_abs(&(&jv + &jv.t()));
        let scale = max_abs(&jv).max(1.0);
        if defect > 1e-8 * scale {
            return Err(Error::Symmetry {
                what: "covariance lacks particle-hole symmetry on the subsystem",
                magnitude: defect,
            });
        }
        let jv = (&jv - &jv.t()) * C64::new(0.5, 0.0);
        let pf_j = pfaffian(&j)?;
        Ok(CountingPfaffian {
            j,
            jv,
            pf_j,
            defect,
        })
    }

    pub fn chi(&self, lambda: C64) -> Result<C64> {
        let a = &self.j + &(&self.jv * (lambda.exp() - 1.0));
        let pf = pfaffian(&a)?;
        if pf.is_zero() {
            return Ok(ZERO);
        }
        Ok(pf.phase / self.pf_j.phase * (pf.ln_abs - self.pf_j.ln_abs).exp())
    }
}

/// Equal-time `⟨f_j† f_l⟩` for a Gaussian state with covariance `b0`.
///
/// Only the sites between `j` and `l` carry the string, so the correlator is
/// evaluated on the reduced state of that block.
pub fn static_anyon_density(
    b0: &CMatrix,
    j: usize,
    l: usize,
    phi: f64,
    opts: &CorrelatorOptions,
) -> Result<C64> {
    let n = check_even(b0.nrows())?;
    if j == 0 || l == 0 || j > n || l > n {
        return Err(Error::InvalidParameter(format!(
            "sites must lie in 1..={n}, got ({j}, {l})"
        )));
    }
    if j == l {
        return Ok(ONE - b0[[j - 1, j - 1]]);
    }
    if l < j {
        return Ok(static_anyon_density(b0, l, j, phi, opts)?.conj());
    }
    // j < l: f_j† f_l = ĉ_j† e^{−iφ Σ_{j<m<l} n̂_m} ĉ_l
    let w = l - j + 1;
    let sites: Vec<usize> = (j..=l).collect();
    let sub = nambu_block(b0, &sites);
    let at = |phi: f64| -> Result<(C64, f64)> { static_block(&sub, w, phi) };
    let (value, rcond) = at(phi)?;
    if rcond >= opts.rcond_floor {
        return Ok(value);
    }
    let eps = opts.richardson_eps;
    let (v1, _) = at(phi * (1.0 - eps))?;
    let (v2, _) = at(phi * (1.0 - 2.0 * eps))?;
    Ok(v1 * 2.0 - v2)
}

/// `⟨e^{−iφ N_S}⟩ [S⁻¹ B]_{(w, 2w−1)}` on a block whose interior is `S`,
/// with `S = B + (1 − B) e^{−iφτ_z𝔻_S}`, and the condition of `S`.
fn static_block(sub: &CMatrix, w: usize, phi: f64) -> Result<(C64, f64)> {
    let interior: Vec<usize> = (2..w).collect();
    let chi = if interior.is_empty() {
        ONE
    } else {
        CountingPfaffian::new(sub, &interior)?.chi(-I * phi)?
    };
    let d = 2 * w;
    let mut e1 = vec![ONE; d];
    for m in 1..w - 1 {
        e1[m] = C64::from_polar(1.0, -phi);
        e1[w + m] = C64::from_polar(1.0, phi);
    }
    let smat = CMatrix::from_shape_fn((d, d), |(a, c)| {
        let one = if a == c { ONE } else { ZERO };
        sub[[a, c]] + (one - sub[[a, c]]) * e1[c]
    });
    let lu = match Lu::new(&smat) {
        Ok(lu) => lu,
        Err(Error::Singular { .. }) => return Ok((ZERO, 0.0)),
        Err(e) => return Err(e),
    };
    let col = sub.slice(ndarray::s![.., d - 1..d]).to_owned();
    let x = lu.solve(&col)?;
    Ok((chi * x[[w, 0]], lu.rcond()))
}

/// The full matrix `G_{jl} = ⟨f_j† f_l⟩`.
pub fn static_anyon_matrix(b0: &CMatrix, phi: f64, opts: &CorrelatorOptions) -> Result<CMatrix> {
    let n = check_even(b0.nrows())?;
    let mut g = CMatrix::zeros((n, n));
    for j in 1..=n {
        g[[j - 1, j - 1]] = static_anyon_density(b0, j, j, phi, opts)?;
        for l in j + 1..=n {
            let v = static_anyon_density(b0, j, l, phi, opts)?;
            g[[j - 1, l - 1]] = v;
            g[[l - 1, j - 1]] = v.conj();
        }
    }
    Ok(g)
}

/// Principal `2w × 2w` block of a Nambu matrix on sites `lo+1..=lo+w`.
pub fn nambu_block(b: &CMatrix, sites: &[usize]) -> CMatrix {
    let n = b.nrows() / 2;
    let idx: Vec<usize> = sites
        .iter()
        .map(|&s| s - 1)
        .chain(sites.iter().map(|&s| n + s - 1))
        .collect();
    let w = idx.len();
    CMatrix::from_shape_fn((w, w), |(a, c)| b[[idx[a], idx[c]]])
}
