//! Brute-force Fock-space reference implementation.
//!
//! Jordan-Wigner convention: `c_j = (Π_{m<j} σ^z_m) σ^−_j` with
//! `σ^z = (−1)^{n}`, basis index `Σ_j n_j 2^{j−1}` (site 1 varies fastest).
//! Superoperators act on column-stacked density matrices, so that
//! `vec(A X B) = (B^T ⊗ A) vec(X)`.

use std::collections::HashMap;
use std::ops::Deref;
use std::sync::{Arc, Mutex};

use crate::linalg::{
    adjoint, identity, matexp, max_abs, CMatrix, Lu, C64, I, ONE, ZERO,
};
use crate::model::QuadraticModel;
use crate::{Error, Result};

/// Largest N for which Fock operators are built at all.
pub const FOCK_MAX_N: usize = 12;
/// Largest N for dense superoperators.
pub const DENSE_MAX_N: usize = 5;

/// A `2^N × 2^N` operator on the Fock space of N modes.
#[derive(Debug, Clone)]
pub struct FockOperator {
    pub n: usize,
    pub matrix: CMatrix,
}

impl Deref for FockOperator {
    type Target = CMatrix;
    fn deref(&self) -> &CMatrix {
        &self.matrix
    }
}

impl FockOperator {
    pub fn new(n: usize, matrix: CMatrix) -> Self {
        debug_assert_eq!(matrix.nrows(), 1 << n);
        FockOperator { n, matrix }
    }

    pub fn dagger(&self) -> FockOperator {
        FockOperator::new(self.n, adjoint(&self.matrix))
    }

    pub fn dot(&self, other: &FockOperator) -> FockOperator {
        FockOperator::new(self.n, self.matrix.dot(&other.matrix))
    }

    pub fn trace(&self) -> C64 {
        self.matrix.diag().sum()
    }

    pub fn scale(&self, s: C64) -> FockOperator {
        FockOperator::new(self.n, &self.matrix * s)
    }
}

fn check_cap(n: usize, limit: usize) -> Result<()> {
    if n > limit {
        return Err(Error::OracleCap { n, limit });
    }
    Ok(())
}

/// Mode operators on the Fock space of N sites.
#[derive(Debug, Clone)]
pub struct FockSpace {
    n: usize,
    annihilators: Vec<CMatrix>,
}

impl FockSpace {
    pub fn new(n: usize) -> Result<Self> {
        check_cap(n, FOCK_MAX_N)?;
        let dim = 1usize << n;
        let mut annihilators = Vec::with_capacity(n);
        for j in 0..n {
            let mut c = CMatrix::zeros((dim, dim));
            for state in 0..dim {
                if state >> j & 1 == 1 {
                    let below = (state & ((1 << j) - 1)).count_ones();
                    let sign = if below % 2 == 0 { 1.0 } else { -1.0 };
                    c[[state ^ (1 << j), state]] = C64::new(sign, 0.0);
                }
            }
            annihilators.push(c);
        }
        Ok(FockSpace { n, annihilators })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    fn op(&self, m: CMatrix) -> FockOperator {
        FockOperator::new(self.n, m)
    }

    pub fn identity(&self) -> FockOperator {
        self.op(identity(self.dim()))
    }

    /// `c_j`, 1-based.
    pub fn c(&self, j: usize) -> FockOperator {
        self.op(self.annihilators[j - 1].clone())
    }

    /// `c_j†`, 1-based.
    pub fn cdag(&self, j: usize) -> FockOperator {
        self.op(adjoint(&self.annihilators[j - 1]))
    }

    /// Nambu component `Φ_a`, 0-based: `c_{a+1}` or `c_{a−N+1}†`.
    pub fn nambu(&self, a: usize) -> FockOperator {
        if a < self.n {
            self.c(a + 1)
        } else {
            self.cdag(a - self.n + 1)
        }
    }

    fn diagonal<F: Fn(usize) -> C64>(&self, f: F) -> FockOperator {
        let dim = self.dim();
        let mut m = CMatrix::zeros((dim, dim));
        for s in 0..dim {
            m[[s, s]] = f(s);
        }
        self.op(m)
    }

    /// `n̂_j`, 1-based.
    pub fn number(&self, j: usize) -> FockOperator {
        self.diagonal(|s| C64::new((s >> (j - 1) & 1) as f64, 0.0))
    }

    /// `Q̂_A = Σ_{j∈A} n̂_j` for 1-based sites.
    pub fn charge(&self, sites: &[usize]) -> FockOperator {
        self.diagonal(|s| {
            C64::new(
                sites.iter().filter(|&&j| s >> (j - 1) & 1 == 1).count() as f64,
                0.0,
            )
        })
    }

    pub fn total_number(&self) -> FockOperator {
        self.diagonal(|s| C64::new(s.count_ones() as f64, 0.0))
    }

    /// `P̂_F = e^{iπN̂}`.
    pub fn parity(&self) -> FockOperator {
        self.diagonal(|s| C64::new(if s.count_ones() % 2 == 0 { 1.0 } else { -1.0 }, 0.0))
    }

    /// `e^{iφ Σ_{m≤l} n̂_m}`.
    pub fn string(&self, phi: f64, l: usize) -> FockOperator {
        let sites: Vec<usize> = (1..=l).collect();
        self.diagonal(|s| {
            let q = sites.iter().filter(|&&j| s >> (j - 1) & 1 == 1).count() as f64;
            C64::from_polar(1.0, phi * q)
        })
    }

    /// Projector onto `Q̂_A = q`.
    pub fn charge_projector(&self, sites: &[usize], q: usize) -> FockOperator {
        self.diagonal(|s| {
            let k = sites.iter().filter(|&&j| s >> (j - 1) & 1 == 1).count();
            if k == q {
                ONE
            } else {
                ZERO
            }
        })
    }

    /// Hard-core anyon `f_l = e^{−iφ Σ_{m≤l} n̂_m} c_l`.
    pub fn anyon(&self, l: usize, phi: f64) -> FockOperator {
        self.string(-phi, l).dot(&self.c(l))
    }

    /// `f_l† = c_l† e^{iφ Σ_{m≤l} n̂_m}`.
    pub fn anyon_dag(&self, l: usize, phi: f64) -> FockOperator {
        self.cdag(l).dot(&self.string(phi, l))
    }

    /// `½ Φ† K Φ` including the constant from the `c c†` ordering.
    pub fn quadratic_form(&self, k: &CMatrix) -> Result<FockOperator> {
        let d = 2 * self.n;
        if k.dim() != (d, d) {
            return Err(Error::Dimension(format!(
                "quadratic form needs a {d}x{d} matrix, got {:?}",
                k.dim()
            )));
        }
        let phi: Vec<FockOperator> = (0..d).map(|a| self.nambu(a)).collect();
        let phi_dag: Vec<CMatrix> = phi.iter().map(|p| adjoint(&p.matrix)).collect();
        let mut out = CMatrix::zeros((self.dim(), self.dim()));
        for a in 0..d {
            for b in 0..d {
                let kab = k[[a, b]];
                if kab != ZERO {
                    out = out + phi_dag[a].dot(&phi[b].matrix) * (kab * 0.5);
                }
            }
        }
        Ok(self.op(out))
    }

    /// `Γ̂₂(K) = exp(½ Φ† K Φ)`.
    pub fn gaussian(&self, k: &CMatrix) -> Result<FockOperator> {
        let q = self.quadratic_form(k)?;
        Ok(self.op(matexp(&q.matrix)?))
    }

    pub fn hamiltonian(&self, model: &QuadraticModel) -> Result<FockOperator> {
        self.quadratic_form(model.h())
    }

    /// `L̂_μ = Σ_a (L_μ)_a^* Φ_a`.
    pub fn jump_operators(&self, model: &QuadraticModel) -> Vec<FockOperator> {
        model
            .dissipators()
            .iter()
            .map(|l| {
                let mut m = CMatrix::zeros((self.dim(), self.dim()));
                for (a, la) in l.iter().enumerate() {
                    if *la != ZERO {
                        m = m + self.nambu(a).matrix * la.conj();
                    }
                }
                self.op(m)
            })
            .collect()
    }

    /// `e^{−βĤ₀} / Tr e^{−βĤ₀}` with `Ĥ₀ = ½ Φ† 𝐇₀ Φ`.
    pub fn thermal_state(&self, h0: &CMatrix, beta: f64) -> Result<FockOperator> {
        let q = self.quadratic_form(h0)?;
        let rho = matexp(&(&q.matrix * C64::new(-beta, 0.0)))?;
        let tr = rho.diag().sum();
        Ok(self.op(rho / tr))
    }

    /// The empty state `|0⟩⟨0|`.
    pub fn vacuum(&self) -> FockOperator {
        self.diagonal(|s| if s == 0 { ONE } else { ZERO })
    }

    /// `C_ab = Tr(Φ_a Φ_b† ρ)`.
    pub fn covariance(&self, rho: &FockOperator) -> CMatrix {
        let d = 2 * self.n;
        let phi: Vec<FockOperator> = (0..d).map(|a| self.nambu(a)).collect();
        CMatrix::from_shape_fn((d, d), |(a, b)| {
            phi[a].dot(&phi[b].dagger()).dot(rho).trace()
        })
    }
}

fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ra, ca) = a.dim();
    let (rb, cb) = b.dim();
    let mut out = CMatrix::zeros((ra * rb, ca * cb));
    for i in 0..ra {
        for j in 0..ca {
            let aij = a[[i, j]];
            if aij == ZERO {
                continue;
            }
            for k in 0..rb {
                for l in 0..cb {
                    out[[i * rb + k, j * cb + l]] = aij * b[[k, l]];
                }
            }
        }
    }
    out
}

pub fn vectorize(x: &CMatrix) -> ndarray::Array1<C64> {
    let d = x.nrows();
    ndarray::Array1::from_shape_fn(d * x.ncols(), |k| x[[k % d, k / d]])
}

pub fn unvectorize(v: &ndarray::Array1<C64>, d: usize) -> CMatrix {
    CMatrix::from_shape_fn((d, d), |(i, j)| v[i + j * d])
}

/// Dense Liouvillian acting on column-stacked operators.
#[derive(Debug, Clone)]
pub struct SuperOperator {
    pub n: usize,
    pub matrix: CMatrix,
    /// Built with the `−2 L ∘ L†` jump sign.
    pub fermionic: bool,
}

impl SuperOperator {
    /// `e^{ℒt}` as a dense `4^N × 4^N` matrix.
    pub fn exp(&self, t: f64) -> Result<CMatrix> {
        matexp(&(&self.matrix * C64::new(t, 0.0)))
    }

    pub fn apply(&self, x: &CMatrix) -> CMatrix {
        let d = x.nrows();
        unvectorize(&self.matrix.dot(&vectorize(x)), d)
    }
}

/// Applies a precomputed `e^{ℒt}` to an operator.
pub fn propagate(prop: &CMatrix, x: &FockOperator) -> FockOperator {
    let d = x.matrix.nrows();
    FockOperator::new(x.n, unvectorize(&prop.dot(&vectorize(&x.matrix)), d))
}

/// `ℒ(ρ) = −i[Ĥ, ρ] + Σ_μ (±2 L̂ρL̂† − {L̂†L̂, ρ})`, `−` when `fermionic`.
pub fn liouvillian(model: &QuadraticModel, fermionic: bool) -> Result<SuperOperator> {
    let n = model.n();
    check_cap(n, DENSE_MAX_N)?;
    let space = FockSpace::new(n)?;
    let h = space.hamiltonian(model)?;
    let dim = space.dim();
    let id = identity(dim);
    let mut l = (kron(&id, &h.matrix) - kron(&h.matrix.t().to_owned(), &id)) * (-I);
    let jump_sign = if fermionic { -2.0 } else { 2.0 };
    for op in space.jump_operators(model) {
        let ldag_l = adjoint(&op.matrix).dot(&op.matrix);
        let conj = op.matrix.mapv(|z| z.conj());
        l = l + kron(&conj, &op.matrix) * C64::new(jump_sign, 0.0)
            - kron(&id, &ldag_l)
            - kron(&ldag_l.t().to_owned(), &id);
    }
    Ok(SuperOperator {
        n,
        matrix: l,
        fermionic,
    })
}

pub fn oracle_evolve(model: &QuadraticModel, rho0: &FockOperator, t: f64) -> Result<FockOperator> {
    let l = liouvillian(model, false)?;
    Ok(propagate(&l.exp(t)?, rho0))
}

/// Null vector of `ℒ` normalized to unit trace.
pub fn steady_state(model: &QuadraticModel) -> Result<FockOperator> {
    let l = liouvillian(model, false)?;
    let d = 1usize << model.n();
    let mut a = l.matrix.clone();
    let mut rhs = CMatrix::zeros((d * d, 1));
    for k in 0..d * d {
        a[[0, k]] = ZERO;
    }
    for i in 0..d {
        a[[0, i + i * d]] = ONE;
    }
    rhs[[0, 0]] = ONE;
    let lu = Lu::new(&a)?;
    if lu.rcond() < 1e-13 {
        return Err(Error::ZeroGap { gap: 0.0 });
    }
    let v = lu.solve(&rhs)?;
    let rho = CMatrix::from_shape_fn((d, d), |(i, j)| v[[i + j * d, 0]]);
    let herm = (&rho + &adjoint(&rho)) * C64::new(0.5, 0.0);
    Ok(FockOperator::new(model.n(), herm))
}

/// Which side of the state an inserted operator multiplies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `X ρ`
    Left,
    /// `ρ X`
    Right,
}

/// `Tr{A e^{ℒt}[B ρ]}` or `Tr{A e^{ℒt}[ρ B]}` for a precomputed `e^{ℒt}`.
pub fn regression(
    prop: &CMatrix,
    a: &FockOperator,
    b: &FockOperator,
    rho: &FockOperator,
    side: Side,
) -> C64 {
    let x = match side {
        Side::Left => b.dot(rho),
        Side::Right => rho.dot(b),
    };
    a.dot(&propagate(prop, &x)).trace()
}

/// Closed-form quantity requested from the oracle.
#[derive(Debug, Clone)]
pub enum OracleQuery {
    /// `⟨Φ Φ†⟩` at time `t` starting from `rho0`.
    Covariance { rho0: FockOperator, t: f64 },
    /// `−iθ(t)⟨{Φ(t), Φ†}⟩` in the steady state.
    Retarded { t: f64 },
    /// `−iθ(t)⟨[n̂_i(t), n̂_j]⟩` in the steady state, 1-based sites.
    Response { i: usize, j: usize, t: f64 },
    /// `Tr{Γ̂₂(K₁) e^{ℒt}[Γ̂₂(K₂) ρ₀]}`.
    TypeI {
        k1: CMatrix,
        k2: CMatrix,
        rho0: FockOperator,
        t: f64,
    },
    /// `Tr{Φ_a Γ̂₂(K₁) e^{ℒ_f t}[Γ̂₂(K₂) Φ_b† ρ₀]}` (left) or
    /// `Tr{Φ_a Γ̂₂(K₁) e^{ℒ_f t}[ρ₀ Φ_b† Γ̂₂(K₂)]}` (right).
    TypeII {
        k1: CMatrix,
        k2: CMatrix,
        rho0: FockOperator,
        t: f64,
        side: Side,
    },
    /// `iG^>_{lj}(t)` in the steady state, either sign of `t`.
    AnyonGreater { l: usize, j: usize, t: f64, phi: f64 },
    /// `iG^<_{lj}(t)` in the steady state, either sign of `t`.
    AnyonLesser { l: usize, j: usize, t: f64, phi: f64 },
    /// `Tr{e^{λQ̂_A} e^{ℒt}[ρ₀]}`.
    FcsChi {
        sites: Vec<usize>,
        lambda: C64,
        rho0: FockOperator,
        t: f64,
    },
    /// `P_n = Tr{Π_n e^{ℒt}[ρ₀]}`, `n = 0..|A|`.
    FcsPn {
        sites: Vec<usize>,
        rho0: FockOperator,
        t: f64,
    },
    /// `Tr[ρ₀ e^{ℒt}[ρ₀]]`.
    Loschmidt { rho0: FockOperator, t: f64 },
}

#[derive(Debug, Clone)]
pub enum OracleValue {
    Scalar(C64),
    Matrix(CMatrix),
    Distribution(Vec<f64>),
}

impl OracleValue {
    pub fn scalar(&self) -> Option<C64> {
        match self {
            OracleValue::Scalar(z) => Some(*z),
            _ => None,
        }
    }

    pub fn matrix(&self) -> Option<&CMatrix> {
        match self {
            OracleValue::Matrix(m) => Some(m),
            _ => None,
        }
    }

    pub fn distribution(&self) -> Option<&[f64]> {
        match self {
            OracleValue::Distribution(p) => Some(p),
            _ => None,
        }
    }
}

/// Oracle bound to one model with cached Liouvillians and steady state.
pub struct Oracle {
    pub space: FockSpace,
    pub l: SuperOperator,
    pub lf: SuperOperator,
    steady: Option<FockOperator>,
    cache: Mutex<HashMap<(bool, u64), Arc<CMatrix>>>,
}

impl Oracle {
    pub fn new(model: &QuadraticModel) -> Result<Self> {
        let space = FockSpace::new(model.n())?;
        let l = liouvillian(model, false)?;
        let lf = liouvillian(model, true)?;
        let steady = steady_state(model).ok();
        Ok(Oracle {
            space,
            l,
            lf,
            steady,
            cache: Mutex::new(HashMap::new()),
        })
    }

    /// `e^{ℒt}` or `e^{ℒ_f t}`, memoized per time.
    pub fn propagator(&self, fermionic: bool, t: f64) -> Result<Arc<CMatrix>> {
        let key = (fermionic, t.to_bits());
        if let Some(p) = self.cache.lock().unwrap().get(&key) {
            return Ok(p.clone());
        }
        let sup = if fermionic { &self.lf } else { &self.l };
        let p = Arc::new(sup.exp(t)?);
        self.cache.lock().unwrap().insert(key, p.clone());
        Ok(p)
    }

    pub fn steady(&self) -> Result<&FockOperator> {
        self.steady.as_ref().ok_or(Error::ZeroGap { gap: 0.0 })
    }

    pub fn evaluate(&self, query: &OracleQuery) -> Result<OracleValue> {
        let sp = &self.space;
        let d = 2 * sp.n();
        match query {
            OracleQuery::Covariance { rho0, t } => {
                let rho = propagate(&*self.propagator(false, *t)?, rho0);
                Ok(OracleValue::Matrix(sp.covariance(&rho)))
            }
            OracleQuery::Retarded { t } => {
                let rho = self.steady()?;
                let prop = self.propagator(true, *t)?;
                let m = CMatrix::from_shape_fn((d, d), |(a, b)| {
                    let pa = sp.nambu(a);
                    let pb = sp.nambu(b).dagger();
                    -I * (regression(&prop, &pa, &pb, rho, Side::Left)
                        + regression(&prop, &pa, &pb, rho, Side::Right))
                });
                Ok(OracleValue::Matrix(m))
            }
            OracleQuery::Response { i, j, t } => {
                let rho = self.steady()?;
                let prop = self.propagator(false, *t)?;
                let ni = sp.number(*i);
                let nj = sp.number(*j);
                let v = regression(&prop, &ni, &nj, rho, Side::Left)
                    - regression(&prop, &ni, &nj, rho, Side::Right);
                Ok(OracleValue::Scalar(-I * v))
            }
            OracleQuery::TypeI { k1, k2, rho0, t } => {
                let g1 = sp.gaussian(k1)?;
                let g2 = sp.gaussian(k2)?;
                let prop = self.propagator(false, *t)?;
                Ok(OracleValue::Scalar(regression(&prop, &g1, &g2, rho0, Side::Left)))
            }
            OracleQuery::TypeII {
                k1,
                k2,
                rho0,
                t,
                side,
            } => {
                let g1 = sp.gaussian(k1)?;
                let g2 = sp.gaussian(k2)?;
                let prop = self.propagator(true, *t)?;
                let m = CMatrix::from_shape_fn((d, d), |(a, b)| {
                    let left = sp.nambu(a).dot(&g1);
                    let inner = match side {
                        Side::Left => g2.dot(&sp.nambu(b).dagger()).dot(rho0),
                        Side::Right => rho0.dot(&sp.nambu(b).dagger()).dot(&g2),
                    };
                    left.dot(&propagate(&prop, &inner)).trace()
                });
                Ok(OracleValue::Matrix(m))
            }
            OracleQuery::AnyonGreater { l, j, t, phi } => {
                let rho = self.steady()?;
                let prop = self.propagator(true, t.abs())?;
                let f_l = sp.anyon(*l, *phi);
                let fd_j = sp.anyon_dag(*j, *phi);
                let v = if *t >= 0.0 {
                    regression(&prop, &f_l, &fd_j, rho, Side::Left)
                } else {
                    regression(&prop, &fd_j, &f_l, rho, Side::Right)
                };
                Ok(OracleValue::Scalar(v))
            }
            OracleQuery::AnyonLesser { l, j, t, phi } => {
                let rho = self.steady()?;
                let prop = self.propagator(true, t.abs())?;
                let f_l = sp.anyon(*l, *phi);
                let fd_j = sp.anyon_dag(*j, *phi);
                let v = if *t >= 0.0 {
                    regression(&prop, &f_l, &fd_j, rho, Side::Right)
                } else {
                    regression(&prop, &fd_j, &f_l, rho, Side::Left)
                };
                Ok(OracleValue::Scalar(v))
            }
            OracleQuery::FcsChi {
                sites,
                lambda,
                rho0,
                t,
            } => {
                let rho = propagate(&*self.propagator(false, *t)?, rho0);
                let q = sp.charge(sites);
                let e = matexp(&(&q.matrix * *lambda))?;
                Ok(OracleValue::Scalar(
                    FockOperator::new(sp.n(), e).dot(&rho).trace(),
                ))
            }
            OracleQuery::FcsPn { sites, rho0, t } => {
                let rho = propagate(&*self.propagator(false, *t)?, rho0);
                let p = (0..=sites.len())
                    .map(|q| sp.charge_projector(sites, q).dot(&rho).trace().re)
                    .collect();
                Ok(OracleValue::Distribution(p))
            }
            OracleQuery::Loschmidt { rho0, t } => {
                let rho = propagate(&*self.propagator(false, *t)?, rho0);
                Ok(OracleValue::Scalar(rho0.dot(&rho).trace()))
            }
        }
    }
}

pub fn oracle_correlator(model: &QuadraticModel, query: &OracleQuery) -> Result<OracleValue> {
    Oracle::new(model)?.evaluate(query)
}

/// `Tr Γ̂₂(K)` by direct exponentiation in Fock space.
pub fn gaussian_trace(k: &CMatrix) -> Result<C64> {
    let n = k.nrows() / 2;
    Ok(FockSpace::new(n)?.gaussian(k)?.trace())
}

/// Minimum-cost perfect matching (Hungarian algorithm); returns the column
/// assigned to each row.
pub fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        if p[j] > 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Largest distance between two equal-size multisets of complex numbers
/// under the matching that minimizes the total squared distance.
pub fn multiset_distance(a: &[C64], b: &[C64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let cost: Vec<Vec<f64>> = a
        .iter()
        .map(|x| b.iter().map(|y| (x - y).norm_sqr()).collect())
        .collect();
    let assign = hungarian(&cost);
    a.iter()
        .enumerate()
        .map(|(i, x)| (x - b[assign[i]]).norm())
        .fold(0.0, f64::max)
}

/// Nodes and weights of `m`-point Gauss–Legendre quadrature on `[−1, 1]`.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; m];
    let mut w = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=m {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pm = if m == 1 { z } else { p1 };
            let pm1 = if m == 1 { 1.0 } else { p0 };
            dp = m as f64 * (z * pm - pm1) / (z * z - 1.0);
            let dz = pm / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[m - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[m - 1 - i] = w[i];
    }
    (x, w)
}

/// `M(t) = ∫₀^t Q 𝕏₋ Q̄` by composite Gauss–Legendre with panel doubling
/// until two successive refinements agree to `tol`.
pub fn m_quadrature(model: &QuadraticModel, t: f64, tol: f64) -> Result<CMatrix> {
    let (x, w) = gauss_legendre(16);
    let a = model.generator();
    let xm = model.x_minus();
    let integrate = |panels: usize| -> Result<CMatrix> {
        let d = a.nrows();
        let mut acc = CMatrix::zeros((d, d));
        let hw = t / panels as f64 / 2.0;
        for p in 0..panels {
            let mid = (p as f64 + 0.5) * t / panels as f64;
            for (xi, wi) in x.iter().zip(w.iter()) {
                let s = mid + hw * xi;
                let q = matexp(&(&a * C64::new(-s, 0.0)))?;
                acc = acc + q.dot(xm).dot(&adjoint(&q)) * C64::new(wi * hw, 0.0);
            }
        }
        Ok(acc)
    };
    let mut panels = 1;
    let mut prev = integrate(panels)?;
    for _ in 0..12 {
        panels *= 2;
        let next = integrate(panels)?;
        if max_abs(&(&next - &prev)) < tol {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::NoConvergence)
}

/// Fixed-step RK4 integration of `∂C = [C, i𝐇] − {C, 𝕏₊} + 𝕏₊ + 𝕏₋`.
pub fn covariance_rk4(model: &QuadraticModel, c0: &CMatrix, t: f64, steps: usize) -> CMatrix {
    let ih = model.h().mapv(|z| z * I);
    let xp = model.x_plus();
    let src = xp + model.x_minus();
    let rhs = |c: &CMatrix| -> CMatrix {
        c.dot(&ih) - ih.dot(c) - c.dot(xp) - xp.dot(c) + &src
    };
    let h = t / steps as f64;
    let hc = C64::new(h, 0.0);
    let mut c = c0.clone();
    for _ in 0..steps {
        let k1 = rhs(&c);
        let k2 = rhs(&(&c + &(&k1 * (hc * 0.5))));
        let k3 = rhs(&(&c + &(&k2 * (hc * 0.5))));
        let k4 = rhs(&(&c + &(&k3 * hc)));
        c = c + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (hc / 6.0);
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_diff, random_matrix};
    use crate::model::{build_kitaev, KitaevParams};
    use rand::SeedableRng;

    fn anticommutator(a: &FockOperator, b: &FockOperator) -> CMatrix {
        a.dot(b).matrix + b.dot(a).matrix
    }

    #[test]
    fn canonical_anticommutation() {
        let sp = FockSpace::new(3).unwrap();
        let id = identity(8);
        for i in 1..=3 {
            for j in 1..=3 {
                let ccd = anticommutator(&sp.c(i), &sp.cdag(j));
                let want = if i == j { id.clone() } else { CMatrix::zeros((8, 8)) };
                assert!(max_abs_diff(&ccd, &want) < 1e-15);
                assert!(max_abs(&anticommutator(&sp.c(i), &sp.c(j))) < 1e-15);
            }
        }
    }

    #[test]
    fn single_site_chemical_potential() {
        let h = crate::linalg::diag(&[C64::new(-0.6, 0.0), C64::new(0.6, 0.0)]);
        let model = QuadraticModel::new(h, vec![]).unwrap();
        let sp = FockSpace::new(1).unwrap();
        let hf = sp.hamiltonian(&model).unwrap();
        // ½(−μ c†c + μ c c†) = −μ n + μ/2
        assert!((hf[[0, 0]] - C64::new(0.3, 0.0)).norm() < 1e-15);
        assert!((hf[[1, 1]] - C64::new(-0.3, 0.0)).norm() < 1e-15);
        assert!((hf[[1, 1]] - hf[[0, 0]] - C64::new(-0.6, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn kitaev_matches_direct_construction() {
        let p = KitaevParams::new(2, 1.0, 0.5, 0.3, 0.0, 0.0);
        let model = build_kitaev(&p).unwrap();
        let sp = FockSpace::new(2).unwrap();
        let hf = sp.hamiltonian(&model).unwrap();
        let (c1, c2) = (sp.c(1), sp.c(2));
        let (d1, d2) = (sp.cdag(1), sp.cdag(2));
        let hop = d1.dot(&c2).scale(C64::new(p.j, 0.0));
        let pair = c1.dot(&c2).scale(C64::new(p.delta, 0.0));
        let direct = hop.matrix.clone() + adjoint(&hop.matrix) + &pair.matrix + adjoint(&pair.matrix)
            - (sp.number(1).matrix + sp.number(2).matrix) * C64::new(p.mu, 0.0);
        let shift = &hf.matrix - &direct;
        let c = shift[[0, 0]];
        assert!(max_abs_diff(&shift, &(identity(4) * c)) < 1e-14);
        let _ = (d2,);
    }

    #[test]
    fn liouvillian_preserves_trace() {
        let model = build_kitaev(&KitaevParams::new(2, 1.0, 0.5, 1.0, 0.1, 0.3)).unwrap();
        let l = liouvillian(&model, false).unwrap();
        let d = 4;
        let mut tr = ndarray::Array1::from_elem(d * d, ZERO);
        for i in 0..d {
            tr[i + i * d] = ONE;
        }
        let left = tr.dot(&l.matrix);
        assert!(left.iter().all(|z| z.norm() < 1e-12));
        let lf = liouvillian(&model, true).unwrap();
        assert!(tr.dot(&lf.matrix).iter().any(|z| z.norm() > 1e-3));
    }

    #[test]
    fn steady_state_is_annihilated() {
        let model = build_kitaev(&KitaevParams::new(3, 1.0, 0.5, 1.0, 0.1, 0.3)).unwrap();
        let rho = steady_state(&model).unwrap();
        let l = liouvillian(&model, false).unwrap();
        assert!(max_abs(&l.apply(&rho.matrix)) < 1e-9);
        assert!((rho.trace() - 1.0).norm() < 1e-12);
    }

    #[test]
    fn parity_relates_the_two_liouvillians() {
        let model = build_kitaev(&KitaevParams::new(2, 1.0, 0.5, 1.0, 0.1, 0.3)).unwrap();
        let sp = FockSpace::new(2).unwrap();
        let p = sp.parity();
        let ef = liouvillian(&model, true).unwrap().exp(0.7).unwrap();
        let e = liouvillian(&model, false).unwrap().exp(0.7).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(41);
        for _ in 0..5 {
            let x = FockOperator::new(2, random_matrix(&mut rng, 4, 4, 1.0));
            let lhs = p.dot(&propagate(&ef, &p.dot(&x)));
            let rhs = propagate(&e, &x);
            assert!(max_abs_diff(&lhs.matrix, &rhs.matrix) < 1e-9);
        }
    }

    #[test]
    fn anyon_exchange_relations() {
        let sp = FockSpace::new(3).unwrap();
        for phi in [std::f64::consts::PI / 5.0, std::f64::consts::FRAC_PI_2, std::f64::consts::PI] {
            for l in 1..=3usize {
                for m in 1..=3usize {
                    let sgn = (l as f64 - m as f64).signum() * if l == m { 0.0 } else { 1.0 };
                    let fl = sp.anyon(l, phi);
                    let fdm = sp.anyon_dag(m, phi);
                    let fm = sp.anyon(m, phi);
                    let ex = fl.dot(&fdm).matrix
                        + fdm.dot(&fl).matrix * C64::from_polar(1.0, -phi * sgn);
                    let want = if l == m { identity(8) } else { CMatrix::zeros((8, 8)) };
                    assert!(max_abs_diff(&ex, &want) < 1e-14, "l={l} m={m} phi={phi}");
                    let ex2 = fl.dot(&fm).matrix + fm.dot(&fl).matrix * C64::from_polar(1.0, phi * sgn);
                    assert!(max_abs(&ex2) < 1e-14);
                }
            }
        }
    }

    #[test]
    fn unitary_limit() {
        let model = build_kitaev(&KitaevParams::new(2, 1.0, 0.5, 1.0, 0.0, 0.0)).unwrap();
        let sp = FockSpace::new(2).unwrap();
        let h = sp.hamiltonian(&model).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let x = random_matrix(&mut rng, 4, 4, 1.0);
        let rho0 = FockOperator::new(2, x.dot(&adjoint(&x)));
        let t = 0.9;
        let u = matexp(&(&h.matrix * (-I * t))).unwrap();
        let want = u.dot(&rho0.matrix).dot(&adjoint(&u));
        let got = oracle_evolve(&model, &rho0, t).unwrap();
        assert!(max_abs_diff(&got.matrix, &want) < 1e-12);
        let same = oracle_evolve(&model, &rho0, 0.0).unwrap();
        assert!(max_abs_diff(&same.matrix, &rho0.matrix) < 1e-15);
    }

    #[test]
    fn hungarian_finds_optimal_permutation() {
        let cost = vec![
            vec![4.0, 1.0, 3.0],
            vec![2.0, 0.0, 5.0],
            vec![3.0, 2.0, 2.0],
        ];
        let a = hungarian(&cost);
        let total: f64 = a.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
        assert_eq!(total, 5.0);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(8);
        let s: f64 = x.iter().zip(w.iter()).map(|(x, w)| w * x.powi(14)).sum();
        assert!((s - 2.0 / 15.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn cap_is_enforced() {
        assert!(matches!(FockSpace::new(13), Err(Error::OracleCap { .. })));
        let model = build_kitaev(&KitaevParams::new(6, 1.0, 0.5, 1.0, 0.1, 0.3)).unwrap();
        assert!(matches!(
            liouvillian(&model, false),
            Err(Error::OracleCap { .. })
        ));
    }
}
