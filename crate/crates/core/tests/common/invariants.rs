use super::{random_h0, random_kitaev};
use lindblad_cf::correlators::{auxiliary_matrices, type_one_at, CorrelatorOptions};
use lindblad_cf::linalg::{
    eig_biorthonormal, eigenvalues_sorted, frobenius, identity, log_det, matexp, max_abs,
    max_abs_diff, random_matrix, random_symmetric_k, sqrt_det_analytic, tau_x_transpose,
    BranchForm,
};
use lindblad_cf::model::validate;
use lindblad_cf::observables::{echo_from_b, fcs_chi, fcs_pn, fcs_steady, loschmidt, momentum_distribution};
use lindblad_cf::oracle::{liouvillian, multiset_distance, propagate, vectorize, FockOperator, FockSpace};
use lindblad_cf::propagator::{evolve_covariance, rapidity_spectrum};
use lindblad_cf::{
    AnyonCorrelator, CMatrix, Dynamics, Exponent, GaussianOperator, KitaevParams, QuadraticModel,
    C64,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Outcome = std::result::Result<(), String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Outcome {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn tau_x_sum(a: &CMatrix) -> CMatrix {
    a + &tau_x_transpose(a)
}

pub fn expm_inverse(seed: u64, dim: usize, norm: f64) -> Outcome {
    let a = random_matrix(&mut rng(seed), dim, dim, 1.0);
    let a = &a * C64::new(norm / frobenius(&a), 0.0);
    let p = matexp(&a).unwrap().dot(&matexp(&-&a).unwrap());
    let e = max_abs_diff(&p, &identity(dim));
    ensure(e < 1e-10, || format!("e^A e^-A deviates by {e:.2e}"))
}

pub fn eigendecomposition(seed: u64, dim: usize) -> Outcome {
    let a = random_matrix(&mut rng(seed), dim, dim, 1.0);
    let dec = eig_biorthonormal(&a).unwrap();
    let bi = dec.biorthonormality_error();
    let rec = frobenius(&(&dec.reconstruct() - &a)) / frobenius(&a);
    ensure(bi < 1e-10 && rec < 1e-9, || {
        format!("biorthonormality {bi:.2e}, reconstruction {rec:.2e}")
    })
}

pub fn sqrt_det_squares(seed: u64, n: usize, scale: f64) -> Outcome {
    let mut r = rng(seed);
    let k = random_symmetric_k(&mut r, n, scale);
    let (z, trace) = sqrt_det_analytic(BranchForm::GaussianTrace, &k, n).unwrap();
    let want = log_det(&(identity(2 * n) + matexp(&k).unwrap())).unwrap().value();
    let e = (z * z - want).norm() / want.norm();
    ensure(e < 1e-8 && trace.steps >= 1, || format!("gaussian form: {e:.2e}"))?;
    let b = random_matrix(&mut r, 2 * n, 2 * n, scale) + identity(2 * n);
    let (z, _) = sqrt_det_analytic(BranchForm::Affine, &b, n).unwrap();
    let want = log_det(&b).unwrap().value();
    let e = (z * z - want).norm() / want.norm();
    ensure(e < 1e-8, || format!("affine form: {e:.2e}"))?;
    let (z0, _) =
        sqrt_det_analytic(BranchForm::GaussianTrace, &CMatrix::zeros((2 * n, 2 * n)), n).unwrap();
    let p = (1u32 << n) as f64;
    ensure((z0 - p).norm() <= 8.0 * f64::EPSILON * p, || format!("Z(0) = {z0}"))
}

pub fn model_invariants(model: &QuadraticModel) -> Outcome {
    let v = validate(model);
    ensure(v.is_empty(), || format!("violations {v:?}"))?;
    let s = rapidity_spectrum(model).unwrap();
    ensure(s.gap >= -1e-10, || format!("negative gap {}", s.gap))?;
    let ih = model.h().mapv(|z| z * C64::new(0.0, 1.0));
    let minus = eigenvalues_sorted(&(model.x_plus() - &ih)).unwrap();
    let d = multiset_distance(&s.lambdas.to_vec(), &minus.to_vec());
    ensure(d < 1e-9, || format!("rapidities of X+ +- iH differ by {d:.2e}"))
}

pub fn kitaev_edge_pair(p: &KitaevParams) -> Outcome {
    let model = lindblad_cf::model::build_kitaev(p).unwrap();
    let modes = rapidity_spectrum(&model).unwrap().zero_frequency_modes(1e-8 * p.j);
    ensure(modes.len() >= 2, || format!("edge modes {modes:?} at mu={}", p.mu))
}

pub fn propagator_invariants(model: &QuadraticModel, t: f64) -> Outcome {
    let dynamics = Dynamics::new(model).unwrap();
    let p = dynamics.propagators(t).unwrap();
    let qbar = max_abs_diff(&p.qbar, &tau_x_transpose(&p.q));
    let m = max_abs(&tau_x_sum(&p.m));
    ensure(qbar < 1e-10 && m < 1e-10, || format!("t={t}: Qbar {qbar:.2e}, M {m:.2e}"))?;
    let p0 = dynamics.propagators(0.0).unwrap();
    let d = 2 * model.n();
    ensure(max_abs_diff(&p0.q, &identity(d)) == 0.0 && max_abs(&p0.m) == 0.0, || {
        "t=0 propagators are not (1, 0)".into()
    })
}

pub fn semigroup(model: &QuadraticModel, c0: &CMatrix, t1: f64, t2: f64) -> Outcome {
    let a = evolve_covariance(model, &evolve_covariance(model, c0, t1).unwrap(), t2).unwrap();
    let b = evolve_covariance(model, c0, t1 + t2).unwrap();
    let e = max_abs_diff(&a, &b);
    let d = 2 * model.n();
    let s = max_abs_diff(&tau_x_sum(&b), &identity(d));
    ensure(e < 1e-9 && s < 1e-10, || format!("semigroup {e:.2e}, C symmetry {s:.2e}"))
}

pub fn long_time_limit(model: &QuadraticModel) -> Outcome {
    let dynamics = Dynamics::new(model).unwrap();
    let t = 40.0 / dynamics.gap();
    let p = dynamics.propagators(t).unwrap();
    let m_inf = dynamics.m_inf().unwrap();
    let q = max_abs(&p.q);
    let m = max_abs_diff(&p.m, &m_inf);
    ensure(q < 1e-6 && m < 1e-6, || format!("|Q| {q:.2e}, |M - Minf| {m:.2e}"))
}

pub fn gaussian_state_consistency(seed: u64, n: usize, beta: f64) -> Outcome {
    let h0 = random_h0(&mut rng(seed), n);
    let g = GaussianOperator::thermal(&h0, beta).unwrap();
    let sym = g.symmetry_violation();
    let cons = g.consistency_error().unwrap();
    ensure(sym < 1e-10 && cons < 1e-9, || format!("symmetry {sym:.2e}, B(1+e^K) {cons:.2e}"))
}

pub fn trace_preservation(model: &QuadraticModel, seed: u64, t: f64) -> Outcome {
    let n = model.n();
    let h0 = random_h0(&mut rng(seed), n);
    let state = GaussianOperator::thermal(&h0, 0.5).unwrap();
    let props = Dynamics::new(model).unwrap().propagators(t).unwrap();
    let zero = Exponent::dense(CMatrix::zeros((2 * n, 2 * n))).unwrap();
    let v = type_one_at(&props, &state, &zero, &zero, &CorrelatorOptions::default())
        .unwrap()
        .scalar()
        .unwrap();
    ensure((v - 1.0).norm() < 1e-10, || format!("Type-I(0, 0) = {v}"))
}

pub fn auxiliary_symmetry(model: &QuadraticModel, seed: u64, t: f64) -> Outcome {
    let n = model.n();
    let mut r = rng(seed);
    let h0 = random_h0(&mut r, n);
    let state = GaussianOperator::thermal(&h0, 0.5).unwrap();
    let props = Dynamics::new(model).unwrap().propagators(t).unwrap();
    let k1 = Exponent::dense(random_symmetric_k(&mut r, n, 0.6)).unwrap();
    let k2 = Exponent::dense(random_symmetric_k(&mut r, n, 0.6)).unwrap();
    let aux = auxiliary_matrices(&props, &state, &k1, &k2).unwrap();
    let id = identity(2 * n);
    let e20 = max_abs_diff(&tau_x_sum(&aux.b20), &id);
    let e02 = max_abs_diff(&tau_x_sum(&aux.b02), &id);
    ensure(e20 < 1e-9 && e02 < 1e-9, || format!("B20 {e20:.2e}, B02 {e02:.2e}"))
}

/// `G^>_{lj}(t; φ) = G^>_{l'j'}(t; −φ)` with mirrored sites.
pub fn reflection_symmetry(p: &KitaevParams, phi: f64, t: f64) -> Outcome {
    let model = lindblad_cf::model::build_kitaev(p).unwrap();
    let ac = AnyonCorrelator::new(&model).unwrap();
    let n = p.n;
    let mut worst = 0.0f64;
    for j in [1, (n + 1) / 2, n] {
        let sites: Vec<usize> = (1..=n).collect();
        let a = ac.greater_grid(j, phi, &[t], &sites).unwrap();
        let b = ac.greater_grid(n + 1 - j, -phi, &[t], &sites).unwrap();
        for l in 0..n {
            worst = worst.max((a[0][l] - b[0][n - 1 - l]).norm());
        }
    }
    ensure(worst < 1e-9, || format!("mirror mismatch {worst:.2e}"))
}

/// `iG_{jl}(−t) = [iG_{lj}(t)]^*` for both orderings.
pub fn hermiticity(model: &QuadraticModel, l: usize, j: usize, t: f64, phi: f64) -> Outcome {
    let ac = AnyonCorrelator::new(model).unwrap();
    let g = (ac.greater(j, l, -t, phi).unwrap() - ac.greater(l, j, t, phi).unwrap().conj()).norm();
    let s = (ac.lesser(j, l, -t, phi).unwrap() - ac.lesser(l, j, t, phi).unwrap().conj()).norm();
    ensure(g < 1e-9 && s < 1e-9, || format!("greater {g:.2e}, lesser {s:.2e}"))
}

/// `P̂ e^{ℒ_f t}[P̂ X] = e^{ℒt}[X]` for arbitrary operators.
pub fn parity_identity(model: &QuadraticModel, seed: u64, t: f64) -> Outcome {
    let n = model.n();
    let sp = FockSpace::new(n).unwrap();
    let p = sp.parity();
    let ef = liouvillian(model, true).unwrap().exp(t).unwrap();
    let e = liouvillian(model, false).unwrap().exp(t).unwrap();
    let x = FockOperator::new(n, random_matrix(&mut rng(seed), sp.dim(), sp.dim(), 1.0));
    let lhs = p.dot(&propagate(&ef, &p.dot(&x)));
    let rhs = propagate(&e, &x);
    let err = max_abs_diff(&lhs.matrix, &rhs.matrix);
    ensure(err < 1e-9, || format!("parity identity off by {err:.2e}"))
}

/// `f_l f_m† + e^{−iφ sgn(l−m)} f_m† f_l = δ_lm` and the companion relation.
pub fn anyon_exchange(n: usize, phi: f64) -> Outcome {
    let sp = FockSpace::new(n).unwrap();
    let dim = sp.dim();
    for l in 1..=n {
        for m in 1..=n {
            let sgn = if l == m { 0.0 } else { (l as f64 - m as f64).signum() };
            let fl = sp.anyon(l, phi);
            let fm = sp.anyon(m, phi);
            let fdm = sp.anyon_dag(m, phi);
            let a = fl.dot(&fdm).matrix + fdm.dot(&fl).matrix * C64::from_polar(1.0, -phi * sgn);
            let want = if l == m { identity(dim) } else { CMatrix::zeros((dim, dim)) };
            let b = fl.dot(&fm).matrix + fm.dot(&fl).matrix * C64::from_polar(1.0, phi * sgn);
            let (ea, eb) = (max_abs_diff(&a, &want), max_abs(&b));
            ensure(ea < 1e-14 && eb < 1e-14, || format!("l={l} m={m}: {ea:.2e} {eb:.2e}"))?;
        }
    }
    Ok(())
}

pub fn canonical_anticommutation(n: usize) -> Outcome {
    let sp = FockSpace::new(n).unwrap();
    let dim = sp.dim();
    for i in 1..=n {
        for j in 1..=n {
            let a = sp.c(i).dot(&sp.cdag(j)).matrix + sp.cdag(j).dot(&sp.c(i)).matrix;
            let want = if i == j { identity(dim) } else { CMatrix::zeros((dim, dim)) };
            let b = sp.c(i).dot(&sp.c(j)).matrix + sp.c(j).dot(&sp.c(i)).matrix;
            ensure(max_abs_diff(&a, &want) == 0.0 && max_abs(&b) == 0.0, || {
                format!("CAR broken for ({i}, {j})")
            })?;
        }
    }
    Ok(())
}

/// `ℒ` preserves the trace, `ℒ_f` does not.
pub fn liouvillian_trace(model: &QuadraticModel) -> Outcome {
    let d = 1usize << model.n();
    let id = vectorize(&identity(d)).mapv(|z| z.conj());
    let l = liouvillian(model, false).unwrap().matrix;
    let lf = liouvillian(model, true).unwrap().matrix;
    let left = |m: &CMatrix| id.dot(m).iter().map(|z| z.norm()).fold(0.0, f64::max);
    let (a, b) = (left(&l), left(&lf));
    ensure(a < 1e-10 && b > 1e-6, || format!("L leaks {a:.2e}, L_f leaks {b:.2e}"))
}

pub fn fcs_distribution(model: &QuadraticModel, sites: &[usize], t: f64) -> Outcome {
    let n = model.n();
    let vac = GaussianOperator::vacuum(n);
    let r = fcs_pn(model, &vac, sites, t).unwrap();
    let total = (r.total() - 1.0).abs();
    let min = r.pn.iter().cloned().fold(f64::INFINITY, f64::min);
    ensure(total < 1e-9 && min >= -1e-9 && r.pn.len() == sites.len() + 1, || {
        format!("sum-1 {total:.2e}, min {min:.2e}")
    })
}

/// `χ(λ)` with real `λ` is real and positive.
pub fn real_chi_positive(model: &QuadraticModel, sites: &[usize], lambda: f64, t: f64) -> Outcome {
    let n = model.n();
    let vac = GaussianOperator::vacuum(n);
    let chi = fcs_chi(model, &vac, sites, C64::new(lambda, 0.0), t).unwrap();
    ensure(chi.re > 0.0 && chi.im.abs() < 1e-9 * chi.re.max(1.0), || {
        format!("chi({lambda}) = {chi}")
    })
}

/// Steady-state `P_n` from `M∞` agrees with late-time evolution.
pub fn fcs_steady_limit(model: &QuadraticModel, sites: &[usize]) -> Outcome {
    let gap = rapidity_spectrum(model).unwrap().gap;
    let late = fcs_pn(model, &GaussianOperator::vacuum(model.n()), sites, 40.0 / gap).unwrap();
    let steady = fcs_steady(model, sites).unwrap();
    let e = late
        .pn
        .iter()
        .zip(&steady.pn)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    ensure(e < 1e-6, || format!("late vs steady {e:.2e}"))
}

pub fn loschmidt_invariants(model: &QuadraticModel, times: &[f64]) -> Outcome {
    let n = model.n();
    let vac = GaussianOperator::vacuum(n);
    let s = loschmidt(model, &vac, times).unwrap();
    ensure((s.echo[0] - 1.0).abs() < 1e-9, || format!("L(0) = {}", s.echo[0]))?;
    for (l, r) in s.echo.iter().zip(&s.rate) {
        ensure(*l > 0.0 && *l <= 1.0 + 1e-12 && r.is_finite(), || format!("L = {l}, r = {r}"))?;
        let e = (r + l.ln() / n as f64).abs();
        ensure(e < 1e-12, || format!("rate forms differ by {e:.2e}"))?;
    }
    let h0 = random_h0(&mut rng(n as u64), n);
    let mixed = GaussianOperator::thermal(&h0, 0.4).unwrap();
    let purity = FockSpace::new(n)
        .ok()
        .map(|sp| {
            let rho = sp.thermal_state(&h0, 0.4).unwrap();
            rho.dot(&rho).trace().re
        });
    if let Some(p) = purity {
        let (l0, _) = echo_from_b(mixed.b(), mixed.b()).unwrap();
        ensure((l0 - p).abs() < 1e-9, || format!("L(0) = {l0}, purity {p}"))?;
    }
    Ok(())
}

pub fn nk_reflection(model: &QuadraticModel) -> Outcome {
    let d = momentum_distribution(model, 0.0).unwrap();
    let n = d.nk.len();
    let e = (0..n)
        .map(|m| (d.nk[m] - d.nk[(n - m) % n]).abs())
        .fold(0.0, f64::max);
    ensure(e < 1e-9, || format!("n(k) - n(-k) = {e:.2e}"))
}

/// Draws a model and runs the model-level invariants on it.
pub fn random_model_suite(seed: u64, n: usize) -> Outcome {
    let mut r = rng(seed);
    let model = random_kitaev(&mut r, n);
    model_invariants(&model)?;
    let t = r.gen_range(0.1..10.0);
    propagator_invariants(&model, t)?;
    let h0 = random_h0(&mut r, n);
    let c0 = GaussianOperator::thermal(&h0, 0.8).unwrap().b().clone();
    semigroup(&model, &c0, r.gen_range(0.0..3.0), r.gen_range(0.0..3.0))
}
