use super::{random_h0, reference_kitaev, Check};
use lindblad_cf::correlators::{type_one_at, type_two_at, CorrelatorOptions};
use lindblad_cf::linalg::{
    eigenvalues_sorted, max_abs_diff, random_symmetric_k, sqrt_det_analytic, BranchForm,
};
use lindblad_cf::model::build_kitaev;
use lindblad_cf::observables::{
    cusp_times, echo_from_b, fcs_from_b, fcs_steady, gap_minimum, loschmidt, momentum_distribution,
    spectrum_scan,
};
use lindblad_cf::oracle::{gaussian_trace, liouvillian, multiset_distance, Oracle, OracleQuery, Side};
use lindblad_cf::propagator::{rapidity_spectrum, response_from_parts, retarded_gf};
use lindblad_cf::{
    AnyonCorrelator, CMatrix, Dynamics, Exponent, GaussianOperator, KitaevParams, Order, C64,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::f64::consts::PI;

pub const PHIS: [f64; 4] = [0.0, PI / 5.0, PI / 2.0, PI];

fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let k = ((hi - lo) / step).round() as usize;
    (0..=k).map(|i| lo + i as f64 * step).collect()
}

fn record(worst: &mut BTreeMap<&'static str, f64>, key: &'static str, err: f64) {
    let e = worst.entry(key).or_insert(0.0);
    *e = e.max(if err.is_nan() { f64::INFINITY } else { err });
}

/// Closed forms against the Fock-space oracle on N = 2, 3, 4.
pub fn oracle_equivalence() -> Vec<Check> {
    let times = [0.0, 0.5, 1.5, 5.0];
    let mut worst = BTreeMap::new();
    for n in 2..=4usize {
        let model = reference_kitaev(n);
        let oracle = Oracle::new(&model).unwrap();
        let sp = &oracle.space;
        let dynamics = Dynamics::new(&model).unwrap();
        let m_inf = dynamics.m_inf().unwrap();
        let steady = GaussianOperator::steady(&dynamics).unwrap();
        let steady_fock = oracle.steady().unwrap().clone();
        let ac = AnyonCorrelator::new(&model).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(100 + n as u64);
        let h0 = random_h0(&mut rng, n);
        let initial = [
            (GaussianOperator::vacuum(n), sp.vacuum()),
            (
                GaussianOperator::thermal(&h0, 0.7).unwrap(),
                sp.thermal_state(&h0, 0.7).unwrap(),
            ),
            (steady.clone(), steady_fock.clone()),
        ];
        for &t in &times {
            let props = dynamics.propagators(t).unwrap();
            for (g, f) in &initial {
                let b = dynamics.evolve(g.b(), t).unwrap();
                let want = oracle
                    .evaluate(&OracleQuery::Covariance { rho0: f.clone(), t })
                    .unwrap();
                record(&mut worst, "covariance", max_abs_diff(&b, want.matrix().unwrap()));

                for sites in [vec![1], vec![1, 2]] {
                    let got = fcs_from_b(&b, &sites, t).unwrap();
                    let want = oracle
                        .evaluate(&OracleQuery::FcsPn { sites: sites.clone(), rho0: f.clone(), t })
                        .unwrap();
                    let err = got
                        .pn
                        .iter()
                        .zip(want.distribution().unwrap())
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max);
                    record(&mut worst, "fcs P_n", err);
                }

                let (echo, _) = echo_from_b(g.b(), &b).unwrap();
                let want = oracle
                    .evaluate(&OracleQuery::Loschmidt { rho0: f.clone(), t })
                    .unwrap()
                    .scalar()
                    .unwrap();
                record(&mut worst, "loschmidt", (C64::new(echo, 0.0) - want).norm());
            }

            let want = oracle.evaluate(&OracleQuery::Retarded { t }).unwrap();
            let got = retarded_gf(&model, t).unwrap();
            record(&mut worst, "retarded", max_abs_diff(&got, want.matrix().unwrap()));

            for i in 1..=n {
                for j in 1..=n {
                    let got = response_from_parts(&dynamics, &m_inf, i, j, t).unwrap();
                    let want = oracle
                        .evaluate(&OracleQuery::Response { i, j, t })
                        .unwrap()
                        .scalar()
                        .unwrap();
                    record(&mut worst, "response", (got - want).norm());
                }
            }

            for (g, f) in &initial[1..] {
                let k1 = random_symmetric_k(&mut rng, n, 0.6);
                let k2 = random_symmetric_k(&mut rng, n, 0.6);
                let e1 = Exponent::dense(k1.clone()).unwrap();
                let e2 = Exponent::dense(k2.clone()).unwrap();
                let opts = CorrelatorOptions::default();
                let got = type_one_at(&props, g, &e1, &e2, &opts).unwrap().scalar().unwrap();
                let want = oracle
                    .evaluate(&OracleQuery::TypeI {
                        k1: k1.clone(),
                        k2: k2.clone(),
                        rho0: f.clone(),
                        t,
                    })
                    .unwrap()
                    .scalar()
                    .unwrap();
                record(&mut worst, "type I", (got - want).norm());
                for (order, side) in [(Order::Left, Side::Left), (Order::Right, Side::Right)] {
                    let got = type_two_at(&props, g, &e1, &e2, order, &opts).unwrap();
                    let want = oracle
                        .evaluate(&OracleQuery::TypeII {
                            k1: k1.clone(),
                            k2: k2.clone(),
                            rho0: f.clone(),
                            t,
                            side,
                        })
                        .unwrap();
                    record(
                        &mut worst,
                        "type II",
                        max_abs_diff(got.matrix().unwrap(), want.matrix().unwrap()),
                    );
                }
            }

            for phi in PHIS {
                for l in 1..=n {
                    for j in 1..=n {
                        for s in [t, -t] {
                            let got = ac.greater(l, j, s, phi).unwrap();
                            let want = oracle
                                .evaluate(&OracleQuery::AnyonGreater { l, j, t: s, phi })
                                .unwrap()
                                .scalar()
                                .unwrap();
                            record(&mut worst, "anyon G>", (got - want).norm());
                            let got = ac.lesser(l, j, s, phi).unwrap();
                            let want = oracle
                                .evaluate(&OracleQuery::AnyonLesser { l, j, t: s, phi })
                                .unwrap()
                                .scalar()
                                .unwrap();
                            record(&mut worst, "anyon G<", (got - want).norm());
                        }
                    }
                }
            }
        }
    }
    worst
        .into_iter()
        .map(|(k, v)| Check::below(k, v, 1e-7))
        .collect()
}

/// `{−Σ ν_k λ_k}` against the eigenvalues of the dense Liouvillian.
pub fn spectrum_identity() -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut out = vec![];
    for n in [2usize, 3] {
        let mut models = vec![reference_kitaev(n)];
        models.push(super::random_kitaev(&mut rng, n));
        for (idx, model) in models.iter().enumerate() {
            let closed = rapidity_spectrum(model).unwrap().liouvillian_eigenvalues().unwrap();
            let dense = eigenvalues_sorted(&liouvillian(model, false).unwrap().matrix).unwrap();
            let d = multiset_distance(&closed, &dense.to_vec());
            out.push(Check::below(format!("N={n} model {idx}"), d, 1e-8));
        }
    }
    out
}

pub fn spectrum_params() -> KitaevParams {
    KitaevParams::new(64, 1.0, 0.5, 0.0, 0.2, 0.5)
}

/// Gap minimum near `μ = ±1.5` and zero-frequency edge pairs for `|μ| ≤ 2`.
pub fn nqpt_signature() -> Vec<Check> {
    let step = 0.05;
    let mus = grid(-3.0, 3.0, step);
    let scan = spectrum_scan(&spectrum_params(), &mus).unwrap();
    let pos: Vec<_> = scan.iter().filter(|(mu, _)| *mu >= 0.0).cloned().collect();
    let neg: Vec<_> = scan.iter().filter(|(mu, _)| *mu <= 0.0).cloned().collect();
    let (mp, gp) = gap_minimum(&pos).unwrap();
    let (mn, gn) = gap_minimum(&neg).unwrap();
    let mut out = vec![
        Check::truth(
            "gap minimum mu>=0",
            (mp - 1.5).abs() <= step + 1e-9,
            format!("mu={mp:.2} gap={gp:.2e}"),
        ),
        Check::truth(
            "gap minimum mu<=0",
            (mn + 1.5).abs() <= step + 1e-9,
            format!("mu={mn:.2} gap={gn:.2e}"),
        ),
    ];
    let mut wrong = vec![];
    for (mu, s) in &scan {
        let has = s.zero_frequency_modes(1e-8).len() >= 2;
        if has != (mu.abs() <= 2.0 + 1e-9) {
            wrong.push(format!("{mu:.2}"));
        }
    }
    out.push(Check::truth(
        "edge modes exactly for |mu|<=2",
        wrong.is_empty(),
        if wrong.is_empty() {
            "all grid points".to_string()
        } else {
            format!("mismatch at mu={}", wrong.join(","))
        },
    ));
    out
}

pub fn light_cone_params() -> KitaevParams {
    KitaevParams::new(65, 1.0, 0.1, 2.0, 0.05, 0.1)
}

/// `max_l |G^>_{l,c}(t) − G^>_{N+1−l,c}(t)|` with `c` the center site.
pub fn mirror_asymmetry(ac: &AnyonCorrelator, phi: f64, times: &[f64]) -> f64 {
    let n = ac.n();
    let c = (n + 1) / 2;
    let sites: Vec<usize> = (1..=n).collect();
    let g = ac.greater_grid(c, phi, times, &sites).unwrap();
    g.iter()
        .flat_map(|row| (0..n).map(move |l| (row[l] - row[n - 1 - l]).norm()))
        .fold(0.0, f64::max)
}

/// Mirror symmetry at `φ = 0`, its breaking at `φ = π/2` and decay ordering.
pub fn anyon_light_cone() -> Vec<Check> {
    let model = build_kitaev(&light_cone_params()).unwrap();
    let ac = AnyonCorrelator::new(&model).unwrap();
    let times = [2.0, 4.0];
    let a0 = mirror_asymmetry(&ac, 0.0, &times);
    let a1 = mirror_asymmetry(&ac, PI / 2.0, &times);
    let avg: Vec<f64> = PHIS
        .iter()
        .map(|&phi| {
            let ts = grid(5.0, 15.0, 0.5);
            ts.iter().map(|&t| ac.greater(33, 33, t, phi).unwrap().norm()).sum::<f64>()
                / ts.len() as f64
        })
        .collect();
    let decreasing = avg.windows(2).all(|w| w[1] < w[0]);
    vec![
        Check::below("phi=0 mirror asymmetry", a0, 1e-9),
        Check::truth("phi=pi/2 mirror asymmetry", a1 > 1e-3, format!("{a1:.3e} > 1e-3")),
        Check::truth(
            "time-averaged |G_jj| decreasing in phi",
            decreasing,
            format!("{:?}", avg.iter().map(|v| format!("{v:.3e}")).collect::<Vec<_>>()),
        ),
    ]
}

pub fn counting_params() -> KitaevParams {
    KitaevParams::new(128, 1.0, 0.5, 0.0, 0.05, 0.1)
}

/// Normalization of steady-state `P_n` and derivative spikes in `μ`.
pub fn fcs_singularities() -> Vec<Check> {
    let step = 0.05;
    let mus = grid(-2.5, 2.5, step);
    let sites: Vec<usize> = (1..=64).collect();
    let base = counting_params();
    let mut norm_err = 0.0f64;
    let mut pns = vec![];
    for &mu in &mus {
        let model = build_kitaev(&base.with_mu(mu)).unwrap();
        let r = fcs_steady(&model, &sites).unwrap();
        norm_err = norm_err
            .max((r.total() - 1.0).abs())
            .max(r.clipped)
            .max(r.imag_residue);
        pns.push(r.pn);
    }
    // forward difference on each grid interval, maximized over n
    let slope: Vec<f64> = pns
        .windows(2)
        .map(|w| {
            w[0].iter()
                .zip(&w[1])
                .map(|(a, b)| (b - a).abs() / step)
                .fold(0.0, f64::max)
        })
        .collect();
    let mut sorted = slope.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let mut out = vec![Check::below("P_n normalization", norm_err, 1e-9)];
    for target in [-1.5, 0.0, 1.5] {
        let i = mus.iter().position(|m| (m - target).abs() < 1e-9).unwrap();
        let local = slope[i.saturating_sub(1)].max(slope[i.min(slope.len() - 1)]);
        let ratio = local / median;
        out.push(Check::truth(
            format!("dP/dmu spike at mu={target}"),
            ratio > 5.0,
            format!("{ratio:.2}x median"),
        ));
    }
    out
}

pub fn dqpt_params(gamma_minus: f64, gamma_plus: f64) -> KitaevParams {
    KitaevParams::new(100, 1.0, 0.5, 1.0, gamma_plus, gamma_minus)
}

/// Cusps of the rate function after a quench from the vacuum.
pub fn dqpt_cusps() -> Vec<Check> {
    let times = grid(0.0, 10.0, 0.02);
    let vac = GaussianOperator::vacuum(100);
    let run = |p: KitaevParams| {
        let model = build_kitaev(&p).unwrap();
        cusp_times(&loschmidt(&model, &vac, &times).unwrap())
    };
    let closed = run(dqpt_params(0.0, 0.0));
    let open = run(dqpt_params(0.5, 0.25));
    let window = |c: &f64| (4.5..=5.5).contains(c);
    let fmt = |v: &[f64]| format!("{:?}", v.iter().map(|t| format!("{t:.2}")).collect::<Vec<_>>());
    vec![
        Check::truth("unitary cusps", !closed.is_empty(), fmt(&closed)),
        Check::truth(
            "dissipative cusps persist",
            open.iter().any(|c| !window(c)),
            fmt(&open),
        ),
        Check::truth(
            "new cusp in [4.5, 5.5]",
            open.iter().any(window) && !closed.iter().any(window),
            format!("unitary {} dissipative {}", fmt(&closed), fmt(&open)),
        ),
    ]
}

/// Position of the global maximum of `n(k)`: interior pair or `k ∈ {0, π}`.
pub fn nk_peak(p: &KitaevParams, phi: f64) -> (f64, bool) {
    let model = build_kitaev(p).unwrap();
    let d = momentum_distribution(&model, phi).unwrap();
    let n = d.nk.len();
    let m = (0..n).max_by(|&a, &b| d.nk[a].total_cmp(&d.nk[b])).unwrap();
    let boundary = m == 0 || 2 * m == n;
    let paired = (d.nk[m] - d.nk[(n - m) % n]).abs() < 1e-9 * d.nk[m].abs().max(1.0);
    (d.k[m], !boundary && paired)
}

pub fn nk_bifurcation() -> Vec<Check> {
    let base = spectrum_params();
    let mut out = vec![];
    for (phi, label) in [(0.0, "0"), (PI, "pi")] {
        let (k1, interior1) = nk_peak(&base.with_mu(1.0), phi);
        out.push(Check::truth(
            format!("phi={label} mu=1 interior pair"),
            interior1,
            format!("argmax k={k1:.3}"),
        ));
        let (k2, interior2) = nk_peak(&base.with_mu(2.0), phi);
        out.push(Check::truth(
            format!("phi={label} mu=2 boundary"),
            !interior2 && (k2.abs() < 1e-12 || (k2 - PI).abs() < 1e-12),
            format!("argmax k={k2:.3}"),
        ));
    }
    out
}

/// `sqrt_det_analytic` against Fock-space traces of `Γ̂₂(K)`.
pub fn branch_soundness() -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for i in 0..1000 {
        let n = 1 + i % 3;
        let scale = [0.3, 1.0, 2.5][(i / 3) % 3];
        let k = random_symmetric_k(&mut rng, n, scale);
        let (z, _) = sqrt_det_analytic(BranchForm::GaussianTrace, &k, n).unwrap();
        let want = gaussian_trace(&k).unwrap();
        worst = worst.max((z - want).norm() / want.norm());
    }
    let mut exact = true;
    for n in 1..=3 {
        let (z, _) =
            sqrt_det_analytic(BranchForm::GaussianTrace, &CMatrix::zeros((2 * n, 2 * n)), n)
                .unwrap();
        let want = (1u32 << n) as f64;
        exact &= (z - want).norm() <= 8.0 * f64::EPSILON * want;
    }
    vec![
        Check::below("relative error over 1000 K", worst, 1e-8),
        Check::truth("Z(0) = 2^N to rounding", exact, "N=1,2,3"),
    ]
}
