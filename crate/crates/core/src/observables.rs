//! Physical observables built on the correlator engine.

use std::f64::consts::PI;

use crate::correlators::{
    check_sites, static_anyon_matrix, CorrelatorOptions, CountingPfaffian, GaussianOperator,
};
use crate::linalg::{
    continue_sqrt_det, identity, log_det, BranchOptions, BranchTrace, CMatrix, LogDet, Lu,
    WithRate, C64, I, ONE, ZERO,
};
use crate::model::{build_kitaev, KitaevParams, QuadraticModel};
use crate::propagator::{rapidity_spectrum, Dynamics, RapiditySpectrum};
use crate::{Error, Result};

/// Radius of the detour taken between consecutive counting-field samples.
pub const FCS_DETOUR: f64 = 0.1;

/// Largest tolerated imaginary part of an extracted probability.
pub const FCS_IMAG_TOL: f64 = 1e-7;

#[derive(Debug, Clone)]
pub struct FcsResult {
    pub t: f64,
    pub sites: Vec<usize>,
    /// `χ(iθ_k)` with `θ_k = 2πk/(|A|+1)`.
    pub chi_samples: Vec<C64>,
    pub pn: Vec<f64>,
    /// Total negative probability removed by clipping.
    pub clipped: f64,
    /// Largest `|Im P_n|` before taking real parts.
    pub imag_residue: f64,
}

impl FcsResult {
    pub fn total(&self) -> f64 {
        self.pn.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.pn.iter().enumerate().map(|(n, p)| n as f64 * p).sum()
    }
}


/// `det[B + e^{λτ_z𝔻_A}(1 − B)]` reduced to the rows and columns of `A`.
struct CountingDet {
    /// `(1 − B)` restricted to `A ∪ (A + N)`.
    y: CMatrix,
    /// `τ_z` entries of the restricted index set.
    signs: Vec<f64>,
}

impl CountingDet {
    fn new(b: &CMatrix, sites: &[usize]) -> Self {
        let n = b.nrows() / 2;
        let idx: Vec<usize> = sites
            .iter()
            .map(|&s| s - 1)
            .chain(sites.iter().map(|&s| n + s - 1))
            .collect();
        let w = idx.len();
        let y = CMatrix::from_shape_fn((w, w), |(a, c)| {
            let one = if a == c { ONE } else { ZERO };
            one - b[[idx[a], idx[c]]]
        });
        let signs = (0..w).map(|a| if a < sites.len() { 1.0 } else { -1.0 }).collect();
        CountingDet { y, signs }
    }

    fn at(&self, lambda: C64) -> Result<LogDet> {
        let w = self.y.nrows();
        let mut m = identity(w);
        for a in 0..w {
            let e = (lambda * self.signs[a]).exp() - 1.0;
            for c in 0..w {
                m[[a, c]] += e * self.y[[a, c]];
            }
        }
        log_det(&m)
    }

    /// `det M(λ)` and `d ln det M / ds` along a path with `dλ/ds = slope`.
    fn at_with_rate(&self, lambda: C64, slope: C64) -> Result<(LogDet, C64)> {
        let w = self.y.nrows();
        let mut m = identity(w);
        for a in 0..w {
            let e = (lambda * self.signs[a]).exp() - 1.0;
            for c in 0..w {
                m[[a, c]] += e * self.y[[a, c]];
            }
        }
        let lu = match Lu::new(&m) {
            Ok(lu) => lu,
            Err(Error::Singular { .. }) => return Ok((LogDet::zero(), ZERO)),
            Err(e) => return Err(e),
        };
        let ld = lu.log_det();
        if ld.is_zero() {
            return Ok((ld, ZERO));
        }
        // Tr[M⁻¹ M'] with M' = slope·τ_z e^{λτ_z} Y
        let ym = lu.solve_right(&self.y)?;
        let rate = (0..w)
            .map(|a| (lambda * self.signs[a]).exp() * self.signs[a] * ym[[a, a]])
            .sum::<C64>()
            * slope;
        Ok((ld, rate))
    }

    fn half_count(&self) -> f64 {
        self.signs.len() as f64 / 4.0
    }
}

/// `χ(λ) = e^{λ|A|/2} √det[B + e^{λτ_z𝔻_A}(1 − B)]` continued along `sλ`.
pub fn chi_continued(b: &CMatrix, sites: &[usize], lambda: C64) -> Result<(C64, BranchTrace)> {
    check_sites(b.nrows() / 2, sites)?;
    let det = CountingDet::new(b, sites);
    if lambda == ZERO {
        return Ok((ONE, BranchTrace::trivial(ONE)));
    }
    let (root, trace) = continue_sqrt_det(
        WithRate(|s: f64| det.at_with_rate(lambda * s, lambda)),
        BranchOptions::default(),
    )?;
    Ok((root * (lambda * det.half_count()).exp(), trace))
}

pub fn chi_from_b(b: &CMatrix, sites: &[usize], lambda: C64) -> Result<C64> {
    CountingPfaffian::new(b, sites)?.chi(lambda)
}

/// Samples `χ(iθ_k)` by one continuation around the unit circle in `e^λ`,
/// detouring off the circle between samples. Independent of the Pfaffian
/// route and used to cross-check it.
pub fn chi_samples_continued(b: &CMatrix, sites: &[usize], thetas: &[f64]) -> Result<Vec<C64>> {
    let det = CountingDet::new(b, sites);
    let mut chi = vec![ONE; thetas.len()];
    // continuous arg det and ln|det| at the last nonzero sample
    let mut last = (0.0f64, 0.0f64);
    let mut last_theta = 0.0f64;
    for k in 1..thetas.len() {
        let (th0, th1) = (last_theta, thetas[k]);
        let path = |s: f64| I * (th0 + s * (th1 - th0)) + FCS_DETOUR * (PI * s).sin();
        let slope = |s: f64| I * (th1 - th0) + FCS_DETOUR * PI * (PI * s).cos();
        let start = det.at(path(0.0))?.arg();
        let (_, trace) = continue_sqrt_det(
            WithRate(|s: f64| det.at_with_rate(path(s), slope(s))),
            BranchOptions::default(),
        )?;
        if trace.zero_at_endpoint {
            chi[k] = ZERO;
            continue;
        }
        let arg = last.0 + (trace.arg - start);
        last = (arg, trace.ln_abs);
        last_theta = th1;
        let lam = I * th1;
        chi[k] = (C64::new(0.5 * trace.ln_abs, 0.5 * arg) + lam * det.half_count()).exp();
    }
    Ok(chi)
}

/// Samples `χ(iθ_k)`, `θ_k = 2πk/(|A|+1)`, and inverts the discrete Fourier
/// series.
pub fn fcs_from_b(b: &CMatrix, sites: &[usize], t: f64) -> Result<FcsResult> {
    let counting = CountingPfaffian::new(b, sites)?;
    let m = sites.len() + 1;
    let thetas: Vec<f64> = (0..m).map(|k| 2.0 * PI * k as f64 / m as f64).collect();
    let chi = thetas
        .iter()
        .map(|&th| counting.chi(I * th))
        .collect::<Result<Vec<_>>>()?;
    let mut pn = Vec::with_capacity(m);
    let mut imag_residue = 0.0f64;
    for n in 0..m {
        let p: C64 = chi
            .iter()
            .zip(thetas.iter())
            .map(|(c, th)| c * C64::from_polar(1.0, -th * n as f64))
            .sum::<C64>()
            / m as f64;
        imag_residue = imag_residue.max(p.im.abs());
        pn.push(p.re);
    }
    if imag_residue > FCS_IMAG_TOL {
        return Err(Error::BranchAmbiguity {
            at: t,
            min_det: imag_residue,
        });
    }
    let clipped: f64 = pn.iter().filter(|p| **p < 0.0).map(|p| -p).sum();
    for p in pn.iter_mut() {
        *p = p.max(0.0);
    }
    let total: f64 = pn.iter().sum();
    for p in pn.iter_mut() {
        *p /= total;
    }
    Ok(FcsResult {
        t,
        sites: sites.to_vec(),
        chi_samples: chi,
        pn,
        clipped,
        imag_residue,
    })
}

pub fn fcs_chi(
    model: &QuadraticModel,
    state0: &GaussianOperator,
    sites: &[usize],
    lambda: C64,
    t: f64,
) -> Result<C64> {
    let b = Dynamics::new(model)?.evolve(state0.b(), t)?;
    chi_from_b(&b, sites, lambda)
}

pub fn fcs_pn(
    model: &QuadraticModel,
    state0: &GaussianOperator,
    sites: &[usize],
    t: f64,
) -> Result<FcsResult> {
    let b = Dynamics::new(model)?.evolve(state0.b(), t)?;
    fcs_from_b(&b, sites, t)
}

/// Steady-state distribution from `B₀ = ½ + M∞`.
pub fn fcs_steady(model: &QuadraticModel, sites: &[usize]) -> Result<FcsResult> {
    let b = Dynamics::new(model)?.steady_covariance()?;
    fcs_from_b(&b, sites, f64::INFINITY)
}

#[derive(Debug, Clone)]
pub struct LoschmidtSeries {
    pub n: usize,
    pub times: Vec<f64>,
    /// `L(t) = Tr[ρ(0)ρ(t)]`.
    pub echo: Vec<f64>,
    /// `r(t) = −ln L(t) / N`, `+∞` where the bracket is singular.
    pub rate: Vec<f64>,
}

/// `L = √|det[B₀B + (1 − B₀)(1 − B)]|`.
///
/// The overlap of two density matrices is real and nonnegative, so the
/// determinant is too and no branch has to be chosen.
pub fn echo_from_b(b0: &CMatrix, b: &CMatrix) -> Result<(f64, f64)> {
    let d = b0.nrows();
    let id = identity(d);
    let bracket = b0.dot(b) + (&id - b0).dot(&(&id - b));
    let ld = log_det(&bracket)?;
    if ld.is_zero() {
        return Ok((0.0, f64::INFINITY));
    }
    let n = (d / 2) as f64;
    Ok(((0.5 * ld.ln_abs).exp(), -ld.ln_abs / (2.0 * n)))
}

pub fn loschmidt(
    model: &QuadraticModel,
    state0: &GaussianOperator,
    times: &[f64],
) -> Result<LoschmidtSeries> {
    loschmidt_with(&Dynamics::new(model)?, state0, times)
}

pub fn loschmidt_with(
    dynamics: &Dynamics,
    state0: &GaussianOperator,
    times: &[f64],
) -> Result<LoschmidtSeries> {
    let mut echo = Vec::with_capacity(times.len());
    let mut rate = Vec::with_capacity(times.len());
    for &t in times {
        let b = dynamics.evolve(state0.b(), t)?;
        let (l, r) = echo_from_b(state0.b(), &b)?;
        echo.push(l);
        rate.push(r);
    }
    Ok(LoschmidtSeries {
        n: dynamics.n(),
        times: times.to_vec(),
        echo,
        rate,
    })
}

/// Indices where the second difference of `values` exceeds `factor` times
/// its median over a window of `±window` samples and is a local maximum.
pub fn detect_cusps(values: &[f64], window: usize, factor: f64) -> Vec<usize> {
    let len = values.len();
    if len < 3 {
        return vec![];
    }
    let d2: Vec<f64> = (1..len - 1)
        .map(|i| (values[i + 1] - 2.0 * values[i] + values[i - 1]).abs())
        .collect();
    let mut hits = vec![];
    for i in 0..d2.len() {
        let lo = i.saturating_sub(window);
        let hi = (i + window + 1).min(d2.len());
        let mut local: Vec<f64> = d2[lo..hi].to_vec();
        local.sort_by(f64::total_cmp);
        let median = local[local.len() / 2];
        let left = if i > 0 { d2[i - 1] } else { 0.0 };
        let right = if i + 1 < d2.len() { d2[i + 1] } else { 0.0 };
        if d2[i] > factor * median && d2[i] >= left && d2[i] >= right && d2[i].is_finite() {
            hits.push(i + 1);
        }
    }
    hits
}

/// Default cusp detector: factor 10 over a ±25-sample window.
pub fn cusp_times(series: &LoschmidtSeries) -> Vec<f64> {
    detect_cusps(&series.rate, 25, 10.0)
        .into_iter()
        .map(|i| series.times[i])
        .collect()
}

#[derive(Debug, Clone)]
pub struct MomentumDistribution {
    /// `k = 2πm/N`, `m = 0..N`.
    pub k: Vec<f64>,
    pub nk: Vec<f64>,
    /// Largest imaginary part discarded.
    pub imag_residue: f64,
}

impl MomentumDistribution {
    /// Indices of strict local maxima on the periodic grid.
    pub fn local_maxima(&self) -> Vec<usize> {
        let len = self.nk.len();
        (0..len)
            .filter(|&i| {
                let l = self.nk[(i + len - 1) % len];
                let r = self.nk[(i + 1) % len];
                self.nk[i] > l && self.nk[i] > r
            })
            .collect()
    }
}

/// `n(k) = (1/N) Σ_{j,l} e^{ik(j−l)} ⟨f_j† f_l⟩` in the steady state.
pub fn momentum_distribution(model: &QuadraticModel, phi: f64) -> Result<MomentumDistribution> {
    let b0 = Dynamics::new(model)?.steady_covariance()?;
    momentum_distribution_from_b(&b0, phi)
}

pub fn momentum_distribution_from_b(b0: &CMatrix, phi: f64) -> Result<MomentumDistribution> {
    let n = b0.nrows() / 2;
    let g = static_anyon_matrix(b0, phi, &CorrelatorOptions::default())?;
    let mut k = Vec::with_capacity(n);
    let mut nk = Vec::with_capacity(n);
    let mut imag_residue = 0.0f64;
    for m in 0..n {
        let kk = 2.0 * PI * m as f64 / n as f64;
        let mut acc = ZERO;
        for j in 0..n {
            for l in 0..n {
                acc += C64::from_polar(1.0, kk * (j as f64 - l as f64)) * g[[j, l]];
            }
        }
        acc /= n as f64;
        imag_residue = imag_residue.max(acc.im.abs());
        k.push(kk);
        nk.push(acc.re);
    }
    Ok(MomentumDistribution {
        k,
        nk,
        imag_residue,
    })
}

/// Bulk branches `±2J √((cos q − μ/2J)² + (Δ/J)² sin² q)`.
pub fn bulk_dispersion(j: f64, delta: f64, mu: f64, q: f64) -> (f64, f64) {
    let c = q.cos() - mu / (2.0 * j);
    let s = delta / j * q.sin();
    let v = 2.0 * j.abs() * (c * c + s * s).sqrt();
    (v, -v)
}

/// Rapidity spectrum of the Kitaev chain at each chemical potential.
pub fn spectrum_scan(base: &KitaevParams, mus: &[f64]) -> Result<Vec<(f64, RapiditySpectrum)>> {
    mus.iter()
        .map(|&mu| Ok((mu, rapidity_spectrum(&build_kitaev(&base.with_mu(mu))?)?)))
        .collect()
}

/// Grid point of smallest Liouvillian gap.
pub fn gap_minimum(scan: &[(f64, RapiditySpectrum)]) -> Option<(f64, f64)> {
    scan.iter()
        .map(|(mu, s)| (*mu, s.gap))
        .min_by(|a, b| a.1.total_cmp(&b.1))
}

/// Rapidities with `|Im λ| < tol`.
pub fn edge_modes(spectrum: &RapiditySpectrum, tol: f64) -> Vec<C64> {
    spectrum.zero_frequency_modes(tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::diag;

    #[test]
    fn dispersion_closed_forms() {
        let (p, m) = bulk_dispersion(1.0, 0.0, 0.0, PI / 2.0);
        assert!(p.abs() < 1e-15 && m.abs() < 1e-15);
        let (p, _) = bulk_dispersion(1.0, 0.5, 0.7, 0.0);
        assert!((p - 2.0 * (1.0f64 - 0.35).abs()).abs() < 1e-15);
    }

    #[test]
    fn vacuum_counts_nothing() {
        let b = GaussianOperator::vacuum(4).b().clone();
        let r = fcs_from_b(&b, &[1, 2, 3], 0.0).unwrap();
        assert!((r.pn[0] - 1.0).abs() < 1e-12);
        assert!(r.pn[1..].iter().all(|p| p.abs() < 1e-12));
    }

    #[test]
    fn infinite_temperature_is_binomial() {
        // zeros of χ sit on the unit circle here, which the detour avoids
        let b = identity(8) * C64::new(0.5, 0.0);
        let r = fcs_from_b(&b, &[1, 2, 3, 4], 0.0).unwrap();
        for (n, p) in r.pn.iter().enumerate() {
            let binom = [1.0, 4.0, 6.0, 4.0, 1.0][n] / 16.0;
            assert!((p - binom).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn product_state_distribution() {
        let occ = [0.2, 0.7, 0.9];
        let mut d = vec![];
        for o in occ {
            d.push(C64::new(1.0 - o, 0.0));
        }
        for o in occ {
            d.push(C64::new(o, 0.0));
        }
        let b = diag(&d);
        let r = fcs_from_b(&b, &[1, 2, 3], 0.0).unwrap();
        let mut want = vec![1.0, 0.0, 0.0, 0.0];
        for o in occ {
            for n in (0..4).rev() {
                want[n] = want[n] * (1.0 - o) + if n > 0 { want[n - 1] * o } else { 0.0 };
            }
        }
        for n in 0..4 {
            assert!((r.pn[n] - want[n]).abs() < 1e-12);
        }
        let chi = chi_from_b(&b, &[1, 2, 3], C64::new(0.4, 0.0)).unwrap();
        let direct: f64 = occ.iter().map(|o| 1.0 - o + o * 0.4f64.exp()).product();
        assert!((chi - direct).norm() < 1e-12);
    }

    #[test]
    fn pfaffian_matches_continuation() {
        let p = KitaevParams::new(4, 1.0, 0.5, 0.8, 0.1, 0.3);
        let model = build_kitaev(&p).unwrap();
        let b = Dynamics::new(&model)
            .unwrap()
            .evolve(GaussianOperator::vacuum(4).b(), 1.3)
            .unwrap();
        let sites = [1, 2, 4];
        let counting = CountingPfaffian::new(&b, &sites).unwrap();
        for lam in [C64::new(0.3, 0.2), C64::new(-1.1, 2.5), C64::new(0.0, 3.0)] {
            let (c, _) = chi_continued(&b, &sites, lam).unwrap();
            assert!((c - counting.chi(lam).unwrap()).norm() < 1e-10, "{lam}");
        }
        let thetas: Vec<f64> = (0..4).map(|k| 2.0 * PI * k as f64 / 4.0).collect();
        let cont = chi_samples_continued(&b, &sites, &thetas).unwrap();
        for (c, th) in cont.iter().zip(&thetas) {
            assert!((c - counting.chi(I * th).unwrap()).norm() < 1e-10);
        }
    }

    #[test]
    fn cusp_detector_finds_kinks() {
        let v: Vec<f64> = (0..400)
            .map(|i| {
                let t = i as f64 * 0.02;
                (t - 3.0).abs() + 0.1 * (t).sin()
            })
            .collect();
        let hits = detect_cusps(&v, 25, 10.0);
        assert_eq!(hits, vec![150]);
        let smooth: Vec<f64> = (0..400).map(|i| (i as f64 * 0.02).sin()).collect();
        assert!(detect_cusps(&smooth, 25, 10.0).is_empty());
    }

    #[test]
    fn echo_of_pure_state_at_zero_time() {
        let b = GaussianOperator::vacuum(3).b().clone();
        let (l, r) = echo_from_b(&b, &b).unwrap();
        assert!((l - 1.0).abs() < 1e-15 && r.abs() < 1e-15);
    }
}
