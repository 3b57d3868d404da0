use std::f64::consts::{FRAC_PI_2, PI};

use super::{eigenvalues_sorted, ensure_square, CMatrix, LogDet, C64};
use crate::{Error, Result};

/// Functional form whose square root is continued from `λ = 0` to `λ = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchForm {
    /// `Z(λ) = √det[1 + e^{λA}]`, `Z(0) = 2^N`.
    GaussianTrace,
    /// `Z(λ) = √det[(1 − λ) + λB]`, `Z(0) = 1`.
    Affine,
}

#[derive(Debug, Clone, Copy)]
pub struct BranchOptions {
    pub initial_steps: usize,
    pub max_halvings: u32,
    /// Largest accepted change of `arg det` between consecutive samples.
    pub phase_threshold: f64,
}

impl Default for BranchOptions {
    fn default() -> Self {
        BranchOptions {
            initial_steps: 16,
            max_halvings: 12,
            phase_threshold: FRAC_PI_2,
        }
    }
}

/// Diagnostics of one continuation run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchTrace {
    /// Accepted path steps.
    pub steps: usize,
    pub final_value: C64,
    /// Smallest `|det|` seen along the path.
    pub min_step_det: f64,
    /// Deepest step halving that was needed.
    pub max_depth: u32,
    /// The determinant vanished at the endpoint; `final_value` is zero.
    pub zero_at_endpoint: bool,
    /// `ln|det|` at the endpoint.
    pub ln_abs: f64,
    /// Continuous `arg det` at the endpoint (not reduced mod 2π).
    pub arg: f64,
}

impl BranchTrace {
    /// `ln Z` on the tracked branch.
    pub fn half_log(&self) -> C64 {
        C64::new(0.5 * self.ln_abs, 0.5 * self.arg)
    }

    /// Merges diagnostics of several continuations feeding one result.
    pub fn combine(&self, other: &BranchTrace) -> BranchTrace {
        BranchTrace {
            steps: self.steps + other.steps,
            final_value: self.final_value * other.final_value,
            min_step_det: self.min_step_det.min(other.min_step_det),
            max_depth: self.max_depth.max(other.max_depth),
            zero_at_endpoint: self.zero_at_endpoint || other.zero_at_endpoint,
            ln_abs: self.ln_abs + other.ln_abs,
            arg: self.arg + other.arg,
        }
    }

    pub fn trivial(value: C64) -> BranchTrace {
        BranchTrace {
            steps: 1,
            final_value: value,
            min_step_det: value.norm_sqr(),
            max_depth: 0,
            zero_at_endpoint: value.norm() == 0.0,
            ln_abs: value.norm_sqr().ln(),
            arg: 2.0 * value.arg(),
        }
    }
}

/// Anything that yields `det M(s)` for `s ∈ [0, 1]`.
pub trait LogDetFn {
    fn log_det_at(&mut self, s: f64) -> Result<LogDet>;

    /// `det M(s)` together with `d ln det M / ds` when it is available.
    fn log_det_rate_at(&mut self, s: f64) -> Result<(LogDet, Option<C64>)> {
        Ok((self.log_det_at(s)?, None))
    }
}

impl<F: FnMut(f64) -> Result<LogDet>> LogDetFn for F {
    fn log_det_at(&mut self, s: f64) -> Result<LogDet> {
        self(s)
    }
}

/// Adapts a closure returning `(det M(s), d ln det M / ds)`.
///
/// The derivative bounds every step by the local distance to the nearest
/// zero, so zeros passing close to the path cannot alias the phase.
pub struct WithRate<F>(pub F);

impl<F: FnMut(f64) -> Result<(LogDet, C64)>> LogDetFn for WithRate<F> {
    fn log_det_at(&mut self, s: f64) -> Result<LogDet> {
        Ok((self.0)(s)?.0)
    }

    fn log_det_rate_at(&mut self, s: f64) -> Result<(LogDet, Option<C64>)> {
        let (d, r) = (self.0)(s)?;
        Ok((d, Some(r)))
    }
}

/// The representative of `x` mod 2π closest to `target`.
fn nearest_branch(x: f64, target: f64) -> f64 {
    target + wrap(x - target)
}

fn wrap(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y <= -PI {
        y + 2.0 * PI
    } else {
        y
    }
}

/// Square root of `det M(1)` on the branch continuously connected to the
/// principal root of `det M(0)`.
///
/// The path is sampled adaptively: a step is halved whenever the phase of the
/// determinant jumps by more than the threshold, or departs from the linear
/// prediction of the previous step by more than the threshold. Once the step
/// size sits at its floor, only the absolute jump test can still reject.
pub fn continue_sqrt_det<F: LogDetFn>(mut f: F, opts: BranchOptions) -> Result<(C64, BranchTrace)> {
    let h0 = 1.0 / opts.initial_steps.max(1) as f64;
    let h_min = h0 / 2f64.powi(opts.max_halvings as i32);

    let (d0, mut rate0) = f.log_det_rate_at(0.0)?;
    if d0.is_zero() {
        return Err(Error::BranchAmbiguity {
            at: 0.0,
            min_det: 0.0,
        });
    }
    let mut s = 0.0f64;
    let mut arg = d0.arg();
    let mut ln_abs = d0.ln_abs;
    let mut min_det = d0.ln_abs.exp();
    let mut h = h0;
    let mut depth = 0u32;
    let mut max_depth = 0u32;
    let mut steps = 0usize;
    let mut last_rate: Option<f64> = None;

    while s < 1.0 {
        let s_next = if s + h >= 1.0 - 1e-15 { 1.0 } else { s + h };
        let dt = s_next - s;
        let (d, rate1) = f.log_det_rate_at(s_next)?;
        if d.is_zero() {
            if s_next == 1.0 {
                let trace = BranchTrace {
                    steps: steps + 1,
                    final_value: C64::new(0.0, 0.0),
                    min_step_det: 0.0,
                    max_depth,
                    zero_at_endpoint: true,
                    ln_abs: f64::NEG_INFINITY,
                    arg,
                };
                return Ok((C64::new(0.0, 0.0), trace));
            }
            if dt <= h_min * 1.000001 {
                return Err(Error::BranchAmbiguity {
                    at: s_next,
                    min_det: 0.0,
                });
            }
            h *= 0.5;
            depth += 1;
            max_depth = max_depth.max(depth);
            continue;
        }
        let (delta, coarse) = match (rate0, rate1) {
            (Some(r0), Some(r1)) => {
                let trapezoid = 0.5 * dt * (r0 + r1).im;
                let delta = nearest_branch(d.arg() - arg, trapezoid);
                let coarse = dt * r0.norm().max(r1.norm()) > opts.phase_threshold
                    || (delta - trapezoid).abs() > 0.25 * opts.phase_threshold;
                (delta, coarse)
            }
            _ => (wrap(d.arg() - arg), false),
        };
        let predicted = last_rate.map(|r| r * dt);
        let jump_bad = delta.abs() > opts.phase_threshold;
        let curve_bad =
            coarse || predicted.is_some_and(|p| (delta - p).abs() > opts.phase_threshold);
        if jump_bad || curve_bad {
            if dt > h_min * 1.000001 {
                h *= 0.5;
                depth += 1;
                max_depth = max_depth.max(depth);
                continue;
            }
            if jump_bad {
                return Err(Error::BranchAmbiguity {
                    at: s_next,
                    min_det: min_det.min(d.ln_abs.exp()),
                });
            }
        }
        arg += delta;
        ln_abs = d.ln_abs;
        min_det = min_det.min(d.ln_abs.exp());
        last_rate = Some(delta / dt);
        rate0 = rate1;
        s = s_next;
        steps += 1;
        if depth > 0 && delta.abs() < 0.25 * opts.phase_threshold {
            h *= 2.0;
            depth -= 1;
        }
    }

    let half = C64::new(0.5 * ln_abs, 0.5 * arg);
    let value = half.exp();
    Ok((
        value,
        BranchTrace {
            steps,
            final_value: value,
            min_step_det: min_det,
            max_depth,
            zero_at_endpoint: false,
            ln_abs,
            arg,
        },
    ))
}

fn ln_one_plus_exp(x: C64) -> (f64, C64) {
    // (ln|1 + e^x|, phase of 1 + e^x), stable for large Re x
    if x.re > 30.0 {
        let tail = C64::new(1.0, 0.0) + (-x).exp();
        (x.re + tail.norm().ln(), C64::from_polar(1.0, x.im) * tail / tail.norm())
    } else {
        let w = C64::new(1.0, 0.0) + x.exp();
        let a = w.norm();
        if a == 0.0 {
            (f64::NEG_INFINITY, C64::new(0.0, 0.0))
        } else {
            (a.ln(), w / a)
        }
    }
}

fn product_log_det<I: Iterator<Item = (f64, C64)>>(factors: I) -> LogDet {
    let mut ln_abs = 0.0;
    let mut phase = C64::new(1.0, 0.0);
    for (l, p) in factors {
        if p.norm() == 0.0 || l == f64::NEG_INFINITY {
            return LogDet::zero();
        }
        ln_abs += l;
        phase *= p;
        phase /= phase.norm();
    }
    LogDet { ln_abs, phase }
}

/// Analytic square root of `det[1 + e^{λA}]` or `det[(1 − λ) + λB]` at `λ = 1`.
///
/// Both determinants depend on the matrix only through its eigenvalues, so
/// each path sample costs `O(N)` after a single eigenvalue computation.
pub fn sqrt_det_analytic(kind: BranchForm, a: &CMatrix, n: usize) -> Result<(C64, BranchTrace)> {
    let dim = ensure_square(a)?;
    if dim != 2 * n {
        return Err(Error::Dimension(format!(
            "expected a {}x{} matrix for N = {n}, got {dim}x{dim}",
            2 * n,
            2 * n
        )));
    }
    sqrt_det_analytic_with(kind, a, BranchOptions::default())
}

pub fn sqrt_det_analytic_with(
    kind: BranchForm,
    a: &CMatrix,
    opts: BranchOptions,
) -> Result<(C64, BranchTrace)> {
    let w = eigenvalues_sorted(a)?;
    match kind {
        BranchForm::GaussianTrace => continue_sqrt_det(
            |lam: f64| Ok(product_log_det(w.iter().map(|&x| ln_one_plus_exp(x * lam)))),
            opts,
        ),
        BranchForm::Affine => continue_sqrt_det(
            |lam: f64| {
                Ok(product_log_det(w.iter().map(|&b| {
                    let v = C64::new(1.0 - lam, 0.0) + b * lam;
                    let m = v.norm();
                    if m == 0.0 {
                        (f64::NEG_INFINITY, C64::new(0.0, 0.0))
                    } else {
                        (m.ln(), v / m)
                    }
                })))
            },
            opts,
        ),
    }
}
