//! Gil-Pelaez inversion of characteristic functions.
//!
//! Everything reduces to the one-sided sine transform
//!
//! S(ω) = ∫_0^∞ Im[g(q) e^{-jqω}] / q dq
//!
//! for some g with real g(0). The integral is split at q_c ≈ 2π/|ω|: below
//! q_c the integrand is handled in ln q (it vanishes linearly as q → 0 and the
//! interesting scale of g is unknown), above q_c the oscillation is summed in
//! half-period panels and the partial sums are accelerated by Wynn's epsilon
//! algorithm. If the panel sums do not alternate (the phase of g cancels the
//! carrier) the tail falls back to ln q decades with an algebraic-decay bound.

use crate::quad::{adaptive, gk15, wynn_epsilon, Estimate};
use num_complex::Complex64;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum InversionError {
    #[error("inversion did not converge: partial value {value} (error estimate {error:e})")]
    Convergence { value: f64, error: f64 },
    #[error("invalid argument: {0}")]
    Invalid(&'static str),
}

/// A characteristic function (or a sub-probability weighted one) on q > 0.
pub trait CharacteristicFunction: Sync {
    fn eval(&self, q: f64) -> Complex64;

    /// p in |φ(q)| = O(q^-p) as q → ∞; used to bound the truncated tail.
    fn decay_order(&self) -> f64 {
        1.0
    }
}

impl<F: Fn(f64) -> Complex64 + Sync> CharacteristicFunction for F {
    fn eval(&self, q: f64) -> Complex64 {
        self(q)
    }
}

/// Closure with an explicit decay order.
#[derive(Debug, Clone, Copy)]
pub struct WithDecay<F> {
    pub f: F,
    pub order: f64,
}

impl<F: Fn(f64) -> Complex64 + Sync> CharacteristicFunction for WithDecay<F> {
    fn eval(&self, q: f64) -> Complex64 {
        (self.f)(q)
    }
    fn decay_order(&self) -> f64 {
        self.order
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    /// absolute tolerance on the returned probability
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// pivot frequency when ω = 0 (defaults to 1)
    pub q_max: Option<f64>,
    /// budget of Gauss-Kronrod panels per inversion
    pub max_panels: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig { abs_tol: 1e-7, rel_tol: 1e-7, q_max: None, max_panels: 6000 }
    }
}

impl QuadratureConfig {
    pub fn with_tol(tol: f64) -> Self {
        QuadratureConfig { abs_tol: tol, rel_tol: tol, ..Default::default() }
    }

    pub fn validate(&self) -> Result<(), InversionError> {
        if !(self.abs_tol > 0.0) || !(self.rel_tol > 0.0) {
            return Err(InversionError::Invalid("tolerances must be positive"));
        }
        if self.max_panels < 8 {
            return Err(InversionError::Invalid("max_panels must be at least 8"));
        }
        Ok(())
    }
}

/// A probability with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Probability {
    pub value: f64,
    pub error: f64,
}

struct Budget {
    used: usize,
    max: usize,
}

impl Budget {
    fn left(&self) -> usize {
        self.max.saturating_sub(self.used)
    }
}

const LN10: f64 = std::f64::consts::LN_10;

/// S(ω) = ∫_0^∞ Im[g(q) e^{-jqω}]/q dq with an error estimate.
pub fn sine_transform<C: CharacteristicFunction + ?Sized>(
    g: &C,
    omega: f64,
    cfg: &QuadratureConfig,
) -> Result<Estimate<f64>, InversionError> {
    cfg.validate()?;
    if !omega.is_finite() {
        return Err(InversionError::Invalid("frequency shift must be finite"));
    }
    let tol = cfg.abs_tol * PI;
    let mut budget = Budget { used: 0, max: cfg.max_panels };
    let w = omega.abs();
    let carrier = |q: f64| Complex64::from_polar(1.0, -q * omega);
    let k = |t: f64| {
        let q = t.exp();
        (g.eval(q) * carrier(q)).im
    };
    let pivot = if w > 0.0 { 2.0 * PI / w } else { cfg.q_max.unwrap_or(1.0) };
    let g0 = g.eval(0.0);

    // low part: decades below the pivot until g(q)e^{-jqω} has settled on g(0).
    // A sub-probability CF can vanish both at 0 and above its own scale, so
    // quiet decades only count once the natural scale q = 1 has been passed
    let floor = cfg.q_max.unwrap_or(1.0).min(pivot).ln();
    let mut value = 0.0;
    let mut error = 0.0;
    let mut t_hi = pivot.ln();
    let mut quiet = 0;
    for _ in 0..80 {
        let t_lo = t_hi - LN10;
        let e = run_adaptive(&k, t_lo, t_hi, tol * 0.05, cfg.rel_tol * 0.1, &mut budget);
        value += e.value;
        error += e.error;
        let q = t_lo.exp();
        let drift = (g.eval(q) * carrier(q) - g0).norm();
        if drift < tol * 0.01 && e.value.abs() < tol * 0.01 && t_lo <= floor {
            quiet += 1;
            if quiet >= 2 {
                // remaining ∫_0^q |Im|/q is at most about the drift
                error += drift;
                break;
            }
        } else {
            quiet = 0;
        }
        t_hi = t_lo;
        if budget.left() == 0 {
            return Err(InversionError::Convergence { value, error: f64::INFINITY });
        }
    }

    // upper part
    let tail = if w > 0.0 {
        oscillatory_tail(g, omega, pivot, tol, cfg.rel_tol, &mut budget)
    } else {
        None
    };
    let (tv, te) = match tail {
        Some(r) => r,
        None => {
            let start = if w > 0.0 { pivot * 64.0 } else { pivot };
            let mut acc = 0.0;
            let mut err = 0.0;
            if w > 0.0 {
                // oscillatory part that Wynn could not sum: integrate it directly
                let e = run_adaptive(
                    |q: f64| (g.eval(q) * carrier(q)).im / q,
                    pivot,
                    start,
                    tol * 0.05,
                    cfg.rel_tol * 0.1,
                    &mut budget,
                );
                acc += e.value;
                err += e.error;
            }
            let (v, e) = decade_tail(g, &k, start, tol, cfg.rel_tol, &mut budget)
                .ok_or(InversionError::Convergence { value: value + acc, error: f64::INFINITY })?;
            (acc + v, err + e)
        }
    };
    value += tv;
    error += te;
    if budget.used >= budget.max {
        return Err(InversionError::Convergence { value, error });
    }
    Ok(Estimate { value, error, converged: true })
}

fn run_adaptive<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64, budget: &mut Budget) -> Estimate<f64> {
    let cap = budget.left().clamp(1, 400);
    let mut calls = 0usize;
    let e = adaptive(
        |x: f64| {
            calls += 1;
            f(x)
        },
        &[a, b],
        abs_tol,
        rel_tol,
        cap,
    );
    budget.used += calls.div_ceil(15);
    e
}

/// Half-period panels from `start`, summed with Wynn acceleration. None when
/// the partial sums do not settle (non-alternating tail).
fn oscillatory_tail<C: CharacteristicFunction + ?Sized>(
    g: &C,
    omega: f64,
    start: f64,
    tol: f64,
    rel_tol: f64,
    budget: &mut Budget,
) -> Option<(f64, f64)> {
    let h = PI / omega.abs();
    let mut f = |q: f64| (g.eval(q) * Complex64::from_polar(1.0, -q * omega)).im / q;
    let mut sums: Vec<f64> = Vec::with_capacity(128);
    let mut s = 0.0;
    let mut quad_err = 0.0;
    let mut prev_est: Option<f64> = None;
    let mut small = 0;
    for n in 0..128 {
        let a = start + n as f64 * h;
        let (v, e) = gk15(&mut f, a, a + h);
        let (v, e) = if e > tol * 1e-3 {
            let r = run_adaptive(&mut f, a, a + h, tol * 1e-3, rel_tol * 0.01, budget);
            (r.value, r.error)
        } else {
            budget.used += 1;
            (v, e)
        };
        s += v;
        quad_err += e;
        sums.push(s);
        // envelope already negligible: the remaining alternating tail is below |v|
        let env = g.eval(a + h).norm() / (a + h) * h;
        if v.abs() < tol * 1e-3 && env < tol * 1e-3 {
            small += 1;
            if small >= 3 {
                return Some((s, quad_err + v.abs()));
            }
        } else {
            small = 0;
        }
        if sums.len() >= 6 {
            let from = sums.len().saturating_sub(24);
            let (est, werr) = wynn_epsilon(&sums[from..]);
            if let Some(p) = prev_est {
                let d = (est - p).abs();
                if d < tol * 0.1 && werr < tol {
                    return Some((est, quad_err + d + werr.min(tol)));
                }
            }
            prev_est = Some(est);
        }
        if budget.left() == 0 {
            return None;
        }
    }
    None
}

/// ∫_{q0}^∞ in ln q decades until the algebraic tail bound |g(q)|/p is below tol.
fn decade_tail<C: CharacteristicFunction + ?Sized, K: Fn(f64) -> f64>(
    g: &C,
    k: &K,
    q0: f64,
    tol: f64,
    rel_tol: f64,
    budget: &mut Budget,
) -> Option<(f64, f64)> {
    let p = g.decay_order().max(0.25);
    let mut t = q0.ln();
    let mut v = 0.0;
    let mut err = 0.0;
    for _ in 0..200 {
        let e = run_adaptive(k, t, t + LN10, tol * 0.05, rel_tol * 0.1, budget);
        v += e.value;
        err += e.error;
        t += LN10;
        let bound = g.eval(t.exp()).norm() / p;
        if bound < tol * 0.05 && e.value.abs() < tol * 0.05 {
            return Some((v, err + bound));
        }
        if budget.left() == 0 {
            return None;
        }
    }
    None
}

fn clamp_prob(v: f64, hi: f64) -> f64 {
    v.clamp(0.0, hi)
}

/// F(x) = ½ − (1/π) ∫ Im[φ(q/x) e^{-jq}]/q dq, x > 0 (frequency normalized by x).
pub fn gil_pelaez_cdf<C: CharacteristicFunction + ?Sized>(
    cf: &C,
    x: f64,
    quad: &QuadratureConfig,
) -> Result<Probability, InversionError> {
    if !(x > 0.0) {
        return Err(InversionError::Invalid("normalized form needs x > 0; use gil_pelaez_cdf_raw"));
    }
    let scaled = WithDecay { f: |q: f64| cf.eval(q / x), order: cf.decay_order() };
    let s = sine_transform(&scaled, 1.0, quad)?;
    Ok(Probability { value: clamp_prob(0.5 - s.value / PI, 1.0), error: s.error / PI })
}

/// F(x) = ½ − (1/π) ∫ Im[φ(q) e^{-jqx}]/q dq for any real x.
pub fn gil_pelaez_cdf_raw<C: CharacteristicFunction + ?Sized>(
    cf: &C,
    x: f64,
    quad: &QuadratureConfig,
) -> Result<Probability, InversionError> {
    let s = sine_transform(cf, x, quad)?;
    Ok(Probability { value: clamp_prob(0.5 - s.value / PI, 1.0), error: s.error / PI })
}

/// P[S > t(I + σ²)] = ½ + (1/π) ∫ Im[φ_S(q) φ_I(-tq) e^{-jtqσ²}]/q dq.
pub fn gil_pelaez_ccdf_shifted<S, I>(
    phi_s: &S,
    phi_i: &I,
    t: f64,
    sigma2: f64,
    quad: &QuadratureConfig,
) -> Result<Probability, InversionError>
where
    S: CharacteristicFunction + ?Sized,
    I: CharacteristicFunction + ?Sized,
{
    if !(t > 0.0) || !(sigma2 >= 0.0) {
        return Err(InversionError::Invalid("need t > 0 and σ² >= 0"));
    }
    let joint = WithDecay { f: |q: f64| phi_s.eval(q) * phi_i.eval(-t * q), order: phi_s.decay_order() };
    let s = sine_transform(&joint, t * sigma2, quad)?;
    Ok(Probability { value: clamp_prob(0.5 + s.value / PI, 1.0), error: s.error / PI })
}

/// Sub-probability version: for Ψ(q) = E[e^{jqX}; A] with P[A] = Ψ(0),
/// returns P[X <= x, A] = ½Ψ(0) − (1/π) S(x).
pub fn weighted_cdf<C: CharacteristicFunction + ?Sized>(
    psi: &C,
    x: f64,
    quad: &QuadratureConfig,
) -> Result<Probability, InversionError> {
    let mass = psi.eval(0.0).re;
    let s = sine_transform(psi, x, quad)?;
    Ok(Probability { value: clamp_prob(0.5 * mass - s.value / PI, mass.max(0.0)), error: s.error / PI })
}

/// P[X > x, A] = ½Ψ(0) + (1/π) S(x).
pub fn weighted_ccdf<C: CharacteristicFunction + ?Sized>(
    psi: &C,
    x: f64,
    quad: &QuadratureConfig,
) -> Result<Probability, InversionError> {
    let mass = psi.eval(0.0).re;
    let s = sine_transform(psi, x, quad)?;
    Ok(Probability { value: clamp_prob(0.5 * mass + s.value / PI, mass.max(0.0)), error: s.error / PI })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp_cf(rate: f64) -> impl Fn(f64) -> Complex64 + Sync {
        move |q: f64| Complex64::new(1.0, 0.0) / Complex64::new(1.0, -q / rate)
    }

    fn gamma_cf(k: i32, rate: f64) -> impl Fn(f64) -> Complex64 + Sync {
        move |q: f64| Complex64::new(1.0, -q / rate).powi(-k)
    }

    #[test]
    fn exponential_law() {
        let cfg = QuadratureConfig::with_tol(1e-9);
        let p = gil_pelaez_cdf(&exp_cf(1.0), 1.0, &cfg).unwrap();
        assert!((p.value - (1.0 - (-1.0f64).exp())).abs() < 1e-8, "{p:?}");
        assert!((p.value - 0.632121).abs() < 5e-7);
    }

    #[test]
    fn gamma_two_law() {
        let cfg = QuadratureConfig::with_tol(1e-9);
        let p = gil_pelaez_cdf(&WithDecay { f: gamma_cf(2, 1.0), order: 2.0 }, 2.0, &cfg).unwrap();
        let exact = 1.0 - (-2.0f64).exp() * 3.0;
        assert!((p.value - exact).abs() < 1e-8);
        assert!((p.value - 0.593994).abs() < 5e-7);
    }

    #[test]
    fn normalized_and_raw_agree() {
        let cfg = QuadratureConfig::with_tol(1e-9);
        for &x in &[0.5, 1.0, 5.0] {
            let a = gil_pelaez_cdf(&exp_cf(1.0), x, &cfg).unwrap().value;
            let b = gil_pelaez_cdf_raw(&exp_cf(1.0), x, &cfg).unwrap().value;
            assert!((a - b).abs() < 1e-6, "x={x}: {a} vs {b}");
            assert!((a - (1.0 - (-x).exp())).abs() < 1e-7);
        }
    }

    #[test]
    fn tiny_and_huge_scales() {
        // power-like magnitudes: mean 1e-4 and thresholds from 1e-8 to 1e-2
        let cfg = QuadratureConfig::with_tol(1e-9);
        let cf = exp_cf(1e4);
        for &x in &[1e-8, 1e-6, 1e-4, 1e-3, 2e-3] {
            let p = gil_pelaez_cdf(&cf, x, &cfg).unwrap().value;
            let exact = -(-x * 1e4f64).exp_m1();
            assert!((p - exact).abs() < 1e-7, "x={x}: {p} vs {exact}");
        }
    }

    #[test]
    fn raw_form_below_zero() {
        let cfg = QuadratureConfig::with_tol(1e-9);
        let p = gil_pelaez_cdf_raw(&exp_cf(2.0), -0.3, &cfg).unwrap();
        assert!(p.value.abs() < 1e-7);
    }

    #[test]
    fn degenerate_ccdf_is_one() {
        let cfg = QuadratureConfig::with_tol(1e-9);
        let one = |_q: f64| Complex64::new(1.0, 0.0);
        let p = gil_pelaez_ccdf_shifted(&exp_cf(1.0), &one, 3.0, 0.0, &cfg).unwrap();
        assert!((p.value - 1.0).abs() < 1e-7, "{p:?}");
    }

    #[test]
    fn noise_only_exponential_tail() {
        let cfg = QuadratureConfig::with_tol(1e-9);
        let one = |_q: f64| Complex64::new(1.0, 0.0);
        let pbar = 2e-9;
        let sigma2 = 1e-12;
        for &t in &[1.0, 100.0, 2000.0] {
            let p = gil_pelaez_ccdf_shifted(&exp_cf(1.0 / pbar), &one, t, sigma2, &cfg).unwrap().value;
            let exact = (-t * sigma2 / pbar).exp();
            assert!((p - exact).abs() < 1e-7, "t={t}: {p} vs {exact}");
        }
    }

    #[test]
    fn sinr_with_exponential_interference() {
        // S ~ Exp(1), I ~ Exp(rate 2): P[S > tI] = 2/(2 + t)
        let cfg = QuadratureConfig::with_tol(1e-9);
        for &t in &[0.1, 1.0, 10.0] {
            let p = gil_pelaez_ccdf_shifted(&exp_cf(1.0), &exp_cf(2.0), t, 0.0, &cfg).unwrap().value;
            assert!((p - 2.0 / (2.0 + t)).abs() < 1e-7, "t={t}: {p}");
        }
    }

    #[test]
    fn weighted_forms_split_mass() {
        let cfg = QuadratureConfig::with_tol(1e-9);
        let cf = exp_cf(1.0);
        let w = |q: f64| cf(q) * 0.3;
        let a = weighted_cdf(&w, 0.7, &cfg).unwrap().value;
        let b = weighted_ccdf(&w, 0.7, &cfg).unwrap().value;
        assert!((a - 0.3 * (1.0 - (-0.7f64).exp())).abs() < 1e-8);
        assert!((a + b - 0.3).abs() < 1e-8);
    }

    #[test]
    fn point_mass_shift_uses_tail_fallback() {
        // X = 1 + Exp(1): the carrier at x = 1 cancels the deterministic phase
        let cfg = QuadratureConfig::with_tol(1e-8);
        let cf = |q: f64| Complex64::from_polar(1.0, q) / Complex64::new(1.0, -q);
        for &x in &[1.0, 1.5, 4.0] {
            let p = gil_pelaez_cdf_raw(&cf, x, &cfg).unwrap().value;
            let exact = 1.0 - (-(x - 1.0f64)).exp();
            assert!((p - exact).abs() < 1e-6, "x={x}: {p} vs {exact}");
        }
    }

    #[test]
    fn exhausted_budget_reports_partial_value() {
        let cfg = QuadratureConfig { abs_tol: 1e-14, rel_tol: 1e-14, q_max: None, max_panels: 8 };
        let slow = WithDecay { f: |q: f64| Complex64::new(1.0, -q).powf(-0.3), order: 0.3 };
        match gil_pelaez_cdf(&slow, 1.0, &cfg) {
            Err(InversionError::Convergence { value, .. }) => assert!(value.is_finite()),
            other => panic!("expected convergence error, got {other:?}"),
        }
    }

    #[test]
    fn halving_tolerance_is_self_consistent() {
        let cf = WithDecay { f: gamma_cf(3, 0.5), order: 3.0 };
        for &x in &[1.0, 6.0, 15.0] {
            let a = gil_pelaez_cdf(&cf, x, &QuadratureConfig::with_tol(1e-6)).unwrap();
            let b = gil_pelaez_cdf(&cf, x, &QuadratureConfig::with_tol(5e-7)).unwrap();
            assert!((a.value - b.value).abs() <= a.error.max(b.error).max(1e-7));
        }
    }

    #[test]
    fn sub_probability_vanishing_at_both_ends() {
        // g = φ_A - φ_B for A ~ N(0, 0.25), B ~ N(3, 0.25): zero at q = 0 and
        // negligible long before the pivot 2π/ω, content around q ~ 1
        let gauss = |mu: f64, s: f64| move |q: f64| Complex64::from_polar((-0.5 * q * q * s * s).exp(), q * mu);
        let (a, b) = (gauss(0.0, 0.5), gauss(3.0, 0.5));
        let g = WithDecay { f: move |q: f64| a(q) - b(q), order: 2.0 };
        let w = 2.9e-3;
        let s = sine_transform(&g, w, &QuadratureConfig::default()).unwrap();
        let phi = |x: f64| 0.5 * (1.0 + statrs::function::erf::erf(x / 2f64.sqrt()));
        // S = π(F_B(ω) - F_A(ω))
        let want = PI * (phi((w - 3.0) / 0.5) - phi(w / 0.5));
        assert!((s.value - want).abs() < 1e-6, "{} vs {want}", s.value);
    }
}
