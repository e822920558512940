//! Special functions used by the closed-form metrics.
//!
//! Only the cases the exposure/coverage formulas produce are covered:
//!
//! | function | domain |
//! |---|---|
//! | [`lower_incomplete_gamma`] | integer order, complex argument |
//! | [`generalized_incomplete_gamma`] | integer order, complex limits |
//! | [`elliptic_k`], [`elliptic_e`] | parameter m <= 0 (imaginary modulus) |
//! | [`gauss_2f1_imag`] | purely imaginary argument, any modulus |
//! | [`bessel_i0_scaled`] | x >= 0 |
//! | [`complex_pow_principal`] | principal branch powers |
//!
//! Elliptic integrals use the parameter convention K(m) = ∫(1 - m sin²φ)^(-1/2) dφ.

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecError {
    #[error("unsupported order {0}: only positive integer orders are implemented")]
    UnsupportedOrder(f64),
    #[error("argument outside the supported domain: {0}")]
    Domain(String),
    #[error("series did not converge after {terms} terms (last term {last:e})")]
    Convergence { terms: usize, last: f64 },
}

const MAX_TERMS: usize = 20_000;

/// ln(n!) for small n, exact table below 171 then Stirling via ln Γ.
pub fn ln_factorial(n: u32) -> f64 {
    statrs::function::gamma::ln_gamma(n as f64 + 1.0)
}

fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// e^(-z) Σ_{k<m} z^k/k!, the regularized upper incomplete gamma Q(m, z) for integer m.
pub fn regularized_upper_gamma(m: u32, z: Complex64) -> Complex64 {
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    for k in 1..m {
        term = term * z / k as f64;
        sum += term;
    }
    (-z).exp() * sum
}

/// Real-argument Q(m, x) = e^(-x) Σ_{k<m} x^k/k!, evaluated in log space for large x.
pub fn regularized_upper_gamma_real(m: u32, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < 700.0 {
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..m {
            term *= x / k as f64;
            sum += term;
        }
        return (-x).exp() * sum;
    }
    // e^{-x} x^k/k! summed in log space
    let lx = x.ln();
    let mut acc = 0.0;
    for k in 0..m {
        acc += (k as f64 * lx - x - ln_factorial(k)).exp();
    }
    acc
}

fn check_order(m: u32) -> Result<(), SpecError> {
    if m == 0 {
        Err(SpecError::UnsupportedOrder(0.0))
    } else {
        Ok(())
    }
}

/// γ(m, z) = ∫_0^z t^(m-1) e^(-t) dt for integer m >= 1.
///
/// Small |z| uses the convergent series z^m e^(-z) Σ z^k / (m)_(k+1) to avoid the
/// cancellation in the closed form (m-1)!(1 - Q(m, z)).
pub fn lower_incomplete_gamma(m: u32, z: Complex64) -> Result<Complex64, SpecError> {
    check_order(m)?;
    if z.norm() == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    if z.norm() <= m as f64 + 1.0 {
        let mut term = Complex64::new(1.0 / m as f64, 0.0);
        let mut sum = term;
        for k in 1..MAX_TERMS {
            term = term * z / (m as f64 + k as f64);
            sum += term;
            if term.norm() <= 1e-17 * sum.norm() {
                return Ok(z.powu(m) * (-z).exp() * sum);
            }
        }
        return Err(SpecError::Convergence { terms: MAX_TERMS, last: term.norm() });
    }
    Ok(factorial(m - 1) * (Complex64::new(1.0, 0.0) - regularized_upper_gamma(m, z)))
}

/// Γ(m; z, ∞) = (m-1)! Q(m, z).
pub fn upper_incomplete_gamma(m: u32, z: Complex64) -> Result<Complex64, SpecError> {
    check_order(m)?;
    Ok(factorial(m - 1) * regularized_upper_gamma(m, z))
}

/// Γ(m; a, b) = γ(m, b) - γ(m, a) = ∫_a^b t^(m-1) e^(-t) dt.
pub fn generalized_incomplete_gamma(m: u32, a: Complex64, b: Complex64) -> Result<Complex64, SpecError> {
    check_order(m)?;
    // when both limits are large the difference of upper tails is the stable form
    if a.norm() > m as f64 + 1.0 && b.norm() > m as f64 + 1.0 {
        return Ok(factorial(m - 1) * (regularized_upper_gamma(m, a) - regularized_upper_gamma(m, b)));
    }
    Ok(lower_incomplete_gamma(m, b)? - lower_incomplete_gamma(m, a)?)
}

/// Regularized lower incomplete gamma P(m, x) for integer m and real x >= 0.
pub fn regularized_lower_gamma_real(m: u32, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x <= m as f64 + 1.0 {
        let mut term = 1.0 / m as f64;
        let mut sum = term;
        for k in 1..MAX_TERMS {
            term *= x / (m as f64 + k as f64);
            sum += term;
            if term <= 1e-17 * sum {
                break;
            }
        }
        return (m as f64 * x.ln() - x - ln_factorial(m - 1)).exp() * sum;
    }
    1.0 - regularized_upper_gamma_real(m, x)
}

fn agm_k_e(m1: f64, mc: f64) -> (f64, f64) {
    // m1 in [0,1), mc = 1 - m1 supplied separately to keep precision near 1
    let mut a = 1.0f64;
    let mut b = mc.sqrt();
    let mut c2_sum = 0.5 * m1; // 2^{-1} c_0^2
    let mut pow2 = 0.5;
    for _ in 0..60 {
        let an = 0.5 * (a + b);
        let cn = 0.5 * (a - b);
        let bn = (a * b).sqrt();
        pow2 *= 2.0;
        c2_sum += pow2 * cn * cn;
        a = an;
        b = bn;
        if cn.abs() < 1e-17 * a {
            break;
        }
    }
    let k = std::f64::consts::FRAC_PI_2 / a;
    (k, k * (1.0 - c2_sum))
}

fn transformed(m: f64) -> Result<(f64, f64, f64), SpecError> {
    if !(m <= 0.0) || !m.is_finite() {
        return Err(SpecError::Domain(format!("elliptic parameter {m} must be finite and <= 0")));
    }
    let s = 1.0 - m;
    // m/(m-1) and its complement 1/(1-m)
    Ok((-m / s, 1.0 / s, s))
}

/// Complete elliptic integral of the first kind for parameter m <= 0.
pub fn elliptic_k(m: f64) -> Result<f64, SpecError> {
    let (m1, mc, s) = transformed(m)?;
    let (k, _) = agm_k_e(m1, mc);
    Ok(k / s.sqrt())
}

/// Complete elliptic integral of the second kind for parameter m <= 0.
pub fn elliptic_e(m: f64) -> Result<f64, SpecError> {
    let (m1, mc, s) = transformed(m)?;
    let (_, e) = agm_k_e(m1, mc);
    Ok(e * s.sqrt())
}

/// K and E at parameter m1 in [0, 1), with the complement mc = 1 - m1 passed
/// separately so that m1 -> 1 keeps full relative precision (m1 may round to 1).
pub fn elliptic_ke_complement(m1: f64, mc: f64) -> Result<(f64, f64), SpecError> {
    if !(0.0..=1.0).contains(&m1) || !(mc > 0.0 && mc <= 1.0) {
        return Err(SpecError::Domain(format!("parameter {m1} (complement {mc}) outside [0, 1)")));
    }
    Ok(agm_k_e(m1, mc))
}

/// Both K(m) and E(m) in one AGM pass.
pub fn elliptic_ke(m: f64) -> Result<(f64, f64), SpecError> {
    let (m1, mc, s) = transformed(m)?;
    let (k, e) = agm_k_e(m1, mc);
    let r = s.sqrt();
    Ok((k / r, e * r))
}

/// Which evaluation path [`gauss_2f1_imag`] takes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HypBranch {
    Series,
    Pfaff,
    Inversion,
}

pub const HYP_SWITCH: f64 = 0.9;

fn hyp_series(a: f64, b: f64, c: f64, z: Complex64) -> Result<Complex64, SpecError> {
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    for n in 0..MAX_TERMS {
        let nf = n as f64;
        term = term * z * ((a + nf) * (b + nf) / ((c + nf) * (nf + 1.0)));
        sum += term;
        if term.norm() <= 1e-17 * sum.norm() && n > 2 {
            return Ok(sum);
        }
        if term.norm() == 0.0 {
            return Ok(sum);
        }
    }
    Err(SpecError::Convergence { terms: MAX_TERMS, last: term.norm() })
}

fn is_nonpos_int(x: f64) -> bool {
    x <= 0.0 && x == x.round()
}

fn gamma(x: f64) -> f64 {
    statrs::function::gamma::gamma(x)
}

fn hyp_pfaff(a: f64, b: f64, c: f64, z: Complex64) -> Result<Complex64, SpecError> {
    let one = Complex64::new(1.0, 0.0);
    let w = z / (z - one);
    Ok(complex_pow_principal(one - z, -a)? * hyp_series(a, c - b, c, w)?)
}

fn hyp_inversion(a: f64, b: f64, c: f64, z: Complex64) -> Result<Complex64, SpecError> {
    let one = Complex64::new(1.0, 0.0);
    let w = one / z;
    let mz = -z;
    if (c - b - 1.0).abs() < 1e-14 {
        // c = b + 1: the second series collapses to 1 and the first
        // coefficient simplifies, which also covers integer a - b > 0
        if is_nonpos_int(a - b) {
            return hyp_euler(a, b, c, z);
        }
        let t1 = complex_pow_principal(mz, -a)? * hyp_series(a, a - b, a - b + 1.0, w)? * (b / (b - a));
        let t2 = complex_pow_principal(mz, -b)? * (gamma(b + 1.0) * gamma(a - b) / gamma(a));
        return Ok(t1 + t2);
    }
    let d = a - b;
    if (d - d.round()).abs() < 1e-12 {
        return hyp_euler(a, b, c, z);
    }
    let g1 = gamma(c) * gamma(b - a) / (gamma(b) * gamma(c - a));
    let g2 = gamma(c) * gamma(a - b) / (gamma(a) * gamma(c - b));
    let mut out = Complex64::new(0.0, 0.0);
    if g1 != 0.0 && g1.is_finite() {
        out += complex_pow_principal(mz, -a)? * hyp_series(a, a - c + 1.0, a - b + 1.0, w)? * g1;
    }
    if g2 != 0.0 && g2.is_finite() {
        out += complex_pow_principal(mz, -b)? * hyp_series(b, b - c + 1.0, b - a + 1.0, w)? * g2;
    }
    Ok(out)
}

// Euler integral, the fallback when the 1/z transformation is degenerate
fn hyp_euler(a: f64, b: f64, c: f64, z: Complex64) -> Result<Complex64, SpecError> {
    let (a, b) = if c > b && b > 0.0 {
        (a, b)
    } else if c > a && a > 0.0 {
        (b, a)
    } else {
        return Err(SpecError::Domain(format!(
            "degenerate parameters (a={a}, b={b}, c={c}) without an Euler integral representation"
        )));
    };
    let pref = gamma(c) / (gamma(b) * gamma(c - b));
    let tail = |t: f64| (Complex64::new(1.0, 0.0) - z * t).ln().scale(-a).exp();
    // split at 1/2 and substitute t = s^(1/b), 1 - t = s^(1/(c-b)) so that
    // both endpoint singularities are absorbed
    let d = c - b;
    let lo = |s: f64| {
        let t = s.powf(1.0 / b);
        tail(t) * ((1.0 - t).powf(d - 1.0) / b)
    };
    let hi = |s: f64| {
        let t = 1.0 - s.powf(1.0 / d);
        tail(t) * (t.powf(b - 1.0) / d)
    };
    let mut out = Complex64::new(0.0, 0.0);
    for (f, end) in [(&lo as &dyn Fn(f64) -> Complex64, 0.5f64.powf(b)), (&hi, 0.5f64.powf(d))] {
        let re = crate::quad::tanh_sinh(|s| f(s).re, 0.0, end, 1e-13);
        let im = crate::quad::tanh_sinh(|s| f(s).im, 0.0, end, 1e-13);
        if !re.converged || !im.converged {
            return Err(SpecError::Convergence { terms: 0, last: re.error.max(im.error) });
        }
        out += Complex64::new(re.value, im.value);
    }
    Ok(out * pref)
}

/// Branch that [`gauss_2f1_imag`] selects for argument z.
pub fn hyp_branch(z: Complex64) -> HypBranch {
    if z.norm() < HYP_SWITCH {
        return HypBranch::Series;
    }
    let w = z / (z - Complex64::new(1.0, 0.0));
    if w.norm() < HYP_SWITCH {
        HypBranch::Pfaff
    } else {
        HypBranch::Inversion
    }
}

/// ₂F₁(a, b; c; z) through a forced evaluation path (for continuity checks).
pub fn gauss_2f1_with(branch: HypBranch, a: f64, b: f64, c: f64, z: Complex64) -> Result<Complex64, SpecError> {
    if is_nonpos_int(c) {
        return Err(SpecError::Domain(format!("c = {c} is a nonpositive integer")));
    }
    match branch {
        HypBranch::Series => hyp_series(a, b, c, z),
        HypBranch::Pfaff => hyp_pfaff(a, b, c, z),
        HypBranch::Inversion => hyp_inversion(a, b, c, z),
    }
}

/// Gauss hypergeometric ₂F₁(a, b; c; z) for purely imaginary z (principal branch).
pub fn gauss_2f1_imag(a: f64, b: f64, c: f64, z: Complex64) -> Result<Complex64, SpecError> {
    if z.re.abs() > 1e-12 * z.norm().max(1.0) {
        return Err(SpecError::Domain(format!("argument {z} is not purely imaginary")));
    }
    if is_nonpos_int(a) || is_nonpos_int(b) {
        // terminating polynomial
        return gauss_2f1_with(HypBranch::Series, a, b, c, z);
    }
    gauss_2f1_with(hyp_branch(z), a, b, c, z)
}

/// e^(-x) I₀(x) for x >= 0.
pub fn bessel_i0_scaled(x: f64) -> f64 {
    if x <= 25.0 {
        let q = 0.25 * x * x;
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1.0;
        loop {
            term *= q / (k * k);
            sum += term;
            if term < 1e-17 * sum {
                break;
            }
            k += 1.0;
        }
        return sum * (-x).exp();
    }
    // asymptotic series, truncated at the smallest term
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    loop {
        let next = term * (2.0 * k - 1.0) * (2.0 * k - 1.0) / (8.0 * k * x);
        if next < 1e-17 * sum || next > term {
            break;
        }
        term = next;
        sum += term;
        k += 1.0;
    }
    sum / (2.0 * std::f64::consts::PI * x).sqrt()
}

/// exp(p · Log(base)) with Log the principal logarithm.
pub fn complex_pow_principal(base: Complex64, exponent: f64) -> Result<Complex64, SpecError> {
    if base.norm() == 0.0 {
        if exponent > 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        return Err(SpecError::Domain("zero base with nonpositive exponent".into()));
    }
    Ok((base.ln() * exponent).exp())
}
