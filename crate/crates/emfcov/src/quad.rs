//! Quadrature building blocks shared by the analytic modules.
//!
//! * [`GaussLegendre`]: fixed n-point rules, nodes computed once by Newton iteration.
//! * [`adaptive`]: globally adaptive Gauss-Kronrod (7/15) bisection.
//! * [`tanh_sinh`]: double-exponential rule for integrable endpoint singularities.
//! * [`wynn_epsilon`]: sequence acceleration for alternating partial sums.

use num_complex::Complex64;
use std::ops::{Add, Mul, Sub};

/// Values that can be integrated: reals and complex numbers.
pub trait Quantity: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn magnitude(&self) -> f64;
}

impl Quantity for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl Quantity for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

/// n-point Gauss-Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    /// Nodes and weights mapped onto [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let h = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes.iter().zip(&self.weights).map(move |(&x, &w)| (mid + h * x, h * w))
    }

    pub fn integrate<T: Quantity, F: FnMut(f64) -> T>(&self, mut f: F, a: f64, b: f64) -> T {
        let mut acc = T::zero();
        for (x, w) in self.mapped(a, b) {
            acc = acc + f(x) * w;
        }
        acc
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// One 7/15 Gauss-Kronrod panel: (kronrod estimate, |kronrod - gauss|).
pub fn gk15<T: Quantity, F: FnMut(f64) -> T>(f: &mut F, a: f64, b: f64) -> (T, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k = k + s * WGK[j];
        if j % 2 == 1 {
            g = g + s * WG[j / 2];
        }
    }
    let k = k * h;
    let g = g * h;
    let err = (k - g).magnitude();
    (k, err)
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Estimate<T> {
    pub value: T,
    pub error: f64,
    pub converged: bool,
}

/// Globally adaptive bisection over an initial partition `breaks` (at least two points).
pub fn adaptive<T: Quantity, F: FnMut(f64) -> T>(
    mut f: F,
    breaks: &[f64],
    abs_tol: f64,
    rel_tol: f64,
    max_panels: usize,
) -> Estimate<T> {
    let mut panels: Vec<(f64, f64, T, f64)> = Vec::with_capacity(breaks.len() + 16);
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            let (v, e) = gk15(&mut f, w[0], w[1]);
            panels.push((w[0], w[1], v, e));
        }
    }
    loop {
        let total = panels.iter().fold(T::zero(), |acc, p| acc + p.2);
        let err: f64 = panels.iter().map(|p| p.3).sum();
        let tol = abs_tol.max(rel_tol * total.magnitude());
        if err <= tol || panels.len() >= max_panels {
            return Estimate { value: total, error: err, converged: err <= tol };
        }
        let (idx, _) = panels
            .iter()
            .enumerate()
            .fold((0, -1.0), |best, (i, p)| if p.3 > best.1 { (i, p.3) } else { best });
        let (a, b, _, _) = panels[idx];
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            return Estimate { value: total, error: err, converged: false };
        }
        let (v1, e1) = gk15(&mut f, a, m);
        let (v2, e2) = gk15(&mut f, m, b);
        panels[idx] = (a, m, v1, e1);
        panels.push((m, b, v2, e2));
    }
}

/// Tanh-sinh rule on [a, b]; tolerates integrable singularities at either end.
/// Points that round onto an endpoint are skipped.
pub fn tanh_sinh<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> Estimate<f64> {
    let h0 = 0.5 * (b - a);
    let half_pi = std::f64::consts::FRAC_PI_2;
    let mut eval = |t: f64| -> f64 {
        let s = half_pi * t.sinh();
        let ch = s.cosh();
        let w = half_pi * t.cosh() / (ch * ch);
        // distance from the nearer endpoint, computed without cancellation
        let d = h0 / (s.abs().exp() * ch);
        let x = if t < 0.0 { a + d } else { b - d };
        if w < 1e-300 || x <= a || x >= b {
            return 0.0;
        }
        let v = f(x);
        if v.is_finite() {
            v * w
        } else {
            0.0
        }
    };
    let tmax = 6.5;
    let mut h = 0.5;
    let mut sum = eval(0.0);
    let mut k = 1;
    while k as f64 * h <= tmax {
        sum += eval(k as f64 * h) + eval(-(k as f64) * h);
        k += 1;
    }
    let mut prev = sum * h * h0;
    let mut err = f64::INFINITY;
    for _ in 0..8 {
        h *= 0.5;
        let mut k = 1;
        while k as f64 * h <= tmax {
            sum += eval(k as f64 * h) + eval(-(k as f64) * h);
            k += 2;
        }
        let cur = sum * h * h0;
        err = (cur - prev).abs();
        if err <= tol * cur.abs().max(1e-300) {
            return Estimate { value: cur, error: err, converged: true };
        }
        prev = cur;
    }
    Estimate { value: prev, error: err, converged: false }
}

/// Wynn epsilon extrapolation of the limit of `s`. Returns (limit, error estimate).
pub fn wynn_epsilon(s: &[f64]) -> (f64, f64) {
    let n = s.len();
    if n < 3 {
        let last = *s.last().unwrap_or(&0.0);
        let err = if n == 2 { (s[1] - s[0]).abs() } else { f64::INFINITY };
        return (last, err);
    }
    // e[k] holds column k of the epsilon table evaluated along the last anti-diagonal
    let mut prev_col: Vec<f64> = s.to_vec();
    let mut prev_prev: Vec<f64> = vec![0.0; n + 1];
    let mut best = s[n - 1];
    let mut best_err = (s[n - 1] - s[n - 2]).abs();
    let mut col = 1;
    while prev_col.len() > 1 {
        let mut next = Vec::with_capacity(prev_col.len() - 1);
        for i in 0..prev_col.len() - 1 {
            let d = prev_col[i + 1] - prev_col[i];
            let base = if col == 1 { 0.0 } else { prev_prev[i + 1] };
            next.push(if d == 0.0 { f64::INFINITY } else { base + 1.0 / d });
        }
        if col % 2 == 0 && next.len() >= 2 {
            let a = next[next.len() - 1];
            let b = next[next.len() - 2];
            if a.is_finite() && b.is_finite() {
                let e = (a - b).abs();
                if e < best_err {
                    best = a;
                    best_err = e;
                }
            }
        }
        prev_prev = prev_col;
        prev_col = next;
        col += 1;
    }
    (best, best_err)
}

/// Panel end points over [a, b]: steps of at most `max_step`, refined
/// geometrically down to `min_step` around each focus point.
pub fn graded_breaks(a: f64, b: f64, focus: &[f64], max_step: f64, min_step: f64) -> Vec<f64> {
    let mut breaks = vec![a, b];
    for &p in focus {
        if p > a && p < b {
            breaks.push(p);
        }
    }
    // geometric layers around every focus/endpoint that is a singular candidate
    let mut extra = Vec::new();
    for &p in focus {
        if p < a || p > b {
            continue;
        }
        let mut d = min_step;
        while d < max_step {
            if p - d > a {
                extra.push(p - d);
            }
            if p + d < b {
                extra.push(p + d);
            }
            d *= 2.0;
        }
    }
    breaks.extend(extra);
    breaks.sort_by(|x, y| x.partial_cmp(y).unwrap());
    breaks.dedup_by(|x, y| (*x - *y).abs() <= 1e-12 * (1.0 + y.abs()));
    let mut refined = Vec::with_capacity(breaks.len() * 2);
    for w in breaks.windows(2) {
        let len = w[1] - w[0];
        let k = (len / max_step).ceil().max(1.0) as usize;
        for j in 0..k {
            refined.push(w[0] + len * j as f64 / k as f64);
        }
    }
    refined.push(b);
    refined
}

/// Gauss-Legendre panel mesh over [a, b] with geometric refinement towards
/// the listed focus points. Returns (node, weight) pairs in increasing order.
pub fn graded_mesh(a: f64, b: f64, focus: &[f64], max_step: f64, min_step: f64, rule: &GaussLegendre) -> Vec<(f64, f64)> {
    let refined = graded_breaks(a, b, focus, max_step, min_step);
    let mut out = Vec::with_capacity(refined.len() * rule.nodes.len());
    for w in refined.windows(2) {
        out.extend(rule.mapped(w[0], w[1]));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let g = GaussLegendre::new(10);
        let v: f64 = g.integrate(|x| x.powi(19) + x.powi(18), -1.0, 1.0);
        assert!((v - 2.0 / 19.0).abs() < 1e-14);
        let s: f64 = g.weights.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_handles_peaked_integrand() {
        let e = adaptive(|x: f64| 1.0 / (1e-4 + x * x), &[-1.0, 1.0], 1e-12, 1e-12, 2000);
        let exact = 2.0 / 1e-2 * (1.0f64 / 1e-2).atan();
        assert!(e.converged);
        assert!((e.value - exact).abs() < 1e-9 * exact);
    }

    #[test]
    fn tanh_sinh_log_singularity() {
        let e = tanh_sinh(|x: f64| -x.ln(), 0.0, 1.0, 1e-12);
        assert!((e.value - 1.0).abs() < 1e-10);
        let e = tanh_sinh(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, 1e-12);
        assert!((e.value - 2.0).abs() < 1e-9);
    }

    #[test]
    fn wynn_accelerates_alternating_series() {
        // ln 2 = 1 - 1/2 + 1/3 - ...
        let mut s = Vec::new();
        let mut acc = 0.0;
        for k in 1..=16 {
            acc += if k % 2 == 1 { 1.0 } else { -1.0 } / k as f64;
            s.push(acc);
        }
        let (l, e) = wynn_epsilon(&s);
        assert!((l - 2f64.ln()).abs() < 1e-9, "{l} {e}");
    }

    #[test]
    fn graded_mesh_integrates_smooth_function() {
        let g = GaussLegendre::new(8);
        let mesh = graded_mesh(0.0, 10.0, &[3.0], 0.5, 1e-3, &g);
        let v: f64 = mesh.iter().map(|(x, w)| w * x.cos()).sum();
        assert!((v - 10f64.sin()).abs() < 1e-12);
    }
}
