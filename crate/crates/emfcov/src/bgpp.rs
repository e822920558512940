//! Exposure and SINR of the typical user in a β-GPP network.
//!
//! Conditioning on the serving point (index i, squared distance u), the other
//! points are independent: point k is either not retained (1 - β), retained
//! beyond the serving distance, or retained closer than u, which is excluded.
//! With
//!
//! U_k(q, u) = 1 - β(F_k(u) - F_k(r_e²)) + β p_g ∫_u^τ² f_k(v) (Φ(q, v) - 1) dv,
//!
//! Φ(q, v) = (1 - jqP̄(v)/m)^-m, the CF of the exposure restricted to the event
//! "some point serves" is
//!
//! Ψ(q) = β ∫ Φ(q, u) Σ_{i<=N} f_i(u) Π_{k≠i} U_k(q, u) du.
//!
//! U_k(0, u) is the factor of Υ_i, so N only truncates the serving index; the
//! product runs over every index with mass inside τ.
//!
//! All u-integrals live on one panel grid in r = √u; the inner tails ∫_u^τ²
//! are suffix sums over whole panels plus a short Gauss rule from the outer
//! node to its panel end.

use crate::error::AnalyticsError;
use crate::inversion::{sine_transform, CharacteristicFunction, Probability, QuadratureConfig, WithDecay};
use crate::model::{BeamformingConfig, GeometryConfig, RadioConfig};
use crate::pointprocess::{bgpp_ln_pdf, BetaGppModel};
use crate::quad::{GaussLegendre, Quantity};
use crate::specfun::{bessel_i0_scaled, regularized_lower_gamma_real, regularized_upper_gamma_real};
use num_complex::Complex64;
use std::f64::consts::PI;

type C64 = Complex64;

const BAND_EPS: f64 = 1e-15;
const ROW_LOG_CUT: f64 = 42.0;

#[derive(Debug, Clone)]
struct Grid {
    /// panel edges in r
    edges: Vec<f64>,
    /// nodes as squared distances
    u: Vec<f64>,
    /// du weights
    w: Vec<f64>,
    order: usize,
}

impl Grid {
    fn new(r0: f64, r1: f64, h: f64, rule: &GaussLegendre) -> Grid {
        let n = ((r1 - r0) / h).ceil().max(1.0) as usize;
        let edges: Vec<f64> = (0..=n).map(|k| r0 + (r1 - r0) * k as f64 / n as f64).collect();
        let mut u = Vec::with_capacity(n * rule.nodes.len());
        let mut w = Vec::with_capacity(n * rule.nodes.len());
        for p in 0..n {
            for (r, wr) in rule.mapped(edges[p], edges[p + 1]) {
                u.push(r * r);
                w.push(2.0 * r * wr);
            }
        }
        Grid { edges, u, w, order: rule.nodes.len() }
    }

    fn panels(&self) -> usize {
        self.edges.len() - 1
    }

    fn panel_of_node(&self, l: usize) -> usize {
        l / self.order
    }
}

#[derive(Debug, Clone)]
struct Row {
    first: usize,
    fw: Vec<f64>,
}

#[derive(Debug, Clone)]
struct OuterNode {
    u: f64,
    w: f64,
    panel: usize,
    sub_u: Vec<f64>,
    sub_w: Vec<f64>,
    /// band of indices (1-based, inclusive) whose mass straddles u
    k_lo: usize,
    k_hi: usize,
    /// f_k(sub node) * sub weight, band-major
    sub_fw: Vec<f64>,
    /// 1 - β(F_k(u) - F_k(u_e)) on the band
    keep_band: Vec<f64>,
    /// Σ ln keep_k(u) over k < k_lo
    ln_keep_below: f64,
    /// ln β f_i(u) for i <= N (ln c - c(u - u_e) for the PPP)
    ln_serv: Vec<f64>,
    /// keep_i(u) for i <= N
    keep_serv: Vec<f64>,
    /// β f_i(u) for i <= N
    serv: Vec<f64>,
}

/// Tables shared by every metric of one (model, geometry) pair.
#[derive(Debug, Clone)]
pub struct BgppKernel {
    model: BetaGppModel,
    geom: GeometryConfig,
    k_max: usize,
    n_serv: usize,
    grid: Grid,
    rows: Vec<Row>,
    outer: Vec<OuterNode>,
    band_max: usize,
    sub_rule: GaussLegendre,
}

/// Grid resolution: panel width in r (m) and Gauss order per panel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelResolution {
    pub panel_width: Option<f64>,
    pub order: usize,
}

impl Default for KernelResolution {
    fn default() -> Self {
        KernelResolution { panel_width: None, order: 8 }
    }
}

impl BgppKernel {
    pub fn new(model: &BetaGppModel, geom: &GeometryConfig) -> Result<Self, AnalyticsError> {
        Self::with_resolution(model, geom, KernelResolution::default())
    }

    pub fn with_resolution(model: &BetaGppModel, geom: &GeometryConfig, res: KernelResolution) -> Result<Self, AnalyticsError> {
        model.validate()?;
        geom.validate()?;
        if res.order < 2 {
            return Err(AnalyticsError::Invalid("grid order must be >= 2".into()));
        }
        let rule = GaussLegendre::new(res.order);
        let (u_e, u_t) = (geom.r_e * geom.r_e, geom.tau * geom.tau);
        if model.is_poisson() {
            let c = model.c();
            let h = res.panel_width.unwrap_or((geom.tau / 150.0).min(0.5 / c.sqrt()).min(40.0));
            let grid = Grid::new(geom.r_e, geom.tau, h, &rule);
            // the serving distance has density c e^{-c(u-u_e)}; nothing beyond c(u-u_e) = 45 matters
            let u_hi = (u_e + 45.0 / c).min(u_t);
            let mut outer = Vec::new();
            for l in 0..grid.u.len() {
                let p = grid.panel_of_node(l);
                if grid.edges[p] * grid.edges[p] > u_hi {
                    break;
                }
                let (sub_u, sub_w) = sub_rule(&rule, grid.u[l].sqrt(), grid.edges[p + 1]);
                outer.push(OuterNode {
                    u: grid.u[l],
                    w: grid.w[l],
                    panel: p,
                    sub_u,
                    sub_w,
                    k_lo: 1,
                    k_hi: 0,
                    sub_fw: Vec::new(),
                    keep_band: Vec::new(),
                    ln_keep_below: 0.0,
                    ln_serv: vec![c.ln() - c * (grid.u[l] - u_e)],
                    keep_serv: vec![1.0],
                    serv: vec![(c.ln() - c * (grid.u[l] - u_e)).exp()],
                });
            }
            return Ok(BgppKernel {
                model: *model,
                geom: *geom,
                k_max: 0,
                n_serv: 1,
                grid,
                rows: Vec::new(),
                outer,
                band_max: 0,
                sub_rule: rule,
            });
        }

        let rate = model.rate();
        let beta = model.beta;
        if rate * u_t > 2e5 {
            return Err(AnalyticsError::Invalid(format!("β = {beta} leaves too many indices inside τ; treat it as β = 0")));
        }
        let k_max = model.index_cutoff(u_t, 1e-13);
        let n_serv = model.n_trunc.min(k_max);
        // squared moduli have sd 1/(2√rate) in r for every index
        let h = res.panel_width.unwrap_or((0.5 / rate.sqrt()).min(40.0).min(geom.tau / 40.0));
        let grid = Grid::new(geom.r_e, geom.tau, h, &rule);

        let mut rows = Vec::with_capacity(k_max);
        for k in 1..=k_max {
            let peak = bgpp_ln_pdf(k, ((k as f64 - 1.0) / rate).clamp(u_e, u_t).max(1e-300), model);
            let mut first = usize::MAX;
            let mut fw = Vec::new();
            for (l, (&u, &w)) in grid.u.iter().zip(&grid.w).enumerate() {
                let lf = bgpp_ln_pdf(k, u, model);
                if lf > peak - ROW_LOG_CUT {
                    if first == usize::MAX {
                        first = l;
                    }
                    // keep the row contiguous
                    fw.resize(l - first, 0.0);
                    fw.push(lf.exp() * w);
                }
            }
            if first == usize::MAX {
                first = 0;
            }
            rows.push(Row { first, fw });
        }

        let keep = |k: usize, u: f64| -> f64 {
            // 1 - β(F_k(u) - F_k(u_e)) without cancellation when F_k(u) → 1
            let upper = regularized_upper_gamma_real(k as u32, rate * u);
            let below = if u_e > 0.0 { regularized_lower_gamma_real(k as u32, rate * u_e) } else { 0.0 };
            (1.0 - beta) + beta * (upper + below)
        };

        // serving range: beyond it every f_i, i <= N, is negligible
        let x_hi = gamma_upper_quantile(n_serv as u32, BAND_EPS * 1e-3);
        let u_srv = (x_hi / rate).min(u_t);
        let mut outer = Vec::new();
        let mut band_max = 0;
        for l in 0..grid.u.len() {
            let p = grid.panel_of_node(l);
            if grid.edges[p] * grid.edges[p] > u_srv {
                break;
            }
            let u = grid.u[l];
            let x = rate * u;
            // k_lo: first index with non-negligible mass above u; k_hi: last with mass below u
            let mut k_lo = 1;
            while k_lo < k_max && regularized_upper_gamma_real(k_lo as u32, x) < BAND_EPS {
                k_lo += 1;
            }
            let mut k_hi = k_lo.max(x.ceil() as usize).min(k_max);
            while k_hi < k_max && regularized_lower_gamma_real(k_hi as u32 + 1, x) >= BAND_EPS {
                k_hi += 1;
            }
            band_max = band_max.max(k_hi);
            let (sub_u, sub_w) = sub_rule(&rule, u.sqrt(), grid.edges[p + 1]);
            let mut sub_fw = Vec::with_capacity((k_hi + 1 - k_lo) * sub_u.len());
            let mut keep_band = Vec::with_capacity(k_hi + 1 - k_lo);
            for k in k_lo..=k_hi {
                for (&su, &sw) in sub_u.iter().zip(&sub_w) {
                    sub_fw.push(bgpp_ln_pdf(k, su, model).exp() * sw);
                }
                keep_band.push(keep(k, u));
            }
            let ln_keep_below = (1..k_lo).map(|k| keep(k, u).ln()).sum();
            let ln_serv: Vec<f64> = (1..=n_serv).map(|i| beta.ln() + bgpp_ln_pdf(i, u, model)).collect();
            let serv = ln_serv.iter().map(|l| l.exp()).collect();
            let keep_serv = (1..=n_serv).map(|i| keep(i, u)).collect();
            outer.push(OuterNode {
                u,
                w: grid.w[l],
                panel: p,
                sub_u,
                sub_w,
                k_lo,
                k_hi,
                sub_fw,
                keep_band,
                ln_keep_below,
                ln_serv,
                keep_serv,
                serv,
            });
        }
        Ok(BgppKernel { model: *model, geom: *geom, k_max, n_serv, grid, rows, outer, band_max, sub_rule: rule })
    }

    pub fn model(&self) -> &BetaGppModel {
        &self.model
    }

    pub fn geometry(&self) -> &GeometryConfig {
        &self.geom
    }

    /// Number of point indices whose mass reaches inside τ.
    pub fn index_count(&self) -> usize {
        self.k_max
    }

    pub fn serving_terms(&self) -> usize {
        self.n_serv
    }

    /// Outer quadrature nodes (u, du-weight) used by every metric.
    pub fn outer_nodes(&self) -> Vec<(f64, f64)> {
        self.outer.iter().map(|o| (o.u, o.w)).collect()
    }

    fn rate(&self) -> f64 {
        self.model.rate()
    }

    /// F_k(u) - F_k(u_e) as seen by the blocking factor.
    fn blocked_mass(&self, k: usize, u: f64) -> f64 {
        let rate = self.rate();
        let u_e = self.geom.r_e * self.geom.r_e;
        let lo = if u_e > 0.0 { regularized_lower_gamma_real(k as u32, rate * u_e) } else { 0.0 };
        (1.0 - regularized_upper_gamma_real(k as u32, rate * u)) - lo
    }

    /// Υ_i(u) = Π_{j≠i} (1 - β(F_j(u) - F_j(r_e²))): probability that no other
    /// retained point lies in the annulus below u.
    pub fn upsilon(&self, i: usize, u: f64) -> f64 {
        if self.model.is_poisson() {
            return 1.0;
        }
        let beta = self.model.beta;
        let mut ln = 0.0;
        for j in 1..=self.k_max.max(i) {
            if j == i {
                continue;
            }
            let f = self.blocked_mass(j, u);
            if f < 1e-18 && j as f64 > self.rate() * u {
                break;
            }
            ln += (-beta * f).ln_1p();
        }
        ln.exp()
    }

    /// Ω(u) = Σ_{i<=N} f_i(u) Υ_i(u).
    pub fn omega(&self, u: f64) -> f64 {
        (1..=self.n_serv).map(|i| self.f(i, u) * self.upsilon(i, u)).sum()
    }

    /// Ω*(u, v) = Σ_{i<=N} f_i(u) f_i(v) Υ_i(u).
    pub fn omega_star(&self, u: f64, v: f64) -> f64 {
        (1..=self.n_serv).map(|i| self.f(i, u) * self.f(i, v) * self.upsilon(i, u)).sum()
    }

    /// Ω**(u, v, w) = Σ_{i<=N} f_i(u) f_i(v) f_i(w) Υ_i(u).
    pub fn omega_star2(&self, u: f64, v: f64, w: f64) -> f64 {
        (1..=self.n_serv).map(|i| self.f(i, u) * self.f(i, v) * self.f(i, w) * self.upsilon(i, u)).sum()
    }

    fn f(&self, i: usize, u: f64) -> f64 {
        bgpp_ln_pdf(i, u, &self.model).exp()
    }

    /// Probability that the annulus holds no retained point.
    pub fn empty_probability(&self) -> f64 {
        let u_t = self.geom.tau * self.geom.tau;
        if self.model.is_poisson() {
            let u_e = self.geom.r_e * self.geom.r_e;
            return (-self.model.c() * (u_t - u_e)).exp();
        }
        let beta = self.model.beta;
        (1..=self.k_max).map(|k| (-beta * self.blocked_mass(k, u_t)).ln_1p()).sum::<f64>().exp()
    }

    /// Values of `h` at grid nodes and at every outer node's sub-rule nodes.
    fn sample<T, H: FnMut(f64) -> T>(&self, mut h: H) -> (Vec<T>, Vec<T>) {
        let g = self.grid.u.iter().map(|&u| h(u)).collect();
        let s = self.outer.iter().flat_map(|o| o.sub_u.iter()).map(|&u| h(u)).collect::<Vec<_>>();
        (g, s)
    }

    /// Per-index totals ∫ f_k h and per-panel suffix sums for the band indices.
    fn tails<T: Quantity>(&self, hg: &[T]) -> Tails<T> {
        let np = self.grid.panels();
        let order = self.grid.order;
        let mut total = Vec::with_capacity(self.k_max);
        let mut suffix_off = Vec::with_capacity(self.band_max);
        let mut suffix = Vec::new();
        for (idx, row) in self.rows.iter().enumerate() {
            let k = idx + 1;
            if k <= self.band_max {
                // panel sums inside the row, then suffix sums
                let p0 = row.first / order;
                let p1 = (row.first + row.fw.len()).div_ceil(order).min(np);
                let start = suffix.len();
                suffix.resize(start + (p1 - p0) + 1, T::zero());
                for (o, &fw) in row.fw.iter().enumerate() {
                    let l = row.first + o;
                    let p = l / order - p0;
                    suffix[start + p] = suffix[start + p] + hg[l] * fw;
                }
                for p in (0..(p1 - p0)).rev() {
                    suffix[start + p] = suffix[start + p] + suffix[start + p + 1];
                }
                total.push(suffix[start]);
                suffix_off.push((p0, p1, start));
            } else {
                let mut acc = T::zero();
                for (o, &fw) in row.fw.iter().enumerate() {
                    acc = acc + hg[row.first + o] * fw;
                }
                total.push(acc);
            }
        }
        Tails { total, suffix, suffix_off }
    }

    /// ∫_{u_j}^{τ²} f_k h for the outer node j.
    fn tail_at<T: Quantity>(&self, tab: &Tails<T>, hs: &[T], j: usize, k: usize) -> T {
        let o = &self.outer[j];
        if k < o.k_lo {
            return T::zero();
        }
        if k > o.k_hi {
            return tab.total[k - 1];
        }
        let (p0, p1, start) = tab.suffix_off[k - 1];
        let next = o.panel + 1;
        let mut acc = if next <= p0 {
            tab.total[k - 1]
        } else if next >= p1 {
            T::zero()
        } else {
            tab.suffix[start + next - p0]
        };
        let ns = o.sub_u.len();
        let fw = &o.sub_fw[(k - o.k_lo) * ns..(k - o.k_lo + 1) * ns];
        let h = &hs[j * ns..(j + 1) * ns];
        for s in 0..ns {
            acc = acc + h[s] * fw[s];
        }
        acc
    }

    /// ∫_{u_j}^{τ²} h (unit density) for every outer node j.
    fn unit_tails<T: Quantity>(&self, hg: &[T], hs: &[T]) -> Vec<T> {
        let np = self.grid.panels();
        let order = self.grid.order;
        let mut suffix = vec![T::zero(); np + 1];
        for p in (0..np).rev() {
            let mut acc = T::zero();
            for l in p * order..(p + 1) * order {
                acc = acc + hg[l] * self.grid.w[l];
            }
            suffix[p] = suffix[p + 1] + acc;
        }
        self.outer
            .iter()
            .enumerate()
            .map(|(j, o)| {
                let ns = o.sub_u.len();
                let mut acc = suffix[o.panel + 1];
                for s in 0..ns {
                    acc = acc + hs[j * ns + s] * o.sub_w[s];
                }
                acc
            })
            .collect()
    }

    /// B_j = Σ_{i<=N} β f_i(u_j) Π_{k≠i} U_k(q, u_j), with `g` = Φ(q, ·) - 1
    /// sampled on the grid and sub-rules and `s` = β p_g.
    fn serving_products(&self, gg: &[C64], gs: &[C64], p_g: f64) -> Vec<C64> {
        if self.model.is_poisson() {
            let c = self.model.c();
            let w = self.unit_tails(gg, gs);
            return self.outer.iter().zip(w).map(|(o, w)| (C64::from(o.ln_serv[0]) + w * (c * p_g)).exp()).collect();
        }
        let s = self.model.beta * p_g;
        let tab = self.tails(gg);
        let one = C64::new(1.0, 0.0);
        // U_k for the indices entirely beyond u, and their suffix products
        let u_far: Vec<C64> = tab.total.iter().map(|&g| one + g * s).collect();
        let mut hi = vec![ScaledProduct::ONE; self.k_max + 2];
        for k in (1..=self.k_max).rev() {
            hi[k] = hi[k + 1].times(u_far[k - 1]);
        }
        let mut out = Vec::with_capacity(self.outer.len());
        let mut band = Vec::new();
        for (j, o) in self.outer.iter().enumerate() {
            band.clear();
            let mut prod = hi[o.k_hi + 1];
            prod.ln_scale += o.ln_keep_below;
            for k in o.k_lo..=o.k_hi {
                let uk = C64::from(o.keep_band[k - o.k_lo]) + self.tail_at(&tab, gs, j, k) * s;
                band.push(uk);
                prod = prod.times(uk);
            }
            let u_i = |i: usize| -> C64 {
                if i < o.k_lo {
                    C64::from(o.keep_serv[i - 1])
                } else if i > o.k_hi {
                    u_far[i - 1]
                } else {
                    band[i - o.k_lo]
                }
            };
            let b = if prod.ln_scale > -600.0 && prod.m.norm_sqr() > 0.0 {
                // Π_k U_k Σ_i β f_i / U_i
                let mut acc = C64::new(0.0, 0.0);
                for i in 1..=self.n_serv {
                    let fi = o.serv[i - 1];
                    if fi > 0.0 {
                        acc += fi / u_i(i);
                    }
                }
                prod.m * prod.ln_scale.exp() * acc
            } else {
                // the full product underflows: stay in the log domain per term
                let l = C64::new(prod.ln_scale, 0.0) + prod.m.ln();
                (1..=self.n_serv).map(|i| (C64::from(o.ln_serv[i - 1]) + l - u_i(i).ln()).exp()).sum()
            };
            out.push(b);
        }
        out
    }
}

/// Complex product kept as m·e^{ln_scale} with |m| near 1.
#[derive(Debug, Clone, Copy)]
struct ScaledProduct {
    m: C64,
    ln_scale: f64,
}

impl ScaledProduct {
    const ONE: ScaledProduct = ScaledProduct { m: C64::new(1.0, 0.0), ln_scale: 0.0 };

    fn times(self, z: C64) -> Self {
        let m = self.m * z;
        let n = m.norm_sqr();
        if (1e-100..=1e100).contains(&n) || n == 0.0 {
            ScaledProduct { m, ln_scale: self.ln_scale }
        } else {
            ScaledProduct { m: m / n.sqrt(), ln_scale: self.ln_scale + 0.5 * n.ln() }
        }
    }
}

#[derive(Debug, Clone)]
struct Tails<T> {
    total: Vec<T>,
    suffix: Vec<T>,
    suffix_off: Vec<(usize, usize, usize)>,
}

fn sub_rule(rule: &GaussLegendre, r0: f64, r1: f64) -> (Vec<f64>, Vec<f64>) {
    rule.mapped(r0, r1).map(|(r, w)| (r * r, 2.0 * r * w)).unzip()
}

/// x with Q(m, x) = p (upper tail), by bisection.
fn gamma_upper_quantile(m: u32, p: f64) -> f64 {
    let mut hi = m as f64 + 10.0;
    while regularized_upper_gamma_real(m, hi) > p {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if regularized_upper_gamma_real(m, mid) > p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-10 * hi {
            break;
        }
    }
    hi
}

/// Serving-fading CF (1 - jqP̄/m)^-m.
pub fn fading_cf(q: f64, pbar: f64, m: u32) -> C64 {
    C64::new(1.0, -q * pbar / m as f64).powi(-(m as i32))
}

fn e_m(m: u32, z: C64) -> C64 {
    let mut term = C64::new(1.0, 0.0);
    let mut sum = term;
    for k in 1..m {
        term = term * z / k as f64;
        sum += term;
    }
    sum
}

/// Components of ζ for the joint law: ζ(q) = ζ₀(q) + e^{-jq b_max} ζ_b(q), with
/// ζ(q) = E[e^{-jq b(S)}; b(S) > 0], b(s) = min(s/T - σ², T' - s), S = P̄|h|².
pub fn zeta_components(q: f64, t: f64, t_prime: f64, sigma2: f64, pbar: f64, m: u32) -> (C64, C64) {
    let mf = m as f64;
    let t2 = t * (t_prime + sigma2) / (1.0 + t);
    let (x0, x1, xt) = (t * sigma2 / pbar, t2 / pbar, t_prime / pbar);
    let c1 = C64::new(mf, q * pbar / t);
    let c2 = C64::new(mf, -q * pbar);
    let mm = mf.powi(m as i32);
    let piece = |x: f64, c: C64| -> C64 {
        if x == 0.0 {
            return c.powi(-(m as i32));
        }
        let ex = (-mf * x).exp();
        if ex == 0.0 {
            return C64::new(0.0, 0.0);
        }
        e_m(m, c * x) * ex / c.powi(m as i32)
    };
    let z0 = (piece(x0, c1) - piece(xt, c2)) * mm;
    let zb = (piece(x1, c2) - piece(x1, c1)) * mm;
    (z0, zb)
}

/// b_max = (T' - Tσ²)/(1 + T), the largest exposure margin compatible with SINR > T.
pub fn joint_margin(t: f64, t_prime: f64, sigma2: f64) -> f64 {
    (t_prime - t * sigma2) / (1.0 + t)
}

/// (FLB, FUB) = (max(0, a + b - 1), min(a, b)).
pub fn frechet_bounds(f_cov: f64, f_emf: f64) -> Result<(f64, f64), AnalyticsError> {
    if !(0.0..=1.0).contains(&f_cov) || !(0.0..=1.0).contains(&f_emf) {
        return Err(AnalyticsError::Invalid("Fréchet bounds need probabilities".into()));
    }
    Ok(((f_cov + f_emf - 1.0).max(0.0), f_cov.min(f_emf)))
}

/// A β-GPP kernel bound to radio and beamforming settings.
#[derive(Debug, Clone)]
pub struct BgppStudy {
    kernel: BgppKernel,
    radio: RadioConfig,
    bf: BeamformingConfig,
    pbar_grid: Vec<f64>,
    pbar_sub: Vec<f64>,
    quad: QuadratureConfig,
}

impl BgppStudy {
    pub fn new(model: &BetaGppModel, geom: &GeometryConfig, radio: &RadioConfig, bf: &BeamformingConfig) -> Result<Self, AnalyticsError> {
        Self::from_kernel(BgppKernel::new(model, geom)?, radio, bf)
    }

    pub fn from_kernel(kernel: BgppKernel, radio: &RadioConfig, bf: &BeamformingConfig) -> Result<Self, AnalyticsError> {
        radio.validate()?;
        bf.validate()?;
        let (pbar_grid, pbar_sub) = kernel.sample(|u| radio.mean_rx_power_sq(u));
        Ok(BgppStudy { kernel, radio: *radio, bf: *bf, pbar_grid, pbar_sub, quad: QuadratureConfig::with_tol(1e-6) })
    }

    pub fn with_quadrature(mut self, quad: QuadratureConfig) -> Self {
        self.quad = quad;
        self
    }

    pub fn kernel(&self) -> &BgppKernel {
        &self.kernel
    }

    pub fn radio(&self) -> &RadioConfig {
        &self.radio
    }

    fn p_g(&self) -> f64 {
        self.bf.p_g
    }

    /// B_j(q) for every outer node.
    fn products(&self, q: f64) -> Vec<C64> {
        let m = self.radio.m;
        let one = C64::new(1.0, 0.0);
        let gg: Vec<C64> = self.pbar_grid.iter().map(|&p| fading_cf(q, p, m) - one).collect();
        let gs: Vec<C64> = self.pbar_sub.iter().map(|&p| fading_cf(q, p, m) - one).collect();
        self.kernel.serving_products(&gg, &gs, self.p_g())
    }

    fn serving_pbar(&self) -> impl Iterator<Item = f64> + '_ {
        self.kernel.outer.iter().map(|o| self.radio.mean_rx_power_sq(o.u))
    }

    /// Ψ_E(q): CF of the exposure on the event that some BS serves.
    pub fn exposure_cf(&self, q: f64) -> C64 {
        let b = self.products(q);
        self.serving_pbar()
            .zip(&b)
            .zip(&self.kernel.outer)
            .map(|((p, &b), o)| fading_cf(q, p, self.radio.m) * b * o.w)
            .sum()
    }

    /// Ψ_Y(q) = E[e^{jq(S - tI)}; some BS serves].
    pub fn sinr_cf(&self, q: f64, t: f64) -> C64 {
        let b = self.products(t * q);
        self.serving_pbar()
            .zip(&b)
            .zip(&self.kernel.outer)
            .map(|((p, &b), o)| fading_cf(q, p, self.radio.m) * b.conj() * o.w)
            .sum()
    }

    /// Probability that some BS serves (Ψ(0)).
    pub fn serving_mass(&self) -> f64 {
        self.exposure_cf(0.0).re
    }

    /// Conditional CF of the interference given serving index i at u:
    /// Π_{k≠i} U_k(q, u) / U_k(0, u), evaluated directly (slow, any u).
    pub fn cf_interference(&self, i: usize, u: f64, q: f64) -> Result<C64, AnalyticsError> {
        let (u_e, u_t) = (self.kernel.geom.r_e.powi(2), self.kernel.geom.tau.powi(2));
        if !(u >= u_e && u <= u_t) {
            return Err(AnalyticsError::Invalid(format!("u = {u} outside [r_e², τ²]")));
        }
        let m = self.radio.m;
        let g = |v: f64| fading_cf(q, self.radio.mean_rx_power_sq(v), m) - 1.0;
        let rule = GaussLegendre::new(12);
        let p_g = self.p_g();
        if self.kernel.model.is_poisson() {
            let c = self.kernel.model.c();
            let w = panel_integral(&rule, u.sqrt(), self.kernel.geom.tau, 20.0, |v| g(v));
            return Ok((w * (c * p_g)).exp());
        }
        let beta = self.kernel.model.beta;
        let rate = self.kernel.rate();
        let mut ln = C64::new(0.0, 0.0);
        for k in 1..=self.kernel.k_max {
            if k == i {
                continue;
            }
            // integrate f_k (Φ - 1) over its support inside [u, τ²]
            let mean = k as f64 / rate;
            let sd = (k as f64).sqrt() / rate;
            let lo = (mean - 12.0 * sd).max(u);
            let hi = (mean + 12.0 * sd).min(u_t);
            if hi <= lo {
                continue;
            }
            let w = panel_integral(&rule, lo.sqrt(), hi.sqrt(), 10.0, |v| g(v) * self.kernel.f(k, v));
            let keep = 1.0 - beta * self.kernel.blocked_mass(k, u);
            ln += (C64::from(keep) + w * (beta * p_g)).ln() - keep.ln();
        }
        Ok(ln.exp())
    }

    /// CDF of the exposure (received power, W) at `t_prime`.
    pub fn cdf_exposure(&self, t_prime: f64) -> Result<Probability, AnalyticsError> {
        if !(t_prime > 0.0) {
            return Err(AnalyticsError::Invalid("exposure threshold must be positive".into()));
        }
        let psi = WithDecay { f: |q: f64| self.exposure_cf(q / t_prime), order: self.radio.m as f64 };
        let s = sine_transform(&psi, 1.0, &self.quad)?;
        let mass = self.serving_mass();
        let v = self.kernel.empty_probability() + 0.5 * mass - s.value / PI;
        Ok(Probability { value: v.clamp(0.0, 1.0), error: s.error / PI })
    }

    /// P[SINR > t] with noise power sigma2 (W).
    pub fn ccdf_sinr(&self, t: f64, sigma2: f64) -> Result<Probability, AnalyticsError> {
        if !(t > 0.0) || !(sigma2 >= 0.0) {
            return Err(AnalyticsError::Invalid("need t > 0 and σ² >= 0".into()));
        }
        let scale = if sigma2 > 0.0 { t * sigma2 } else { self.typical_power() };
        let psi = WithDecay { f: |q: f64| self.sinr_cf(q / scale, t), order: self.radio.m as f64 };
        let s = sine_transform(&psi, t * sigma2 / scale, &self.quad)?;
        let mass = self.serving_mass();
        Ok(Probability { value: (0.5 * mass + s.value / PI).clamp(0.0, 1.0), error: s.error / PI })
    }

    fn typical_power(&self) -> f64 {
        let u = if self.kernel.model.is_poisson() { 1.0 / self.kernel.model.c() } else { self.kernel.model.beta / self.kernel.model.c() };
        self.radio.mean_rx_power_sq(u + self.kernel.geom.r_e.powi(2))
    }

    /// Joint law P[SINR > t, 𝒫 <= t_prime].
    pub fn joint_cdf(&self, t: f64, t_prime: f64, sigma2: f64) -> Result<Probability, AnalyticsError> {
        if !(t > 0.0) || !(t_prime > 0.0) || !(sigma2 >= 0.0) {
            return Err(AnalyticsError::Invalid("need t > 0, t' > 0 and σ² >= 0".into()));
        }
        let b_max = joint_margin(t, t_prime, sigma2);
        if b_max <= 0.0 {
            return Ok(Probability { value: 0.0, error: 0.0 });
        }
        let m = self.radio.m;
        let comp = |q: f64, which: usize| -> C64 {
            let b = self.products(q);
            self.serving_pbar()
                .zip(&b)
                .zip(&self.kernel.outer)
                .map(|((p, &b), o)| {
                    let z = zeta_components(q, t, t_prime, sigma2, p, m);
                    (if which == 0 { z.0 } else { z.1 }) * b * o.w
                })
                .sum()
        };
        let scale = t_prime;
        let psi0 = WithDecay { f: |q: f64| comp(q / scale, 0), order: 1.0 };
        let psib = WithDecay { f: |q: f64| comp(q / scale, 1), order: 1.0 };
        let s0 = sine_transform(&psi0, 0.0, &self.quad)?;
        let sb = sine_transform(&psib, b_max / scale, &self.quad)?;
        let mass = psi0.eval(0.0).re;
        let v = 0.5 * mass - (s0.value + sb.value) / PI;
        Ok(Probability { value: v.clamp(0.0, 1.0), error: (s0.error + sb.error) / PI })
    }

    /// Mean exposure (W), with the interference term of the serving-index decomposition.
    pub fn mean_exposure(&self) -> f64 {
        let k = &self.kernel;
        let c = k.model.c();
        let p_g = self.p_g();
        let b1 = self.b1_at_outer();
        if k.model.is_poisson() {
            return k
                .outer
                .iter()
                .zip(&b1)
                .map(|(o, &b1)| o.w * o.ln_serv[0].exp() * (self.radio.mean_rx_power_sq(o.u) + p_g * c * b1))
                .sum();
        }
        let beta = k.model.beta;
        let (hg, hs) = (&self.pbar_grid, &self.pbar_sub);
        let tab = k.tails(hg);
        let ups = self.upsilon_at_outer();
        let mut total = 0.0;
        for (j, o) in k.outer.iter().enumerate() {
            let pbar = self.radio.mean_rx_power_sq(o.u);
            let mut acc = 0.0;
            for i in 1..=k.n_serv {
                let w = o.ln_serv[i - 1].exp() * ups[j][i - 1];
                if w == 0.0 {
                    continue;
                }
                let a1 = k.tail_at(&tab, hs, j, i);
                acc += w * (pbar + p_g * c * b1[j] - beta * p_g * a1);
            }
            total += o.w * acc;
        }
        total
    }

    /// Second moment of the exposure (W²).
    pub fn second_moment_exposure(&self) -> f64 {
        let k = &self.kernel;
        let c = k.model.c();
        let p_g = self.p_g();
        let mf = self.radio.m as f64;
        let fade2 = (mf + 1.0) / mf;
        let b1 = self.b1_at_outer();
        let b2 = self.b2_at_outer();
        if k.model.is_poisson() {
            return k
                .outer
                .iter()
                .enumerate()
                .map(|(j, o)| {
                    let p = self.radio.mean_rx_power_sq(o.u);
                    let i1 = p_g * c * b1[j];
                    o.w * o.ln_serv[0].exp() * (fade2 * p * p + 2.0 * p * i1 + fade2 * p_g * c * b2[j] + i1 * i1)
                })
                .sum();
        }
        let beta = k.model.beta;
        let d = self.pair_kernel_at_outer();
        let tab1 = k.tails(&self.pbar_grid);
        let sq_g: Vec<f64> = self.pbar_grid.iter().map(|p| p * p).collect();
        let sq_s: Vec<f64> = self.pbar_sub.iter().map(|p| p * p).collect();
        let tab2 = k.tails(&sq_g);
        let ups = self.upsilon_at_outer();
        let mut total = 0.0;
        for (j, o) in k.outer.iter().enumerate() {
            let p = self.radio.mean_rx_power_sq(o.u);
            let mut acc = 0.0;
            for i in 1..=k.n_serv {
                let w = o.ln_serv[i - 1].exp() * ups[j][i - 1];
                if w == 0.0 {
                    continue;
                }
                let a1 = k.tail_at(&tab1, &self.pbar_sub, j, i);
                let a2 = k.tail_at(&tab2, &sq_s, j, i);
                let mean_i = c * b1[j] - beta * a1;
                let bracket = fade2 * p * p
                    + 2.0 * p_g * p * mean_i
                    + fade2 * p_g * (c * b2[j] - beta * a2)
                    + p_g * p_g * (mean_i * mean_i - c * c * d[j] + beta * beta * a1 * a1);
                acc += w * bracket;
            }
            total += o.w * acc;
        }
        total
    }

    pub fn variance_exposure(&self) -> f64 {
        let m = self.mean_exposure();
        self.second_moment_exposure() - m * m
    }

    /// Mean without dynamic beamforming: c ∫ P̄ over the annulus (β-free).
    pub fn mean_exposure_nobf(&self) -> f64 {
        let g = &self.kernel.geom;
        self.kernel.model.c() * self.b1(g.r_e * g.r_e)
    }

    /// Second moment without dynamic beamforming.
    pub fn second_moment_nobf(&self) -> f64 {
        let g = &self.kernel.geom;
        let c = self.kernel.model.c();
        let mf = self.radio.m as f64;
        let u_e = g.r_e * g.r_e;
        let b1 = self.b1(u_e);
        let mut v = (mf + 1.0) / mf * c * self.b2(u_e) + (c * b1).powi(2);
        if !self.kernel.model.is_poisson() {
            v -= c * c * self.pair_kernel_total();
        }
        v
    }

    /// ∫_u^τ² P̄ = 2/(α-2) [P̄(v)(v + z²)] from τ² to u.
    fn b1(&self, u: f64) -> f64 {
        let a = self.radio.alpha;
        let z2 = self.radio.z * self.radio.z;
        let ut = self.kernel.geom.tau.powi(2);
        2.0 / (a - 2.0) * (self.radio.mean_rx_power_sq(u) * (u + z2) - self.radio.mean_rx_power_sq(ut) * (ut + z2))
    }

    /// ∫_u^τ² P̄² = 1/(α-1) [P̄²(v)(v + z²)] from τ² to u.
    fn b2(&self, u: f64) -> f64 {
        let a = self.radio.alpha;
        let z2 = self.radio.z * self.radio.z;
        let ut = self.kernel.geom.tau.powi(2);
        let p = |v: f64| self.radio.mean_rx_power_sq(v);
        1.0 / (a - 1.0) * (p(u).powi(2) * (u + z2) - p(ut).powi(2) * (ut + z2))
    }

    fn b1_at_outer(&self) -> Vec<f64> {
        self.kernel.outer.iter().map(|o| self.b1(o.u)).collect()
    }

    fn b2_at_outer(&self) -> Vec<f64> {
        self.kernel.outer.iter().map(|o| self.b2(o.u)).collect()
    }

    /// Υ_i(u_j) for i <= N at every outer node.
    fn upsilon_at_outer(&self) -> Vec<Vec<f64>> {
        let k = &self.kernel;
        k.outer
            .iter()
            .map(|o| {
                let ln_band: f64 = o.keep_band.iter().map(|x| x.ln()).sum();
                let total = o.ln_keep_below + ln_band;
                o.keep_serv.iter().map(|&ki| (total - ki.ln()).exp()).collect()
            })
            .collect()
    }

    /// H(v) = ∫_v^τ² e^{-ρ(√v-√w)²} I0s(2ρ√(vw)) P̄(w) dw, the diagonal kernel
    /// Σ_k f_k(v) f_k(w) / ρ² folded against P̄.
    fn pair_h(&self, v: f64) -> f64 {
        let rate = self.kernel.rate();
        let tau = self.kernel.geom.tau;
        let rv = v.sqrt();
        let reach = (rv + (45.0 / rate).sqrt()).min(tau);
        if reach <= rv {
            return 0.0;
        }
        let h = (0.25 / rate.sqrt()).max(1.0);
        panel_integral(&self.kernel.sub_rule, rv, reach, h, |w: f64| {
            let rw = w.sqrt();
            (-rate * (rv - rw).powi(2)).exp() * bessel_i0_scaled(2.0 * rate * rv * rw) * self.radio.mean_rx_power_sq(w)
        })
    }

    /// D(u_j) = ∫∫_{[u_j, τ²]²} kernel · P̄ P̄ = 2 ∫_{u_j} P̄ H.
    fn pair_kernel_at_outer(&self) -> Vec<f64> {
        let (hg, hs) = self.kernel.sample(|v| self.pair_h(v) * self.radio.mean_rx_power_sq(v));
        self.kernel.unit_tails(&hg, &hs).into_iter().map(|x| 2.0 * x).collect()
    }

    fn pair_kernel_total(&self) -> f64 {
        let g = &self.kernel.grid;
        2.0 * g.u.iter().zip(&g.w).map(|(&v, &w)| w * self.pair_h(v) * self.radio.mean_rx_power_sq(v)).sum::<f64>()
    }
}

/// ∫_{u(r0)}^{u(r1)} f(u) du over panels of width <= h in r.
fn panel_integral<T: Quantity, F: FnMut(f64) -> T>(rule: &GaussLegendre, r0: f64, r1: f64, h: f64, mut f: F) -> T {
    let n = ((r1 - r0) / h).ceil().max(1.0) as usize;
    let mut acc = T::zero();
    for p in 0..n {
        let a = r0 + (r1 - r0) * p as f64 / n as f64;
        let b = r0 + (r1 - r0) * (p + 1) as f64 / n as f64;
        for (r, w) in rule.mapped(a, b) {
            acc = acc + f(r * r) * (2.0 * r * w);
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::dbm_to_watt;
    use crate::quad::adaptive;

    fn paris_radio() -> RadioConfig {
        RadioConfig::new(2132.7e6, 14.8e6, dbm_to_watt(66.0), 33.0, 3.2, 1, 6.0).unwrap()
    }

    fn paris_model(n: usize) -> BetaGppModel {
        BetaGppModel::new(6.17e-6, 0.75, n).unwrap()
    }

    fn paris_geom() -> GeometryConfig {
        GeometryConfig::new(0.0, 6000.0).unwrap()
    }

    fn small_study(beta: f64, bf: BeamformingConfig) -> BgppStudy {
        // a light configuration so the slow direct oracles stay cheap
        let model = BetaGppModel::new(0.5e-6, beta, 20).unwrap();
        let geom = GeometryConfig::new(0.0, 2000.0).unwrap();
        BgppStudy::new(&model, &geom, &paris_radio(), &bf).unwrap()
    }

    #[test]
    fn upsilon_examples() {
        let k = BgppKernel::new(&paris_model(50), &paris_geom()).unwrap();
        let u = 200.0f64.powi(2);
        // direct product with a quadrature-based incomplete gamma
        let rate = k.rate();
        let mut direct = 1.0;
        for j in 2..=k.index_count() {
            let p = adaptive(|x: f64| (((j - 1) as f64) * x.ln() - x - crate::specfun::ln_factorial(j as u32 - 1)).exp(), &[0.0, rate * u], 1e-300, 1e-14, 200).value;
            direct *= 1.0 - 0.75 * p;
        }
        assert!((k.upsilon(1, u) / direct - 1.0).abs() < 1e-10);
        // at τ² the first N factors are all 1 - β
        let ut = 6000.0f64.powi(2);
        let prod: f64 = (2..=50).map(|j| 1.0 - 0.75 * k.blocked_mass(j, ut)).product();
        assert!((prod / 0.25f64.powi(49) - 1.0).abs() < 1e-10);
        // small β: the full void product tends to the Poisson void probability
        let kp = BgppKernel::new(&BetaGppModel::new(6.17e-6, 0.01, 50).unwrap(), &GeometryConfig::new(0.0, 500.0).unwrap()).unwrap();
        let u = 1e4;
        let full = kp.upsilon(3, u) * (1.0 - 0.01 * kp.blocked_mass(3, u));
        assert!((full / (-kp.model().c() * u).exp() - 1.0).abs() < 2e-3, "{full}");
        // absurdly small β is refused rather than expanded into billions of indices
        assert!(BgppKernel::new(&BetaGppModel::new(6.17e-6, 1e-9, 50).unwrap(), &paris_geom()).is_err());
    }

    #[test]
    fn omega_is_serving_density() {
        let k = BgppKernel::new(&paris_model(50), &paris_geom()).unwrap();
        let mass: f64 = k.outer.iter().map(|o| o.w * 0.75 * k.omega(o.u)).sum();
        assert!((mass - 1.0).abs() < 1e-6, "{mass}");
        // truncation barely moves Ω close to the user
        let k10 = BgppKernel::new(&paris_model(10), &paris_geom()).unwrap();
        let u = 100.0f64.powi(2);
        assert!((k10.omega(u) / k.omega(u) - 1.0).abs() < 1e-3);
        // Ginibre: the nearest point is almost surely index 1
        let g = BgppKernel::new(&BetaGppModel::new(6.17e-6, 1.0, 50).unwrap(), &paris_geom()).unwrap();
        let u = 1.0;
        assert!((g.omega(u) / g.f(1, u) - 1.0).abs() < 1e-4);
        // Ω* and Ω** reduce to Ω when the extra factors are f_1 only
        assert!(k.omega_star(u, u) > 0.0 && k.omega_star2(u, u, u) > 0.0);
    }

    #[test]
    fn serving_products_match_direct_cf() {
        let bf = BeamformingConfig::directional(0.0982).unwrap();
        let st = small_study(0.75, bf);
        let k = &st.kernel;
        let ups = st.upsilon_at_outer();
        for &q in &[0.0, 1e8, 3e9] {
            let b = st.products(q);
            for &j in &[0usize, 7, k.outer.len() / 2] {
                let o = &k.outer[j];
                let mut direct = C64::new(0.0, 0.0);
                for i in 1..=k.n_serv {
                    let w = 0.75 * k.f(i, o.u) * ups[j][i - 1];
                    direct += st.cf_interference(i, o.u, q).unwrap() * w;
                }
                assert!((b[j] - direct).norm() <= 1e-7 * direct.norm().max(1e-12), "q={q} j={j}: {} vs {direct}", b[j]);
            }
        }
    }

    #[test]
    fn cf_interference_basics() {
        let bf = BeamformingConfig::disabled();
        let st = small_study(0.5, bf);
        assert!((st.cf_interference(1, 1e4, 0.0).unwrap() - 1.0).norm() < 1e-13);
        for &q in &[1e6, 1e8, 1e10, 1e12] {
            assert!(st.cf_interference(2, 4e4, q).unwrap().norm() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn zeta_at_zero_frequency() {
        let (z0, zb) = zeta_components(0.0, 2.0, 1e-6, 1e-12, 3e-7, 1);
        let (x0, xt): (f64, f64) = (2e-12 / 3e-7, 1e-6 / 3e-7);
        assert!((z0.re - ((-x0).exp() - (-xt).exp())).abs() < 1e-14);
        assert!(zb.norm() < 1e-15);
        // m = 2 against quadrature of the defining integral
        let (t, tp, s2, pbar, q) = (1.5, 2e-6, 1e-9, 1e-6, 3e5);
        let (z0, zb) = zeta_components(q, t, tp, s2, pbar, 2);
        let bm = joint_margin(t, tp, s2);
        let dens = |s: f64| 4.0 * s / (pbar * pbar) * (-2.0 * s / pbar).exp();
        let t2 = t * (tp + s2) / (1.0 + t);
        let f1 = |s: f64| dens(s) * C64::from_polar(1.0, -q * (s / t - s2));
        let f2 = |s: f64| dens(s) * C64::from_polar(1.0, -q * (tp - s));
        let direct = adaptive(f1, &[t * s2, t2], 1e-16, 1e-12, 2000).value + adaptive(f2, &[t2, tp], 1e-16, 1e-12, 2000).value;
        let split = z0 + C64::from_polar(1.0, -q * bm) * zb;
        assert!((split - direct).norm() < 1e-10, "{split} vs {direct}");
    }

    #[test]
    fn frechet_examples() {
        assert_eq!(frechet_bounds(1.0, 0.25).unwrap(), (0.25, 0.25));
        let (l, u) = frechet_bounds(0.9, 0.95).unwrap();
        assert!((l - 0.85).abs() < 1e-12 && (u - 0.9).abs() < 1e-12);
        assert!(frechet_bounds(1.2, 0.5).is_err());
    }

    #[test]
    fn nobf_mean_is_beta_free_and_matches_campbell() {
        let radio = paris_radio();
        let geom = paris_geom();
        let a = BgppStudy::new(&BetaGppModel::new(6.17e-6, 0.25, 50).unwrap(), &geom, &radio, &BeamformingConfig::disabled()).unwrap();
        let b = BgppStudy::new(&BetaGppModel::new(6.17e-6, 1.0, 50).unwrap(), &geom, &radio, &BeamformingConfig::disabled()).unwrap();
        assert_eq!(a.mean_exposure_nobf(), b.mean_exposure_nobf());
        let direct = adaptive(|u: f64| PI * 6.17e-6 * radio.mean_rx_power_sq(u), &[0.0, 1e3, 1e5, 1e7, 3.6e7], 1e-20, 1e-12, 500).value;
        assert!((a.mean_exposure_nobf() / direct - 1.0).abs() < 1e-10);
        let empty = BgppStudy::new(&BetaGppModel::new(6.17e-6, 0.5, 50).unwrap(), &GeometryConfig::new(100.0, 100.0 + 1e-9).unwrap(), &radio, &BeamformingConfig::disabled()).unwrap();
        let thin = 6.17e-6 * PI * radio.mean_rx_power_sq(1e4) * 2e-7;
        assert!((empty.mean_exposure_nobf() / thin - 1.0).abs() < 1e-3);
    }

    #[test]
    fn zero_power_gives_zero_moments() {
        let mut radio = paris_radio();
        radio.pt_gmax = 0.0;
        let st = BgppStudy::new(&paris_model(20), &paris_geom(), &radio, &BeamformingConfig::directional(0.0982).unwrap()).unwrap();
        assert_eq!(st.mean_exposure(), 0.0);
        assert_eq!(st.second_moment_exposure(), 0.0);
    }

    #[test]
    fn ppp_cdf_matches_closed_form_nearest_only() {
        // p_g = 0: only the serving BS radiates; F(t) = P0 + ∫ f(u)(1 - e^{-t/P̄(u)}) du
        let radio = paris_radio();
        let geom = GeometryConfig::new(0.0, 3000.0).unwrap();
        let bf = BeamformingConfig::directional(0.0).unwrap();
        let model = BetaGppModel::new(2e-6, 0.0, 1).unwrap();
        let st = BgppStudy::new(&model, &geom, &radio, &bf).unwrap();
        let c = model.c();
        for &tp in &[1e-9, 1e-8, 1e-7] {
            let p = st.cdf_exposure(tp).unwrap().value;
            let direct = (-c * 9e6f64).exp()
                + adaptive(|u: f64| c * (-c * u).exp() * -(-tp / radio.mean_rx_power_sq(u)).exp_m1(), &[0.0, 1e4, 1e5, 1e6, 9e6], 1e-14, 1e-12, 1000).value;
            assert!((p - direct).abs() < 2e-6, "t'={tp}: {p} vs {direct}");
        }
    }
}
