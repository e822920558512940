//! Exposure and SINR for a user in an inhomogeneous PPP with the radial
//! density λ(Δ) = ã/Δ + b̃ + c̃Δ + d̃Δ² around a max-density point.
//!
//! Given the serving distance r0, the interferers form a PPP on [r0, τ] with
//! radial intensity Λ'(r), so the interference CF is
//! exp(p_g ∫_{r0}^τ (Φ(q, r) - 1) Λ'(r) dr), Φ(q, r) = (1 - jqP̄(r)/m)^-m.
//! The b̃ and d̃ parts of that exponent have closed forms in ₂F₁; the ã and c̃
//! parts carry complete elliptic integrals and are integrated numerically.

use crate::bgpp::{fading_cf, joint_margin, zeta_components};
use crate::error::AnalyticsError;
use crate::inversion::{gil_pelaez_cdf, sine_transform, CharacteristicFunction, Probability, QuadratureConfig, WithDecay};
use crate::model::{BeamformingConfig, GeometryConfig, RadioConfig};
use crate::pointprocess::{BetaGppModel, DensityViolation, IpppModel, RadialTable, ViolationKind};
use crate::quad::{graded_breaks, GaussLegendre, Quantity};
use crate::specfun::gauss_2f1_imag;
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

type C64 = Complex64;

const GRID_ORDER: usize = 10;
/// serving distances beyond Λ(r0) - Λ(r_e) = this many expected BSs are ignored
const SERVING_DEPTH: f64 = 45.0;

#[derive(Debug, Clone)]
struct Node {
    r0: f64,
    w: f64,
    panel: usize,
    /// Λ'(r0) e^{-(Λ(r0) - Λ(r_e))}
    dens: f64,
    pbar: f64,
    sub_r: Vec<f64>,
    /// dr weight times Λ'
    sub_lw: Vec<f64>,
}

/// An I-PPP seen from the user at the origin, with its quadrature tables.
#[derive(Debug, Clone)]
pub struct MvStudy {
    model: IpppModel,
    geom: GeometryConfig,
    radio: RadioConfig,
    bf: BeamformingConfig,
    edges: Vec<f64>,
    /// dr·Λ' weights and P̄ at the grid nodes
    lw: Vec<f64>,
    pbar: Vec<f64>,
    outer: Vec<Node>,
    p_empty: f64,
    violations: Vec<DensityViolation>,
    quad: QuadratureConfig,
}

impl MvStudy {
    pub fn new(model: &IpppModel, geom: &GeometryConfig, radio: &RadioConfig, bf: &BeamformingConfig) -> Result<Self, AnalyticsError> {
        geom.validate()?;
        radio.validate()?;
        bf.validate()?;
        let violations = model.validate_density(geom.tau);
        if let Some(v) = violations.iter().find(|v| v.kind == ViolationKind::Negative) {
            return Err(AnalyticsError::Invalid(format!(
                "density negative for Δ in [{:.1}, {:.1}] m (worst {:.3e})",
                v.delta_from, v.delta_to, v.worst
            )));
        }
        let rule = GaussLegendre::new(GRID_ORDER);
        let (r_e, tau) = (geom.r_e, geom.tau);
        let mut focus = vec![r_e];
        if model.rho > r_e && model.rho < tau {
            focus.push(model.rho);
        }
        let step = (tau / 250.0).clamp(1.0, 25.0);
        let edges = graded_breaks(r_e, tau, &focus, step, 1e-6 * tau.max(1.0));
        let np = edges.len() - 1;
        let mut r = Vec::with_capacity(np * GRID_ORDER);
        let mut lw = Vec::with_capacity(np * GRID_ORDER);
        let mut wr = Vec::with_capacity(np * GRID_ORDER);
        let mut cum = vec![0.0; np + 1];
        for p in 0..np {
            let mut s = 0.0;
            for (x, w) in rule.mapped(edges[p], edges[p + 1]) {
                let l = model.intensity_derivative(x)? * w;
                r.push(x);
                wr.push(w);
                lw.push(l);
                s += l;
            }
            cum[p + 1] = cum[p] + s;
        }
        let pbar: Vec<f64> = r.iter().map(|&x| radio.mean_rx_power(x)).collect();
        let p_empty = (-cum[np]).exp();

        let mut outer = Vec::new();
        for (l, &r0) in r.iter().enumerate() {
            let panel = l / GRID_ORDER;
            if cum[panel] > SERVING_DEPTH {
                break;
            }
            let mut sub_r = Vec::with_capacity(GRID_ORDER);
            let mut sub_lw = Vec::with_capacity(GRID_ORDER);
            let mut tail = 0.0;
            for (x, w) in rule.mapped(r0, edges[panel + 1]) {
                let v = model.intensity_derivative(x)? * w;
                sub_r.push(x);
                sub_lw.push(v);
                tail += v;
            }
            let lam0 = cum[panel + 1] - tail;
            let dens = model.intensity_derivative(r0)? * (-lam0).exp();
            outer.push(Node { r0, w: wr[l], panel, dens, pbar: radio.mean_rx_power(r0), sub_r, sub_lw });
        }
        let st = MvStudy {
            model: *model,
            geom: *geom,
            radio: *radio,
            bf: *bf,
            edges,
            lw,
            pbar,
            outer,
            p_empty,
            violations,
            quad: QuadratureConfig::with_tol(1e-6),
        };
        st.check_normalization()?;
        Ok(st)
    }

    pub fn with_quadrature(mut self, quad: QuadratureConfig) -> Self {
        self.quad = quad;
        self
    }

    pub fn model(&self) -> &IpppModel {
        &self.model
    }

    pub fn radio(&self) -> &RadioConfig {
        &self.radio
    }

    pub fn geometry(&self) -> &GeometryConfig {
        &self.geom
    }

    /// Monotonicity violations of the density seen from this user (non-fatal).
    pub fn warnings(&self) -> &[DensityViolation] {
        &self.violations
    }

    /// Probability that the annulus is empty.
    pub fn empty_probability(&self) -> f64 {
        self.p_empty
    }

    /// Nearest-BS distance PDF (unconditioned: integrates to 1 - P0) at the outer nodes.
    pub fn serving_nodes(&self) -> Vec<(f64, f64, f64)> {
        self.outer.iter().map(|o| (o.r0, o.w, o.dens)).collect()
    }

    fn check_normalization(&self) -> Result<(), AnalyticsError> {
        let mass: f64 = self.outer.iter().map(|o| o.w * o.dens).sum::<f64>() + self.p_empty;
        if (mass - 1.0).abs() > 1e-8 {
            return Err(AnalyticsError::Numeric(format!("nearest-BS law integrates to {mass}")));
        }
        Ok(())
    }

    fn p_g(&self) -> f64 {
        self.bf.p_g
    }

    /// ∫_{r0_j}^τ h Λ' for every outer node, with h sampled on the grid and sub-rules.
    fn tails<T: Quantity>(&self, hg: &[T], hs: &[T]) -> Vec<T> {
        let np = self.edges.len() - 1;
        let mut suffix = vec![T::zero(); np + 1];
        for p in (0..np).rev() {
            let mut acc = T::zero();
            for l in p * GRID_ORDER..(p + 1) * GRID_ORDER {
                acc = acc + hg[l] * self.lw[l];
            }
            suffix[p] = suffix[p + 1] + acc;
        }
        self.outer
            .iter()
            .enumerate()
            .map(|(j, o)| {
                let mut acc = suffix[o.panel + 1];
                for s in 0..o.sub_r.len() {
                    acc = acc + hs[j * GRID_ORDER + s] * o.sub_lw[s];
                }
                acc
            })
            .collect()
    }

    fn sample<T, H: Fn(f64) -> T>(&self, h: H) -> (Vec<T>, Vec<T>) {
        let g = self.pbar.iter().map(|&p| h(p)).collect();
        let s = self.outer.iter().flat_map(|o| o.sub_r.iter()).map(|&r| h(self.radio.mean_rx_power(r))).collect();
        (g, s)
    }

    /// Interference CF exponent p_g ∫_{r0}^τ (Φ(q) - 1) Λ' at every outer node.
    fn exponents(&self, q: f64) -> Vec<C64> {
        let m = self.radio.m;
        let (gg, gs) = self.sample(|p| fading_cf(q, p, m) - 1.0);
        self.tails(&gg, &gs).into_iter().map(|x| x * self.p_g()).collect()
    }

    /// Mean interference power given the serving distance r0 (W).
    pub fn mean_interference_power(&self, r0: f64) -> Result<f64, AnalyticsError> {
        self.check_r0(r0)?;
        let closed = self.even_terms_moment(r0, 1)?;
        let odd = self.odd_terms_integral(r0, |r| self.radio.mean_rx_power(r))?;
        Ok(self.p_g() * (closed + odd))
    }

    fn check_r0(&self, r0: f64) -> Result<(), AnalyticsError> {
        if !(r0 >= self.geom.r_e && r0 <= self.geom.tau) {
            return Err(AnalyticsError::Invalid(format!("r0 = {r0} outside [r_e, τ]")));
        }
        Ok(())
    }

    /// P̄ = K x^{-α/2} with x = r² + z².
    fn power_scale(&self) -> f64 {
        self.radio.pt_gmax / self.radio.kappa()
    }

    /// ∫_{r0}^τ P̄^p 2πr (b̃ + d̃(r² + ρ²)) dr in closed form.
    fn even_terms_moment(&self, r0: f64, p: i32) -> Result<f64, AnalyticsError> {
        let md = &self.model;
        let z2 = self.radio.z * self.radio.z;
        let (x0, x1) = (r0 * r0 + z2, self.geom.tau.powi(2) + z2);
        let k = self.power_scale().powi(p);
        let e = p as f64 * self.radio.alpha / 2.0;
        // ∫ x^j K^p x^{-e} dx
        let prim = |j: f64, x: f64| -> f64 {
            let s = j + 1.0 - e;
            if s.abs() < 1e-12 {
                k * x.ln()
            } else {
                k * x.powf(s) / s
            }
        };
        let c0 = md.b + md.d * (md.rho * md.rho - z2);
        Ok(PI * (c0 * (prim(0.0, x1) - prim(0.0, x0)) + md.d * (prim(1.0, x1) - prim(1.0, x0))))
    }

    /// ∫_{r0}^τ h(r) r (ã ∮dθ/Δ + c̃ ∮Δ dθ) dr, split at ρ̃.
    fn odd_terms_integral<T: Quantity, H: Fn(f64) -> T>(&self, r0: f64, h: H) -> Result<T, AnalyticsError> {
        let md = &self.model;
        if md.a == 0.0 && md.c == 0.0 || r0 >= self.geom.tau {
            return Ok(T::zero());
        }
        let rule = GaussLegendre::new(GRID_ORDER);
        let focus: Vec<f64> = [r0, md.rho].into_iter().filter(|&x| x >= r0 && x < self.geom.tau).collect();
        let tau = self.geom.tau;
        let breaks = graded_breaks(r0, tau, &focus, (tau / 250.0).clamp(1.0, 25.0), 1e-6 * tau.max(1.0));
        let mut acc = T::zero();
        for w in breaks.windows(2) {
            for (r, wr) in rule.mapped(w[0], w[1]) {
                let (inv, lin) = md.angular_moments(r)?;
                acc = acc + h(r) * (wr * r * (md.a * inv + md.c * lin));
            }
        }
        Ok(acc)
    }

    /// CF of the interference given the serving distance r0: the b̃/d̃ part of
    /// the exponent via ₂F₁ antiderivatives, the ã/c̃ part by quadrature.
    pub fn cf_interference(&self, q: f64, r0: f64) -> Result<C64, AnalyticsError> {
        self.check_r0(r0)?;
        if q == 0.0 {
            return Ok(C64::new(1.0, 0.0));
        }
        let m = self.radio.m;
        let even = self.even_terms_cf(q, r0)?;
        let odd = self.odd_terms_integral(r0, |r| fading_cf(q, self.radio.mean_rx_power(r), m) - 1.0)?;
        Ok(((even + odd) * self.p_g()).exp())
    }

    /// ∫_{r0}^τ (Φ(q, r) - 1) 2πr (b̃ + d̃(r² + ρ²)) dr.
    fn even_terms_cf(&self, q: f64, r0: f64) -> Result<C64, AnalyticsError> {
        let md = &self.model;
        if md.b == 0.0 && md.d == 0.0 {
            return Ok(C64::new(0.0, 0.0));
        }
        let mf = self.radio.m as f64;
        let half = self.radio.alpha / 2.0;
        let delta = 1.0 / half;
        let z2 = self.radio.z * self.radio.z;
        let (x0, x1) = (r0 * r0 + z2, self.geom.tau.powi(2) + z2);
        let w = q * self.power_scale() / mf;
        // ∫ x^k (Φ - 1) dx = x^{k+1}/(k+1) (₂F₁(m, -δ(k+1); 1 - δ(k+1); j w x^{-α/2}) - 1)
        let prim = |k: i32, x: f64| -> Result<C64, AnalyticsError> {
            let b = -delta * (k + 1) as f64;
            if (1.0 + b).fract().abs() < 1e-12 && 1.0 + b <= 0.0 {
                return Err(AnalyticsError::Invalid(format!("α = {} hits a ₂F₁ pole", self.radio.alpha)));
            }
            let f = gauss_2f1_imag(mf, b, 1.0 + b, C64::new(0.0, w * x.powf(-half)))?;
            Ok((f - 1.0) * (x.powi(k + 1) / (k + 1) as f64))
        };
        let c0 = md.b + md.d * (md.rho * md.rho - z2);
        let a0 = prim(0, x1)? - prim(0, x0)?;
        let a1 = if md.d != 0.0 { prim(1, x1)? - prim(1, x0)? } else { C64::new(0.0, 0.0) };
        Ok((a0 * c0 + a1 * md.d) * PI)
    }

    /// Mean exposure (W).
    pub fn mean_exposure(&self) -> f64 {
        let (hg, hs) = self.sample(|p| p);
        let m1 = self.tails(&hg, &hs);
        let p_g = self.p_g();
        self.outer.iter().zip(m1).map(|(o, m1)| o.w * o.dens * (o.pbar + p_g * m1)).sum()
    }

    /// Second moment of the exposure (W²).
    pub fn second_moment_exposure(&self) -> f64 {
        let (hg, hs) = self.sample(|p| p);
        let m1 = self.tails(&hg, &hs);
        let (hg, hs) = self.sample(|p| p * p);
        let m2 = self.tails(&hg, &hs);
        let p_g = self.p_g();
        let mf = self.radio.m as f64;
        let fade2 = (mf + 1.0) / mf;
        self.outer
            .iter()
            .enumerate()
            .map(|(j, o)| {
                let i1 = p_g * m1[j];
                o.w * o.dens * (fade2 * o.pbar * o.pbar + 2.0 * o.pbar * i1 + fade2 * p_g * m2[j] + i1 * i1)
            })
            .sum()
    }

    pub fn variance_exposure(&self) -> f64 {
        let m = self.mean_exposure();
        self.second_moment_exposure() - m * m
    }

    /// Ψ_E(q) = E[e^{jq𝒫}; some BS serves].
    pub fn exposure_cf(&self, q: f64) -> C64 {
        let ex = self.exponents(q);
        let m = self.radio.m;
        self.outer.iter().zip(ex).map(|(o, e)| fading_cf(q, o.pbar, m) * e.exp() * (o.w * o.dens)).sum()
    }

    /// Ψ_Y(q) = E[e^{jq(S - tI)}; some BS serves].
    pub fn sinr_cf(&self, q: f64, t: f64) -> C64 {
        let ex = self.exponents(t * q);
        let m = self.radio.m;
        self.outer.iter().zip(ex).map(|(o, e)| fading_cf(q, o.pbar, m) * e.conj().exp() * (o.w * o.dens)).sum()
    }

    pub fn cdf_exposure(&self, t_prime: f64) -> Result<Probability, AnalyticsError> {
        if !(t_prime > 0.0) {
            return Err(AnalyticsError::Invalid("exposure threshold must be positive".into()));
        }
        let psi = WithDecay { f: |q: f64| self.exposure_cf(q / t_prime), order: self.radio.m as f64 };
        let s = sine_transform(&psi, 1.0, &self.quad)?;
        let mass = 1.0 - self.p_empty;
        let v = self.p_empty + 0.5 * mass - s.value / PI;
        Ok(Probability { value: v.clamp(0.0, 1.0), error: s.error / PI })
    }

    /// Exposure CDF without dynamic beamforming: every BS in the annulus radiates.
    pub fn cdf_exposure_nobf(&self, t_prime: f64) -> Result<Probability, AnalyticsError> {
        if !(t_prime > 0.0) {
            return Err(AnalyticsError::Invalid("exposure threshold must be positive".into()));
        }
        let m = self.radio.m;
        let cf = WithDecay {
            f: |q: f64| {
                let e: C64 = self.pbar.iter().zip(&self.lw).map(|(&p, &lw)| (fading_cf(q, p, m) - 1.0) * lw).sum();
                e.exp()
            },
            order: 2.0 / self.radio.alpha,
        };
        Ok(gil_pelaez_cdf(&cf, t_prime, &self.quad)?)
    }

    pub fn ccdf_sinr(&self, t: f64, sigma2: f64) -> Result<Probability, AnalyticsError> {
        if !(t > 0.0) || !(sigma2 >= 0.0) {
            return Err(AnalyticsError::Invalid("need t > 0 and σ² >= 0".into()));
        }
        let scale = if sigma2 > 0.0 { t * sigma2 } else { self.typical_power() };
        let psi = WithDecay { f: |q: f64| self.sinr_cf(q / scale, t), order: self.radio.m as f64 };
        let s = sine_transform(&psi, t * sigma2 / scale, &self.quad)?;
        let mass = 1.0 - self.p_empty;
        Ok(Probability { value: (0.5 * mass + s.value / PI).clamp(0.0, 1.0), error: s.error / PI })
    }

    fn typical_power(&self) -> f64 {
        let (num, den) = self.outer.iter().fold((0.0, 0.0), |(a, b), o| (a + o.w * o.dens * o.r0, b + o.w * o.dens));
        self.radio.mean_rx_power(num / den.max(1e-300))
    }

    /// P[SINR > t, 𝒫 <= t_prime].
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
            let ex = self.exponents(q);
            self.outer
                .iter()
                .zip(ex)
                .map(|(o, e)| {
                    let z = zeta_components(q, t, t_prime, sigma2, o.pbar, m);
                    (if which == 0 { z.0 } else { z.1 }) * e.exp() * (o.w * o.dens)
                })
                .sum()
        };
        let psi0 = WithDecay { f: |q: f64| comp(q / t_prime, 0), order: 1.0 };
        let psib = WithDecay { f: |q: f64| comp(q / t_prime, 1), order: 1.0 };
        let s0 = sine_transform(&psi0, 0.0, &self.quad)?;
        let sb = sine_transform(&psib, b_max / t_prime, &self.quad)?;
        let mass = psi0.eval(0.0).re;
        let v = 0.5 * mass - (s0.value + sb.value) / PI;
        Ok(Probability { value: v.clamp(0.0, 1.0), error: (s0.error + sb.error) / PI })
    }
}

/// Homogeneous PPP whose density is the mean of λ over the disk of `radius`
/// around the user.
pub fn local_hppp_approximation(model: &IpppModel, radius: f64) -> Result<BetaGppModel, AnalyticsError> {
    if !(radius > 0.0) {
        return Err(AnalyticsError::Invalid("radius must be positive".into()));
    }
    let lambda = if model.a == 0.0 && model.c == 0.0 && model.d == 0.0 {
        model.b
    } else {
        RadialTable::new(model, radius)?.measure(radius) / (PI * radius * radius)
    };
    Ok(BetaGppModel::new(lambda, 0.0, 1)?)
}

/// Quantity evaluated at each map location.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MapMetric {
    MeanExposure,
    /// F_emf(T') with T' in W
    ExposureCdf(f64),
    /// P[SINR > t] with noise power σ² in W
    SinrCcdf { t: f64, sigma2: f64 },
}

#[derive(Debug, Clone)]
pub struct MapResult {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// row-major over ys then xs
    pub values: Vec<Option<f64>>,
    pub failures: Vec<(usize, String)>,
    pub average: f64,
}

impl MapResult {
    pub fn get(&self, ix: usize, iy: usize) -> Option<f64> {
        self.values[iy * self.xs.len() + ix]
    }
}

/// n equally spaced points covering [lo, hi] inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![0.5 * (lo + hi)],
        _ => (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect(),
    }
}

/// Evaluates `metric` for users at every (x, y) of the grid, recentering the
/// density per location. Cells that fail are recorded and left out of the average.
pub fn spatial_map(
    metric: MapMetric,
    xs: &[f64],
    ys: &[f64],
    base: &IpppModel,
    geom: &GeometryConfig,
    radio: &RadioConfig,
    bf: &BeamformingConfig,
) -> Result<MapResult, AnalyticsError> {
    if xs.is_empty() || ys.is_empty() {
        return Err(AnalyticsError::Invalid("map grid is empty".into()));
    }
    let cells: Vec<(f64, f64)> = ys.iter().flat_map(|&y| xs.iter().map(move |&x| (x, y))).collect();
    let out: Vec<Result<f64, String>> = cells
        .par_iter()
        .map(|&(x, y)| {
            let st = MvStudy::new(&base.recenter([x, y]), geom, radio, bf).map_err(|e| e.to_string())?;
            match metric {
                MapMetric::MeanExposure => Ok(st.mean_exposure()),
                MapMetric::ExposureCdf(tp) => st.cdf_exposure(tp).map(|p| p.value).map_err(|e| e.to_string()),
                MapMetric::SinrCcdf { t, sigma2 } => st.ccdf_sinr(t, sigma2).map(|p| p.value).map_err(|e| e.to_string()),
            }
        })
        .collect();
    let mut values = Vec::with_capacity(out.len());
    let mut failures = Vec::new();
    let (mut sum, mut n) = (0.0, 0usize);
    for (k, r) in out.into_iter().enumerate() {
        match r {
            Ok(v) => {
                sum += v;
                n += 1;
                values.push(Some(v));
            }
            Err(e) => {
                failures.push((k, e));
                values.push(None);
            }
        }
    }
    let average = if n > 0 { sum / n as f64 } else { f64::NAN };
    Ok(MapResult { xs: xs.to_vec(), ys: ys.to_vec(), values, failures, average })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bgpp::BgppStudy;
    use crate::model::dbm_to_watt;
    use crate::quad::adaptive;

    fn brussels_radio() -> RadioConfig {
        RadioConfig::new(1837.5e6, 15e6, dbm_to_watt(62.75), 33.0, 3.2, 1, 6.0).unwrap()
    }

    fn brussels() -> IpppModel {
        IpppModel::from_km(0.050, 5.241, -0.973, 0.048, [-0.145, -0.569])
    }

    fn geom7() -> GeometryConfig {
        GeometryConfig::new(0.0, 7000.0).unwrap()
    }

    #[test]
    fn homogeneous_moments_match_ppp_path() {
        let radio = brussels_radio();
        let geom = GeometryConfig::new(0.0, 5000.0).unwrap();
        let lam = 5e-6;
        let bf = BeamformingConfig::directional(0.3).unwrap();
        let mv = MvStudy::new(&IpppModel::homogeneous(lam), &geom, &radio, &bf).unwrap();
        let hp = BgppStudy::new(&BetaGppModel::new(lam, 0.0, 1).unwrap(), &geom, &radio, &bf).unwrap();
        assert!((mv.mean_exposure() / hp.mean_exposure() - 1.0).abs() < 1e-7);
        assert!((mv.second_moment_exposure() / hp.second_moment_exposure() - 1.0).abs() < 1e-7);
        // no BF: every BS radiates, the β-free Campbell form
        let nb = MvStudy::new(&IpppModel::homogeneous(lam), &geom, &radio, &BeamformingConfig::disabled()).unwrap();
        let ng = BgppStudy::new(&BetaGppModel::new(lam, 0.5, 50).unwrap(), &geom, &radio, &BeamformingConfig::disabled()).unwrap();
        assert!((nb.mean_exposure() / ng.mean_exposure_nobf() - 1.0).abs() < 1e-7);
        let ppp2 = BgppStudy::new(&BetaGppModel::new(lam, 0.0, 1).unwrap(), &geom, &radio, &BeamformingConfig::disabled()).unwrap();
        assert!((nb.second_moment_exposure() / ppp2.second_moment_nobf() - 1.0).abs() < 1e-7);
    }

    #[test]
    fn mean_interference_reduces_to_bracket() {
        let radio = brussels_radio();
        let bf = BeamformingConfig::directional(0.3).unwrap();
        let lam = 4e-6;
        let st = MvStudy::new(&IpppModel::homogeneous(lam), &geom7(), &radio, &bf).unwrap();
        let r0 = 250.0f64;
        let bracket = |r: f64| radio.mean_rx_power(r) * (r * r + 33.0 * 33.0);
        let expect = 2.0 * PI * lam * bf.p_g / (3.2 - 2.0) * (bracket(r0) - bracket(7000.0));
        assert!((st.mean_interference_power(r0).unwrap() / expect - 1.0).abs() < 1e-12);
        assert_eq!(st.mean_interference_power(7000.0).unwrap(), 0.0);
    }

    #[test]
    fn brussels_mean_interference_matches_grid_tail() {
        let st = MvStudy::new(&brussels(), &geom7(), &brussels_radio(), &BeamformingConfig::disabled()).unwrap();
        let (hg, hs) = st.sample(|p| p);
        let tails = st.tails(&hg, &hs);
        for j in [0usize, 37, st.outer.len() / 2] {
            let r0 = st.outer[j].r0;
            let direct = st.mean_interference_power(r0).unwrap();
            assert!((direct / tails[j] - 1.0).abs() < 1e-8, "r0={r0}: {direct} vs {}", tails[j]);
        }
    }

    #[test]
    fn nearest_law_is_normalized() {
        let st = MvStudy::new(&brussels(), &geom7(), &brussels_radio(), &BeamformingConfig::disabled()).unwrap();
        let mass: f64 = st.serving_nodes().iter().map(|(_, w, d)| w * d).sum();
        assert!((mass + st.empty_probability() - 1.0).abs() < 1e-9);
        // against the table-based Proposition-2 density
        let table = RadialTable::new(&brussels(), 7000.0).unwrap();
        for (r0, _, d) in st.serving_nodes().into_iter().step_by(97) {
            let p = table.nearest_bs_pdf(r0, &geom7()).unwrap();
            assert!((d / p - 1.0).abs() < 1e-8, "r0={r0}");
        }
    }

    #[test]
    fn closed_form_cf_matches_two_dimensional_integral() {
        // direct ∫∫ (Φ - 1) λ over the annulus in polar coordinates
        let radio = brussels_radio();
        let bf = BeamformingConfig::directional(0.0982).unwrap();
        let md = brussels();
        let st = MvStudy::new(&md, &geom7(), &radio, &bf).unwrap();
        let r0 = 300.0;
        for &q in &[1e5, 1e7, 1e9] {
            let ring = |r: f64| {
                let f = fading_cf(q, radio.mean_rx_power(r), 1) - 1.0;
                let lam = adaptive(
                    |th: f64| md.density([r * th.cos(), r * th.sin()]),
                    &[md.theta - PI, md.theta, md.theta + PI],
                    1e-16,
                    1e-12,
                    200,
                )
                .value;
                f * (lam * r)
            };
            let e = adaptive(ring, &[r0, md.rho, 1500.0, 3000.0, 7000.0], 1e-14, 1e-11, 2000).value * bf.p_g;
            let cf = st.cf_interference(q, r0).unwrap();
            assert!((cf - e.exp()).norm() < 1e-8, "q={q}: {cf} vs {}", e.exp());
        }
        assert_eq!(st.cf_interference(0.0, r0).unwrap(), C64::new(1.0, 0.0));
    }

    #[test]
    fn closed_form_cf_matches_grid_exponent() {
        let st = MvStudy::new(&brussels(), &geom7(), &brussels_radio(), &BeamformingConfig::directional(0.0982).unwrap()).unwrap();
        for &q in &[1e6, 1e8, 1e10] {
            let ex = st.exponents(q);
            for j in [3usize, st.outer.len() / 3] {
                let cf = st.cf_interference(q, st.outer[j].r0).unwrap();
                assert!((cf - ex[j].exp()).norm() < 1e-9, "q={q} j={j}");
                assert!(cf.norm() <= 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn mean_scales_with_density() {
        let radio = brussels_radio();
        // exact without beamforming (Campbell); with it the serving term breaks linearity
        let bf = BeamformingConfig::disabled();
        let a = MvStudy::new(&brussels(), &geom7(), &radio, &bf).unwrap().mean_exposure();
        let b = MvStudy::new(&brussels().scaled(2.0), &geom7(), &radio, &bf).unwrap().mean_exposure();
        assert!((b / a - 2.0).abs() < 2e-6, "{}", b / a);
        let bf = BeamformingConfig::directional(0.0982).unwrap();
        let mut off = radio;
        off.pt_gmax = 0.0;
        assert_eq!(MvStudy::new(&brussels(), &geom7(), &off, &bf).unwrap().mean_exposure(), 0.0);
    }

    #[test]
    fn local_approximation_examples() {
        let h = IpppModel::homogeneous(3e-6);
        assert_eq!(local_hppp_approximation(&h, 150.0).unwrap().lambda, 3e-6);
        assert_eq!(local_hppp_approximation(&h, 7000.0).unwrap().lambda, 3e-6);
        let small = local_hppp_approximation(&brussels(), 1.0).unwrap().lambda;
        assert!((small / brussels().density([0.0, 0.0]) - 1.0).abs() < 1e-3);
        assert!(local_hppp_approximation(&h, 0.0).is_err());
    }

    #[test]
    fn constant_density_gives_constant_map() {
        let radio = brussels_radio();
        let geom = GeometryConfig::new(0.0, 3000.0).unwrap();
        let xs = linspace(-1000.0, 1000.0, 3);
        let m = spatial_map(MapMetric::MeanExposure, &xs, &xs, &IpppModel::homogeneous(4e-6), &geom, &radio, &BeamformingConfig::disabled()).unwrap();
        assert!(m.failures.is_empty());
        let v0 = m.values[0].unwrap();
        assert!(m.values.iter().all(|v| (v.unwrap() / v0 - 1.0).abs() < 1e-9));
        assert!(spatial_map(MapMetric::MeanExposure, &[], &xs, &IpppModel::homogeneous(4e-6), &geom, &radio, &BeamformingConfig::disabled()).is_err());
    }
}
