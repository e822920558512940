//! Network topologies: the β-Ginibre point process and the radial
//! inhomogeneous Poisson point process (I-PPP).
//!
//! The β-GPP is described through the squared moduli of its points, which are
//! independent Gamma(i, c/β) variables (c = πλ) followed by independent
//! β-thinning. The I-PPP density seen from the user at the origin is
//!
//! λ(x) = ã/Δ + b̃ + c̃Δ + d̃Δ², Δ = |x - x̃|,
//!
//! with x̃ = ρ̃(cos θ̃, sin θ̃) the max-density point. Its intensity measure over
//! the disk of radius r only depends on r and involves complete elliptic
//! integrals with a logarithmic singularity at r = ρ̃.

use crate::model::GeometryConfig;
use crate::quad::{graded_breaks, tanh_sinh, GaussLegendre};
use crate::specfun::{elliptic_ke_complement, ln_factorial, regularized_lower_gamma_real};
use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::BufRead;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PpError {
    #[error("invalid model parameter {name}: {reason}")]
    Invalid { name: &'static str, reason: String },
    #[error("intensity derivative is singular at r = ρ̃ = {0} m")]
    Singular(f64),
    #[error("empty study region: Λ(τ) - Λ(r_e) = {0}")]
    EmptyRegion(f64),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("quadrature did not converge: {0}")]
    Numeric(String),
    #[error("dataset line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn invalid(name: &'static str, reason: impl Into<String>) -> PpError {
    PpError::Invalid { name, reason: reason.into() }
}

/// Planar BS positions (m) around the user at the origin.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Deployment {
    pub points: Vec<[f64; 2]>,
}

impl Deployment {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn squared_distances(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p[0] * p[0] + p[1] * p[1])
    }
}

// ---------------------------------------------------------------------------
// β-Ginibre point process

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaGppModel {
    /// BS density, 1/m²
    pub lambda: f64,
    /// repulsion, 0 means Poisson
    pub beta: f64,
    /// number of serving-index terms kept in the sums
    pub n_trunc: usize,
}

impl BetaGppModel {
    pub fn new(lambda: f64, beta: f64, n_trunc: usize) -> Result<Self, PpError> {
        let m = BetaGppModel { lambda, beta, n_trunc };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), PpError> {
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(invalid("lambda", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(invalid("beta", format!("{} outside [0, 1]", self.beta)));
        }
        if self.n_trunc < 1 {
            return Err(invalid("n_trunc", "must be >= 1"));
        }
        Ok(())
    }

    /// c = πλ.
    pub fn c(&self) -> f64 {
        PI * self.lambda
    }

    /// Rate c/β of the Gamma laws of the squared moduli.
    pub fn rate(&self) -> f64 {
        self.c() / self.beta
    }

    pub fn is_poisson(&self) -> bool {
        self.beta == 0.0
    }

    /// Smallest M with P[Y_M <= u_max] < tail: indices beyond M never land inside u_max.
    pub fn index_cutoff(&self, u_max: f64, tail: f64) -> usize {
        let x = self.rate() * u_max;
        let mut m = (x.floor() as usize).max(1);
        while regularized_lower_gamma_real(m as u32, x) >= tail {
            m += 1 + (m / 64);
        }
        m
    }
}

/// ln f_i(u) for the Gamma(i, c/β) law of Y_i = |X_i|².
pub fn bgpp_ln_pdf(i: usize, u: f64, model: &BetaGppModel) -> f64 {
    let rate = model.rate();
    if u <= 0.0 {
        return if i == 1 { rate.ln() } else { f64::NEG_INFINITY };
    }
    (i as f64 - 1.0) * u.ln() - rate * u + i as f64 * rate.ln() - ln_factorial(i as u32 - 1)
}

/// f_i(u) = u^(i-1) e^(-cu/β) (c/β)^i / (i-1)!.
pub fn bgpp_distance_pdf(i: usize, u: f64, model: &BetaGppModel) -> f64 {
    assert!(i >= 1, "point index starts at 1");
    bgpp_ln_pdf(i, u, model).exp()
}

/// Reusable β-GPP sampler (Gamma laws prebuilt for every index that can reach τ).
#[derive(Debug, Clone)]
pub struct BgppSampler {
    laws: Vec<Gamma<f64>>,
    beta: f64,
    u_lo: f64,
    u_hi: f64,
}

impl BgppSampler {
    pub fn new(model: &BetaGppModel, geom: &GeometryConfig) -> Result<Self, PpError> {
        model.validate()?;
        if model.is_poisson() {
            return Err(invalid("beta", "β = 0 is sampled as a homogeneous PPP"));
        }
        let u_hi = geom.tau * geom.tau;
        let m = model.index_cutoff(u_hi, 1e-6);
        let scale = 1.0 / model.rate();
        let laws = (1..=m).map(|i| Gamma::new(i as f64, scale).expect("valid gamma")).collect();
        Ok(BgppSampler { laws, beta: model.beta, u_lo: geom.r_e * geom.r_e, u_hi })
    }

    pub fn max_index(&self) -> usize {
        self.laws.len()
    }

    /// Squared distances of the retained points, in index order.
    pub fn sample_sq<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut Vec<f64>) {
        out.clear();
        for law in &self.laws {
            if rng.random::<f64>() >= self.beta {
                continue;
            }
            let y = law.sample(rng);
            if y >= self.u_lo && y <= self.u_hi {
                out.push(y);
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Deployment {
        let mut sq = Vec::new();
        self.sample_sq(rng, &mut sq);
        let points = sq
            .into_iter()
            .map(|u| {
                let r = u.sqrt();
                let a = rng.random::<f64>() * 2.0 * PI;
                [r * a.cos(), r * a.sin()]
            })
            .collect();
        Deployment { points }
    }
}

/// One β-GPP realization clipped to the annulus [r_e, τ].
pub fn sample_bgpp<R: Rng + ?Sized>(model: &BetaGppModel, geom: &GeometryConfig, rng: &mut R) -> Result<Deployment, PpError> {
    if model.is_poisson() {
        return Ok(sample_hppp(model.lambda, geom, rng));
    }
    Ok(BgppSampler::new(model, geom)?.sample(rng))
}

/// Homogeneous PPP of density λ on the annulus [r_e, τ].
pub fn sample_hppp<R: Rng + ?Sized>(lambda: f64, geom: &GeometryConfig, rng: &mut R) -> Deployment {
    let area = PI * (geom.tau * geom.tau - geom.r_e * geom.r_e);
    let n = poisson(lambda * area, rng);
    let (u0, u1) = (geom.r_e * geom.r_e, geom.tau * geom.tau);
    let points = (0..n)
        .map(|_| {
            let r = (u0 + rng.random::<f64>() * (u1 - u0)).sqrt();
            let a = rng.random::<f64>() * 2.0 * PI;
            [r * a.cos(), r * a.sin()]
        })
        .collect();
    Deployment { points }
}

fn poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("finite mean").sample(rng) as usize
}

// ---------------------------------------------------------------------------
// Radial inhomogeneous PPP

/// Density coefficients in SI units (λ in 1/m², Δ in m).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IpppModel {
    /// ã, 1/m
    pub a: f64,
    /// b̃, 1/m²
    pub b: f64,
    /// c̃, 1/m³
    pub c: f64,
    /// d̃, 1/m⁴
    pub d: f64,
    /// distance from the user to the max-density point, m
    pub rho: f64,
    /// bearing of the max-density point, rad
    pub theta: f64,
}

impl IpppModel {
    /// Coefficients in km⁻¹..km⁻⁴ and the max-density point in km (user at the origin).
    pub fn from_km(a: f64, b: f64, c: f64, d: f64, center_km: [f64; 2]) -> Self {
        Self::with_center(a * 1e-3, b * 1e-6, c * 1e-9, d * 1e-12, [center_km[0] * 1e3, center_km[1] * 1e3])
    }

    pub fn with_center(a: f64, b: f64, c: f64, d: f64, center: [f64; 2]) -> Self {
        IpppModel { a, b, c, d, rho: center[0].hypot(center[1]), theta: center[1].atan2(center[0]) }
    }

    /// Homogeneous PPP of density λ.
    pub fn homogeneous(lambda: f64) -> Self {
        IpppModel { a: 0.0, b: lambda, c: 0.0, d: 0.0, rho: 0.0, theta: 0.0 }
    }

    pub fn center(&self) -> [f64; 2] {
        [self.rho * self.theta.cos(), self.rho * self.theta.sin()]
    }

    /// λ as a function of the distance Δ to the max-density point.
    pub fn density_at_delta(&self, delta: f64) -> f64 {
        let poly = self.b + delta * (self.c + self.d * delta);
        if self.a == 0.0 {
            poly
        } else {
            self.a / delta + poly
        }
    }

    /// ∂λ/∂Δ.
    pub fn density_slope(&self, delta: f64) -> f64 {
        -self.a / (delta * delta) + self.c + 2.0 * self.d * delta
    }

    /// λ at a planar point (m) relative to the user.
    pub fn density(&self, x: [f64; 2]) -> f64 {
        let c = self.center();
        self.density_at_delta((x[0] - c[0]).hypot(x[1] - c[1]))
    }

    pub fn scaled(&self, s: f64) -> Self {
        IpppModel { a: self.a * s, b: self.b * s, c: self.c * s, d: self.d * s, ..*self }
    }

    /// ∫_0^{2π} dθ/Δ and ∫_0^{2π} Δ dθ on the circle of radius r.
    pub fn angular_moments(&self, r: f64) -> Result<(f64, f64), PpError> {
        let rho = self.rho;
        let s = r + rho;
        if s == 0.0 {
            return Ok((f64::INFINITY, 0.0));
        }
        let t = (r - rho) / s;
        let mc = t * t;
        if mc == 0.0 {
            return Err(PpError::Singular(rho));
        }
        let m1 = 4.0 * r * rho / (s * s);
        let (k, e) = elliptic_ke_complement(m1.min(1.0 - mc), mc).map_err(|e| PpError::Numeric(e.to_string()))?;
        Ok((4.0 * k / s, 4.0 * s * e))
    }

    /// Λ'(r): expected number of BSs per unit radius at distance r.
    pub fn intensity_derivative(&self, r: f64) -> Result<f64, PpError> {
        if r < 0.0 {
            return Err(invalid("r", "must be nonnegative"));
        }
        if r == 0.0 {
            return Ok(0.0);
        }
        let (inv, lin) = if self.a == 0.0 && self.c == 0.0 { (0.0, 0.0) } else { self.angular_moments(r)? };
        let mut v = 2.0 * PI * (self.b + self.d * (r * r + self.rho * self.rho));
        if self.a != 0.0 {
            v += self.a * inv;
        }
        if self.c != 0.0 {
            v += self.c * lin;
        }
        Ok(r * v)
    }

    /// Λ(r): expected number of BSs within distance r of the user.
    pub fn intensity_measure(&self, r: f64) -> Result<f64, PpError> {
        if r < 0.0 {
            return Err(invalid("r", "must be nonnegative"));
        }
        let closed = PI * self.b * r * r + PI * self.d * (0.5 * r.powi(4) + self.rho * self.rho * r * r);
        if self.a == 0.0 && self.c == 0.0 {
            return Ok(closed);
        }
        let f = |s: f64| -> f64 {
            match self.angular_moments(s) {
                Ok((inv, lin)) => s * (self.a * inv + self.c * lin),
                Err(_) => 0.0,
            }
        };
        let mut pieces = vec![0.0];
        if self.rho > 0.0 && self.rho < r {
            pieces.push(self.rho);
        }
        pieces.push(r);
        let mut total = closed;
        for w in pieces.windows(2) {
            let e = tanh_sinh(f, w[0], w[1], 1e-12);
            // Λ counts base stations, so an absolute error of 1e-8 is ample
            if !e.converged && e.error > 1e-8 * e.value.abs().max(1.0) {
                return Err(PpError::Numeric(format!("Λ on [{}, {}]: error {:e}", w[0], w[1], e.error)));
            }
            total += e.value;
        }
        Ok(total)
    }

    /// PDF of the distance to the nearest BS on [r_e, τ], conditioned on at least one BS.
    pub fn nearest_bs_pdf(&self, r0: f64, geom: &GeometryConfig) -> Result<f64, PpError> {
        if r0 < geom.r_e || r0 > geom.tau {
            return Ok(0.0);
        }
        let l_e = self.intensity_measure(geom.r_e)?;
        let mass = self.intensity_measure(geom.tau)? - l_e;
        if !(mass > 1e-300) {
            return Err(PpError::EmptyRegion(mass));
        }
        let l0 = self.intensity_measure(r0)? - l_e;
        Ok(self.intensity_derivative(r0)? * (-l0).exp() / (-(-mass).exp_m1()))
    }

    /// Same model seen from a user located at `uc` (m).
    pub fn recenter(&self, uc: [f64; 2]) -> Self {
        let c = self.center();
        let nc = [c[0] - uc[0], c[1] - uc[1]];
        IpppModel { rho: nc[0].hypot(nc[1]), theta: nc[1].atan2(nc[0]), ..*self }
    }

    /// Constraint violations of λ >= 0 and ∂λ/∂Δ <= 0 over the Δ range the τ-disk reaches.
    pub fn validate_density(&self, tau: f64) -> Vec<DensityViolation> {
        validate_density(self, tau)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ViolationKind {
    Negative,
    Increasing,
}

/// A Δ-interval where a density constraint fails; `worst` is the extreme offending value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityViolation {
    pub kind: ViolationKind,
    pub delta_from: f64,
    pub delta_to: f64,
    pub worst: f64,
}

pub fn validate_density(model: &IpppModel, tau: f64) -> Vec<DensityViolation> {
    let lo = (model.rho - tau).max(0.0);
    let hi = model.rho + tau;
    let n = 4000;
    let mut out: Vec<DensityViolation> = Vec::new();
    let mut open: [Option<DensityViolation>; 2] = [None, None];
    for k in 0..=n {
        let mut delta = lo + (hi - lo) * k as f64 / n as f64;
        if delta == 0.0 {
            delta = 1e-9 * hi.max(1.0);
        }
        let checks = [
            (ViolationKind::Negative, model.density_at_delta(delta), model.density_at_delta(delta) < 0.0),
            (ViolationKind::Increasing, model.density_slope(delta), model.density_slope(delta) > 0.0),
        ];
        for (slot, (kind, value, bad)) in open.iter_mut().zip(checks) {
            match (slot.as_mut(), bad) {
                (Some(v), true) => {
                    v.delta_to = delta;
                    let worse = match kind {
                        ViolationKind::Negative => value < v.worst,
                        ViolationKind::Increasing => value > v.worst,
                    };
                    if worse {
                        v.worst = value;
                    }
                }
                (None, true) => *slot = Some(DensityViolation { kind, delta_from: delta, delta_to: delta, worst: value }),
                (Some(_), false) => out.push(slot.take().unwrap()),
                (None, false) => {}
            }
        }
    }
    out.extend(open.into_iter().flatten());
    out
}

/// Exact I-PPP sampler on the annulus [r_e, τ].
///
/// Candidates come from the dominating intensity ã/Δ + M, where M bounds the
/// polynomial part b̃ + c̃Δ + d̃Δ² over the Δ range of the disk; each candidate is
/// kept with probability λ/(ã/Δ + M). The ã/Δ component is a uniform-in-Δ
/// cloud around the max-density point, so no cap on 1/Δ is needed.
#[derive(Debug, Clone)]
pub struct IpppSampler {
    model: IpppModel,
    geom: GeometryConfig,
    center: [f64; 2],
    reach: f64,
    a_pos: f64,
    poly_max: f64,
}

impl IpppSampler {
    pub fn new(model: &IpppModel, geom: &GeometryConfig) -> Self {
        let reach = model.rho + geom.tau;
        let lo = (model.rho - geom.tau).max(0.0);
        let poly = |x: f64| model.b + x * (model.c + model.d * x);
        let mut m = poly(lo).max(poly(reach));
        if model.d != 0.0 {
            let v = -model.c / (2.0 * model.d);
            if v > lo && v < reach {
                m = m.max(poly(v));
            }
        }
        IpppSampler { model: *model, geom: *geom, center: model.center(), reach, a_pos: model.a.max(0.0), poly_max: m.max(0.0) }
    }

    /// Mean number of candidates per realization.
    pub fn proposal_mean(&self) -> f64 {
        2.0 * PI * self.a_pos * self.reach + self.poly_max * PI * self.geom.tau * self.geom.tau
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Deployment {
        let mut points = Vec::new();
        self.sample_into(rng, &mut points);
        Deployment { points }
    }

    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, points: &mut Vec<[f64; 2]>) {
        points.clear();
        let (re2, tau2) = (self.geom.r_e * self.geom.r_e, self.geom.tau * self.geom.tau);
        let mut consider = |x: [f64; 2], rng: &mut R| {
            let u = x[0] * x[0] + x[1] * x[1];
            if u < re2 || u > tau2 {
                return;
            }
            let (dx, dy) = (x[0] - self.center[0], x[1] - self.center[1]);
            let delta = (dx * dx + dy * dy).sqrt();
            let lam = self.model.density_at_delta(delta);
            let prop = self.a_pos / delta + self.poly_max;
            if lam > 0.0 && rng.random::<f64>() * prop < lam {
                points.push(x);
            }
        };
        if self.a_pos > 0.0 {
            let n = poisson(2.0 * PI * self.a_pos * self.reach, rng);
            for _ in 0..n {
                let d = rng.random::<f64>() * self.reach;
                let phi = rng.random::<f64>() * 2.0 * PI;
                let x = [self.center[0] + d * phi.cos(), self.center[1] + d * phi.sin()];
                consider(x, rng);
            }
        }
        if self.poly_max > 0.0 {
            let n = poisson(self.poly_max * PI * tau2, rng);
            for _ in 0..n {
                let r = (rng.random::<f64>() * tau2).sqrt();
                let (s, c) = (rng.random::<f64>() * 2.0 * PI).sin_cos();
                consider([r * c, r * s], rng);
            }
        }
    }
}

pub fn sample_ippp<R: Rng + ?Sized>(model: &IpppModel, geom: &GeometryConfig, rng: &mut R) -> Deployment {
    IpppSampler::new(model, geom).sample(rng)
}

/// Tabulated Λ on [0, r_max]: panel mesh graded towards ρ̃ with cumulative sums
/// at the panel ends; interior values use a Gauss rule on the partial panel.
#[derive(Debug, Clone)]
pub struct RadialTable {
    model: IpppModel,
    breaks: Vec<f64>,
    cum: Vec<f64>,
    rule: GaussLegendre,
}

impl RadialTable {
    pub fn new(model: &IpppModel, r_max: f64) -> Result<Self, PpError> {
        let rule = GaussLegendre::new(12);
        let focus: Vec<f64> = if model.rho > 0.0 && model.rho < r_max { vec![model.rho] } else { vec![] };
        let step = (r_max / 200.0).clamp(1.0, 50.0);
        let breaks = graded_breaks(0.0, r_max, &focus, step, 1e-7 * r_max.max(1.0));
        let mut cum = vec![0.0; breaks.len()];
        for k in 1..breaks.len() {
            let (a, b) = (breaks[k - 1], breaks[k]);
            let mut s = 0.0;
            for (x, w) in rule.mapped(a, b) {
                s += w * model.intensity_derivative(x)?;
            }
            cum[k] = cum[k - 1] + s;
        }
        Ok(RadialTable { model: *model, breaks, cum, rule })
    }

    pub fn r_max(&self) -> f64 {
        *self.breaks.last().unwrap()
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    /// Nearest-BS distance PDF on [r_e, τ] (τ <= r_max), conditioned on at least one BS.
    pub fn nearest_bs_pdf(&self, r0: f64, geom: &GeometryConfig) -> Result<f64, PpError> {
        if r0 < geom.r_e || r0 > geom.tau {
            return Ok(0.0);
        }
        let l_e = self.measure(geom.r_e);
        let mass = self.measure(geom.tau) - l_e;
        if !(mass > 1e-300) {
            return Err(PpError::EmptyRegion(mass));
        }
        let l0 = self.measure(r0) - l_e;
        Ok(self.model.intensity_derivative(r0)? * (-l0).exp() / (-(-mass).exp_m1()))
    }

    /// Λ(r) for 0 <= r <= r_max.
    pub fn measure(&self, r: f64) -> f64 {
        let r = r.clamp(0.0, self.r_max());
        let k = match self.breaks.binary_search_by(|x| x.partial_cmp(&r).unwrap()) {
            Ok(k) => return self.cum[k],
            Err(k) => k - 1,
        };
        let a = self.breaks[k];
        let mut s = self.cum[k];
        for (x, w) in self.rule.mapped(a, r) {
            s += w * self.model.intensity_derivative(x).unwrap_or(0.0);
        }
        s
    }
}

// ---------------------------------------------------------------------------
// Density fitting

/// Least-squares radial density fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityFit {
    pub model: IpppModel,
    /// RMS of the binned density residuals, 1/m²
    pub residual: f64,
    pub n_points: usize,
    pub warnings: Vec<String>,
    pub violations: Vec<DensityViolation>,
}

/// Fit ã..d̃ to points (m) by binning the empirical density in Δ-annuli of the
/// given center out to radius `tau`.
pub fn fit_radial_density(points: &[[f64; 2]], center: [f64; 2], tau: f64, n_bins: usize) -> Result<DensityFit, PpError> {
    if n_bins < 4 {
        return Err(PpError::InsufficientData(format!("{n_bins} bins cannot determine 4 coefficients")));
    }
    let deltas: Vec<f64> = points
        .iter()
        .map(|p| (p[0] - center[0]).hypot(p[1] - center[1]))
        .filter(|&d| d <= tau)
        .collect();
    if deltas.len() < 4 {
        return Err(PpError::InsufficientData(format!("{} points inside the fit radius", deltas.len())));
    }
    let mut warnings = Vec::new();
    if deltas.len() < 4 * n_bins {
        warnings.push(format!("{} points for {n_bins} bins; at least {} recommended", deltas.len(), 4 * n_bins));
    }
    let mut counts = vec![0.0; n_bins];
    for d in &deltas {
        let k = ((d / tau) * n_bins as f64).floor() as usize;
        counts[k.min(n_bins - 1)] += 1.0;
    }
    let (coef, residual) = fit_annulus_counts(&counts, tau)?;
    let model = IpppModel::with_center(coef[0], coef[1], coef[2], coef[3], center);
    // the fitted model is validated around its own center
    let violations = validate_density(&IpppModel { rho: 0.0, ..model }, tau);
    for v in &violations {
        warnings.push(format!(
            "{:?} density on Δ ∈ [{:.0}, {:.0}] m (worst {:e})",
            v.kind, v.delta_from, v.delta_to, v.worst
        ));
    }
    Ok(DensityFit { model, residual, n_points: deltas.len(), warnings, violations })
}

/// Area-weighted least squares of ã..d̃ from counts in equal-width Δ-annuli
/// covering [0, tau]. Returns the coefficients and the RMS density residual.
pub fn fit_annulus_counts(counts: &[f64], tau: f64) -> Result<([f64; 4], f64), PpError> {
    let n_bins = counts.len();
    if n_bins < 4 {
        return Err(PpError::InsufficientData(format!("{n_bins} bins cannot determine 4 coefficients")));
    }
    // regressors are annulus averages of (1/Δ, 1, Δ, Δ²) against the area element 2πΔ dΔ
    let mut ata = [[0.0f64; 4]; 4];
    let mut atb = [0.0f64; 4];
    let mut rows = Vec::with_capacity(n_bins);
    for (k, &cnt) in counts.iter().enumerate() {
        let d0 = tau * k as f64 / n_bins as f64;
        let d1 = tau * (k + 1) as f64 / n_bins as f64;
        let area = PI * (d1 * d1 - d0 * d0);
        let x = [
            2.0 * PI * (d1 - d0) / area,
            1.0,
            2.0 * PI * (d1.powi(3) - d0.powi(3)) / 3.0 / area,
            2.0 * PI * (d1.powi(4) - d0.powi(4)) / 4.0 / area,
        ];
        let y = cnt / area;
        for i in 0..4 {
            atb[i] += area * x[i] * y;
            for j in 0..4 {
                ata[i][j] += area * x[i] * x[j];
            }
        }
        rows.push((x, y));
    }
    let coef = solve4(ata, atb).ok_or_else(|| PpError::InsufficientData("singular normal equations".into()))?;
    let residual = (rows
        .iter()
        .map(|(x, y)| {
            let f: f64 = (0..4).map(|i| coef[i] * x[i]).sum();
            (f - y).powi(2)
        })
        .sum::<f64>()
        / n_bins as f64)
        .sqrt();
    Ok((coef, residual))
}

fn solve4(mut a: [[f64; 4]; 4], mut b: [f64; 4]) -> Option<[f64; 4]> {
    // column scaling keeps the normal equations well conditioned across km/m magnitudes
    let mut scale = [0.0; 4];
    for j in 0..4 {
        scale[j] = a[j][j].sqrt();
        if scale[j] == 0.0 {
            return None;
        }
    }
    for i in 0..4 {
        for j in 0..4 {
            a[i][j] /= scale[i] * scale[j];
        }
        b[i] /= scale[i];
    }
    for col in 0..4 {
        let piv = (col..4).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())?;
        if a[piv][col].abs() < 1e-14 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..4 {
            let f = a[row][col] / a[col][col];
            for k in col..4 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 4];
    for i in (0..4).rev() {
        let s: f64 = (i + 1..4).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some([x[0] / scale[0], x[1] / scale[1], x[2] / scale[2], x[3] / scale[3]])
}

/// Read BS coordinates: a `unit: km` or `unit: m` header line, then one `x,y`
/// pair per line (comma, semicolon, tab or space separated). `#` starts a comment.
/// Returns coordinates in metres.
pub fn read_bs_dataset<R: BufRead>(reader: R) -> Result<Vec<[f64; 2]>, PpError> {
    let mut factor: Option<f64> = None;
    let mut out = Vec::new();
    for (k, line) in reader.lines().enumerate() {
        let line = line?;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        if factor.is_none() {
            let lower = body.to_ascii_lowercase();
            let unit = lower
                .strip_prefix("unit")
                .map(|s| s.trim_start_matches([':', '=', ' ', '\t']).trim())
                .ok_or_else(|| PpError::Parse { line: k + 1, reason: "expected a `unit: km|m` header".into() })?;
            factor = Some(match unit {
                "km" => 1e3,
                "m" => 1.0,
                other => return Err(PpError::Parse { line: k + 1, reason: format!("unknown unit `{other}`") }),
            });
            continue;
        }
        let fields: Vec<&str> = body.split([',', ';', '\t', ' ']).filter(|s| !s.is_empty()).collect();
        if fields.len() < 2 {
            return Err(PpError::Parse { line: k + 1, reason: "need two coordinates".into() });
        }
        let parse = |s: &str| s.parse::<f64>().map_err(|e| PpError::Parse { line: k + 1, reason: e.to_string() });
        let f = factor.unwrap();
        out.push([parse(fields[0])? * f, parse(fields[1])? * f]);
    }
    if factor.is_none() {
        return Err(PpError::Parse { line: 0, reason: "empty dataset".into() });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::adaptive;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn brussels() -> IpppModel {
        IpppModel::from_km(0.050, 5.241, -0.973, 0.048, [-0.145, -0.569])
    }

    fn paris() -> BetaGppModel {
        BetaGppModel::new(6.17e-6, 0.75, 50).unwrap()
    }

    #[test]
    fn bgpp_pdf_examples() {
        let m = paris();
        let rate = m.rate();
        for &u in &[0.0, 1e4, 1e5, 1e6] {
            assert!((bgpp_distance_pdf(1, u, &m) - rate * (-rate * u).exp()).abs() < 1e-15 * rate);
        }
        // mean of Y_1 = β/(πλ)
        let mean = adaptive(|u: f64| u * bgpp_distance_pdf(1, u, &m), &[0.0, 1e5, 1e6, 1e7], 1e-9, 1e-12, 500).value;
        assert!((mean / (0.75 / (PI * 6.17e-6)) - 1.0).abs() < 1e-9);
        // i = 40 at the mode against a log-gamma oracle
        let i = 40;
        let u = (i as f64 - 1.0) / rate;
        let lg = statrs::function::gamma::ln_gamma(i as f64);
        let oracle = ((i as f64 - 1.0) * u.ln() - rate * u + i as f64 * rate.ln() - lg).exp();
        assert!((bgpp_distance_pdf(i, u, &m) / oracle - 1.0).abs() < 1e-10);
    }

    #[test]
    fn bgpp_index_cutoff_covers_disk() {
        let m = paris();
        let k = m.index_cutoff(6000.0f64.powi(2), 1e-6);
        assert!(regularized_lower_gamma_real(k as u32, m.rate() * 3.6e7) < 1e-6);
        assert!(k > 900 && k < 1300, "{k}");
    }

    #[test]
    fn bgpp_sampler_mean_count() {
        let m = paris();
        let geom = GeometryConfig::new(0.0, 6000.0).unwrap();
        let s = BgppSampler::new(&m, &geom).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut buf = Vec::new();
        let n = 400;
        let mut tot = 0.0;
        let mut tot2 = 0.0;
        for _ in 0..n {
            s.sample_sq(&mut rng, &mut buf);
            let c = buf.len() as f64;
            tot += c;
            tot2 += c * c;
        }
        let mean = tot / n as f64;
        let sd = ((tot2 / n as f64 - mean * mean) / n as f64).sqrt();
        let expect = 6.17e-6 * PI * 3.6e7;
        assert!((expect - 697.8).abs() < 0.1);
        assert!((mean - expect).abs() < 3.0 * sd + 0.5, "{mean} vs {expect} (sd {sd})");
    }

    #[test]
    fn beta_one_keeps_everything() {
        let m = BetaGppModel::new(6.17e-6, 1.0, 50).unwrap();
        let geom = GeometryConfig::new(0.0, 2000.0).unwrap();
        let s = BgppSampler::new(&m, &geom).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut buf = Vec::new();
        let mut tot = 0usize;
        for _ in 0..2000 {
            s.sample_sq(&mut rng, &mut buf);
            tot += buf.len();
        }
        let mean = tot as f64 / 2000.0;
        let expect = 6.17e-6 * PI * 4e6;
        // Ginibre counts are sub-Poisson, so the Poisson standard error is conservative
        assert!((mean - expect).abs() < 3.0 * (expect / 2000.0).sqrt());
    }

    #[test]
    fn homogeneous_intensity() {
        let m = IpppModel::homogeneous(5e-6);
        assert!((m.intensity_measure(1000.0).unwrap() - PI * 5e-6 * 1e6).abs() < 1e-12);
        assert!((m.intensity_derivative(1000.0).unwrap() - 2.0 * PI * 5e-6 * 1000.0).abs() < 1e-15);
    }

    #[test]
    fn d_only_closed_form() {
        let m = IpppModel { a: 0.0, b: 0.0, c: 0.0, d: 2e-13, rho: 800.0, theta: 0.3 };
        let r = 3000.0f64;
        let expect = PI * 2e-13 * (0.5 * r.powi(4) + 800.0f64.powi(2) * r * r);
        assert!((m.intensity_measure(r).unwrap() / expect - 1.0).abs() < 1e-13);
    }

    // Λ(r) by brute-force polar quadrature of λ over the disk
    fn disk_integral(m: &IpppModel, r: f64) -> f64 {
        let mut total = 0.0;
        let ring = |s: f64| -> f64 {
            let t = m.theta;
            let e = adaptive(|a: f64| m.density([s * a.cos(), s * a.sin()]), &[t - PI, t, t + PI], 1e-14, 1e-12, 2000);
            e.value * s
        };
        let mut b = vec![0.0, r];
        if m.rho > 0.0 && m.rho < r {
            b.push(m.rho);
        }
        b.sort_by(|x, y| x.partial_cmp(y).unwrap());
        for w in b.windows(2) {
            // geometric panels towards the singular radius
            let e = adaptive(ring, &[w[0], w[1]], 1e-10, 1e-11, 4000);
            total += e.value;
        }
        total
    }

    #[test]
    fn brussels_intensity_matches_disk_integral() {
        let m = brussels();
        for &r in &[300.0, 587.0 + 10.0, 2000.0, 7000.0] {
            let l = m.intensity_measure(r).unwrap();
            let o = disk_integral(&m, r);
            assert!((l / o - 1.0).abs() < 1e-6, "r={r}: {l} vs {o}");
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let m = brussels();
        let radii: Vec<f64> = (1..=20).map(|k| 350.0 * k as f64).collect();
        for r in radii {
            if (r - m.rho).abs() < 30.0 {
                continue;
            }
            let h = 1e-2 * (r - m.rho).abs().min(r).min(50.0);
            let fd = (m.intensity_measure(r + h).unwrap() - m.intensity_measure(r - h).unwrap()) / (2.0 * h);
            let d = m.intensity_derivative(r).unwrap();
            assert!((fd / d - 1.0).abs() < 1e-6, "r={r}: {fd} vs {d}");
        }
        assert!(matches!(m.intensity_derivative(m.rho), Err(PpError::Singular(_))));
    }

    #[test]
    fn central_density_special_case() {
        let m = IpppModel { rho: 0.0, ..brussels() };
        let r = 1234.0;
        let expect = 2.0 * PI * r * (m.a / r + m.b + m.c * r + m.d * r * r);
        assert!((m.intensity_derivative(r).unwrap() / expect - 1.0).abs() < 1e-13);
    }

    #[test]
    fn table_matches_direct_measure() {
        let m = brussels();
        let t = RadialTable::new(&m, 7000.0).unwrap();
        for &r in &[0.0, 10.0, 586.9, 587.3, 1500.0, 6999.0, 7000.0] {
            let a = t.measure(r);
            let b = m.intensity_measure(r).unwrap();
            assert!((a - b).abs() < 1e-8 * b.max(1e-3), "r={r}: {a} vs {b}");
        }
    }

    #[test]
    fn nearest_pdf_normalizes_and_reduces() {
        let m = brussels();
        let geom = GeometryConfig::new(0.0, 7000.0).unwrap();
        let t = RadialTable::new(&m, 7000.0).unwrap();
        for &r in &[100.0, 1000.0, 5000.0] {
            let a = t.nearest_bs_pdf(r, &geom).unwrap();
            let b = m.nearest_bs_pdf(r, &geom).unwrap();
            assert!((a / b - 1.0).abs() < 1e-8);
        }
        let e = adaptive(
            |r: f64| t.nearest_bs_pdf(r, &geom).unwrap_or(0.0),
            &[0.0, 300.0, m.rho - 1.0, m.rho, m.rho + 1.0, 1500.0, 3000.0, 7000.0],
            1e-12,
            1e-11,
            4000,
        );
        assert!((e.value - 1.0).abs() < 1e-8, "{}", e.value);
        let h = IpppModel::homogeneous(6e-6);
        let big = GeometryConfig::new(0.0, 20_000.0).unwrap();
        let r = 250.0;
        let classic = 2.0 * PI * 6e-6 * r * (-PI * 6e-6 * r * r).exp();
        assert!((h.nearest_bs_pdf(r, &big).unwrap() / classic - 1.0).abs() < 1e-12);
    }

    #[test]
    fn recenter_examples() {
        let m = brussels();
        let same = m.recenter([0.0, 0.0]);
        assert!((same.rho - m.rho).abs() < 1e-9 && (same.theta - m.theta).abs() < 1e-12);
        let at_peak = m.recenter(m.center());
        assert!(at_peak.rho < 1e-9);
        let off = m.recenter([-3000.0, -3000.0]);
        assert!((off.rho - 2855.0f64.hypot(2431.0)).abs() < 1e-6);
        let back = off.recenter([3000.0, 3000.0]);
        assert!((back.rho - m.rho).abs() < 1e-9);
    }

    #[test]
    fn validate_density_examples() {
        let m = brussels();
        assert!(m.validate_density(7000.0).is_empty());
        let neg = IpppModel { a: 0.0, b: -1e-6, c: 0.0, d: 0.0, rho: 0.0, theta: 0.0 };
        assert!(neg.validate_density(1000.0).iter().any(|v| v.kind == ViolationKind::Negative));
        let up = IpppModel { d: 1e-9, ..brussels() };
        assert!(up.validate_density(7000.0).iter().any(|v| v.kind == ViolationKind::Increasing));
        // the corner user of the Brussels map reaches the rising tail of the quartic
        let corner = m.recenter([-3000.0, -3000.0]);
        let v = corner.validate_density(7000.0);
        assert!(v.iter().any(|v| v.kind == ViolationKind::Increasing && v.delta_to > 10_000.0));
    }

    #[test]
    fn ippp_sampler_homogeneous_accepts_all() {
        let m = IpppModel::homogeneous(5e-6);
        let geom = GeometryConfig::new(0.0, 3000.0).unwrap();
        let s = IpppSampler::new(&m, &geom);
        assert!((s.proposal_mean() - 5e-6 * PI * 9e6).abs() < 1e-9);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut tot = 0;
        for _ in 0..500 {
            tot += s.sample(&mut rng).len();
        }
        let mean = tot as f64 / 500.0;
        let expect = 5e-6 * PI * 9e6;
        assert!((mean - expect).abs() < 3.0 * (expect / 500.0).sqrt());
    }

    #[test]
    fn ippp_sampler_count_matches_measure() {
        let m = brussels();
        let geom = GeometryConfig::new(0.0, 12_000.0).unwrap();
        let s = IpppSampler::new(&m, &geom);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 300;
        let mut tot = 0;
        for _ in 0..n {
            tot += s.sample(&mut rng).len();
        }
        let mean = tot as f64 / n as f64;
        let expect = m.intensity_measure(12_000.0).unwrap();
        assert!((mean - expect).abs() < 3.0 * (expect / n as f64).sqrt(), "{mean} vs {expect}");
    }

    #[test]
    fn ippp_sampler_angular_shape() {
        // counts in 8 sectors of the 2 km disk against the integrated density
        let m = brussels();
        let geom = GeometryConfig::new(0.0, 2000.0).unwrap();
        let s = IpppSampler::new(&m, &geom);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let sectors = 8;
        let mut counts = vec![0.0; sectors];
        let n = 3000;
        for _ in 0..n {
            for p in s.sample(&mut rng).points {
                let a = p[1].atan2(p[0]).rem_euclid(2.0 * PI);
                counts[((a / (2.0 * PI) * sectors as f64) as usize).min(sectors - 1)] += 1.0;
            }
        }
        let g = GaussLegendre::new(20);
        let mut chi2 = 0.0;
        let mut peak = 0;
        for k in 0..sectors {
            let t0 = 2.0 * PI * k as f64 / sectors as f64;
            let t1 = t0 + 2.0 * PI / sectors as f64;
            let mut e = 0.0;
            for j in 0..40 {
                let r0 = 2000.0 * j as f64 / 40.0;
                let r1 = r0 + 50.0;
                e += g.integrate(|r: f64| g.integrate(|t: f64| m.density([r * t.cos(), r * t.sin()]), t0, t1) * r, r0, r1);
            }
            e *= n as f64;
            chi2 += (counts[k] - e).powi(2) / e;
            if counts[k] > counts[peak] {
                peak = k;
            }
        }
        // 7 degrees of freedom: 99.9% quantile is 24.3
        assert!(chi2 < 24.3, "chi2 = {chi2}");
        let theta = m.theta.rem_euclid(2.0 * PI);
        assert_eq!(peak, (theta / (2.0 * PI) * sectors as f64) as usize);
    }

    #[test]
    fn fit_recovers_exact_counts() {
        // noise-free annulus counts of a known centred model are fitted exactly
        let m = IpppModel { rho: 0.0, ..brussels() };
        let tau = 7000.0;
        let n = 28;
        let counts: Vec<f64> = (0..n)
            .map(|k| {
                let (d0, d1) = (tau * k as f64 / n as f64, tau * (k + 1) as f64 / n as f64);
                m.intensity_measure(d1).unwrap() - m.intensity_measure(d0).unwrap()
            })
            .collect();
        let (c, res) = fit_annulus_counts(&counts, tau).unwrap();
        for (got, want) in c.iter().zip([m.a, m.b, m.c, m.d]) {
            assert!((got / want - 1.0).abs() < 1e-8, "{got} vs {want}");
        }
        assert!(res < 1e-18);
    }

    #[test]
    fn fit_tracks_homogeneous_density() {
        let geom = GeometryConfig::new(0.0, 5000.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let d = sample_hppp(1e-4, &geom, &mut rng);
        let fit = fit_radial_density(&d.points, [0.0, 0.0], 5000.0, 20).unwrap();
        // individual coefficients trade off against each other; the fitted curve must not
        for &delta in &[1000.0, 2000.0, 3000.0, 4000.0, 4900.0] {
            let v = fit.model.density_at_delta(delta);
            assert!((v / 1e-4 - 1.0).abs() < 0.1, "Δ={delta}: {v}");
        }
    }

    #[test]
    fn fit_rejects_tiny_datasets() {
        let pts = [[0.0, 1.0], [1.0, 0.0], [2.0, 2.0]];
        assert!(matches!(fit_radial_density(&pts, [0.0, 0.0], 10.0, 8), Err(PpError::InsufficientData(_))));
    }

    #[test]
    fn dataset_parsing() {
        let text = "# BS sites\nunit: km\n1.0, 2.0\n-0.5;0.25\n3 4 # comment\n";
        let pts = read_bs_dataset(text.as_bytes()).unwrap();
        assert_eq!(pts, vec![[1000.0, 2000.0], [-500.0, 250.0], [3000.0, 4000.0]]);
        assert!(read_bs_dataset("1,2\n".as_bytes()).is_err());
        assert!(read_bs_dataset("unit: m\n1\n".as_bytes()).is_err());
    }
}
