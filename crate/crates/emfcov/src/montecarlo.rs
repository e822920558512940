//! Monte Carlo oracle: deployments, fading and beam gains drawn per
//! realization, with empirical laws of exposure and SINR.
//!
//! Realization k always draws from ChaCha8 stream k of the master seed, so
//! results do not depend on thread count or scheduling.

use crate::model::{BeamformingConfig, GeometryConfig, RadioConfig};
use crate::pointprocess::{BetaGppModel, BgppSampler, IpppModel, IpppSampler, PpError};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Poisson};
use rayon::prelude::*;
use std::io::Write;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimulationError {
    #[error("invalid plan: {0}")]
    Invalid(String),
    #[error("only {retained} realizations fall in the conditioning window (need {needed})")]
    InsufficientConditioning { retained: usize, needed: usize },
    #[error(transparent)]
    PointProcess(#[from] PpError),
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Topology {
    Bgpp(BetaGppModel),
    Ippp(IpppModel),
    /// homogeneous PPP of the given density (1/m²)
    Hppp(f64),
}

#[derive(Debug, Clone, Copy)]
pub struct SimulationPlan {
    pub topology: Topology,
    pub radio: RadioConfig,
    pub geom: GeometryConfig,
    pub bf: BeamformingConfig,
    pub sigma2: f64,
    pub n_realizations: usize,
    pub seed: u64,
}

impl SimulationPlan {
    pub fn validate(&self) -> Result<(), SimulationError> {
        if self.n_realizations < 1 {
            return Err(SimulationError::Invalid("n_realizations must be >= 1".into()));
        }
        if !(self.sigma2 >= 0.0) {
            return Err(SimulationError::Invalid("noise power must be >= 0".into()));
        }
        self.radio.validate()?;
        self.geom.validate()?;
        self.bf.validate()?;
        match self.topology {
            Topology::Bgpp(m) => m.validate()?,
            Topology::Hppp(l) if !(l >= 0.0 && l.is_finite()) => return Err(SimulationError::Invalid("density must be >= 0".into())),
            _ => {}
        }
        Ok(())
    }
}

/// Sorted sample of a scalar law.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistribution {
    samples: Vec<f64>,
}

impl EmpiricalDistribution {
    pub fn new(mut samples: Vec<f64>) -> Result<Self, SimulationError> {
        if samples.is_empty() {
            return Err(SimulationError::Invalid("empty sample".into()));
        }
        if samples.iter().any(|x| x.is_nan()) {
            return Err(SimulationError::Invalid("NaN in sample".into()));
        }
        samples.sort_by(|a, b| a.total_cmp(b));
        Ok(EmpiricalDistribution { samples })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// Fraction of samples <= x.
    pub fn cdf(&self, x: f64) -> f64 {
        self.samples.partition_point(|&v| v <= x) as f64 / self.len() as f64
    }

    /// Fraction of samples > x.
    pub fn ccdf(&self, x: f64) -> f64 {
        1.0 - self.cdf(x)
    }

    /// Smallest sample with empirical CDF >= p.
    pub fn quantile(&self, p: f64) -> f64 {
        let n = self.len();
        let k = ((p.clamp(0.0, 1.0) * n as f64).ceil() as usize).clamp(1, n);
        self.samples[k - 1]
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.len() as f64
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        let n = self.len();
        if n < 2 {
            return 0.0;
        }
        let m = self.mean();
        self.samples.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64
    }

    pub fn std_error(&self) -> f64 {
        (self.variance() / self.len() as f64).sqrt()
    }
}

/// Two-sample Kolmogorov-Smirnov distance sup|F_a - F_b| over the pooled support.
pub fn ks_distance(a: &EmpiricalDistribution, b: &EmpiricalDistribution) -> f64 {
    let (x, y) = (&a.samples, &b.samples);
    let (n, m) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < x.len() && j < y.len() {
        let v = x[i].min(y[j]);
        while i < x.len() && x[i] <= v {
            i += 1;
        }
        while j < y.len() && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// One-sample KS distance against a CDF.
pub fn ks_distance_to<F: Fn(f64) -> f64>(a: &EmpiricalDistribution, cdf: F) -> f64 {
    let n = a.len() as f64;
    let s = &a.samples;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < s.len() {
        let v = s[i];
        let lo = i as f64 / n;
        while i < s.len() && s[i] == v {
            i += 1;
        }
        let f = cdf(v);
        d = d.max((f - lo).abs()).max((f - i as f64 / n).abs());
    }
    d
}

/// Largest |F(x) - G(x)| over a set of (x, G(x)) pairs, e.g. analytic values on a grid.
pub fn max_gap_on_grid<F: Fn(f64) -> f64>(points: &[(f64, f64)], f: F) -> f64 {
    points.iter().map(|&(x, g)| (f(x) - g).abs()).fold(0.0, f64::max)
}

/// Per-realization outputs. Realizations without a BS have exposure 0, SINR 0
/// and a NaN nearest distance.
#[derive(Debug, Clone, Default)]
pub struct SimulationResult {
    pub exposure: Vec<f64>,
    pub sinr: Vec<f64>,
    pub serving: Vec<f64>,
    pub interference: Vec<f64>,
    pub nearest: Vec<f64>,
    /// interferer links and how many of them were illuminated
    pub links: u64,
    pub lit_links: u64,
}

impl SimulationResult {
    pub fn len(&self) -> usize {
        self.exposure.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exposure.is_empty()
    }

    pub fn empty_count(&self) -> usize {
        self.nearest.iter().filter(|r| r.is_nan()).count()
    }

    fn pick(&self, v: &[f64], include_empty: bool) -> Result<EmpiricalDistribution, SimulationError> {
        let data: Vec<f64> = v.iter().zip(&self.nearest).filter(|(_, r)| include_empty || !r.is_nan()).map(|(x, _)| *x).collect();
        EmpiricalDistribution::new(data)
    }

    /// Exposure law; `include_empty` keeps the zero-BS realizations as 𝒫 = 0.
    pub fn exposure_law(&self, include_empty: bool) -> Result<EmpiricalDistribution, SimulationError> {
        self.pick(&self.exposure, include_empty)
    }

    pub fn sinr_law(&self, include_empty: bool) -> Result<EmpiricalDistribution, SimulationError> {
        self.pick(&self.sinr, include_empty)
    }

    /// Empirical P[SINR > t, 𝒫 <= t_prime].
    pub fn joint_cdf(&self, t: f64, t_prime: f64, include_empty: bool) -> f64 {
        let mut hit = 0usize;
        let mut n = 0usize;
        for k in 0..self.len() {
            if !include_empty && self.nearest[k].is_nan() {
                continue;
            }
            n += 1;
            if self.sinr[k] > t && self.exposure[k] <= t_prime {
                hit += 1;
            }
        }
        hit as f64 / n.max(1) as f64
    }

    /// Empirical fraction of interferer links with gain 1.
    pub fn illumination_rate(&self) -> f64 {
        self.lit_links as f64 / self.links.max(1) as f64
    }

    /// Writes "realization,exposure,sinr" rows.
    pub fn write_samples<W: Write>(&self, mut w: W) -> Result<(), SimulationError> {
        writeln!(w, "realization,exposure_w,sinr")?;
        for k in 0..self.len() {
            writeln!(w, "{k},{:e},{:e}", self.exposure[k], self.sinr[k])?;
        }
        Ok(())
    }

    /// Statistics of the interference over realizations whose nearest BS lies
    /// in [r_lo, r_hi].
    pub fn conditioned(&self, r_lo: f64, r_hi: f64, qs: &[f64]) -> Result<ConditionedStatistics, SimulationError> {
        const NEEDED: usize = 100;
        let sel: Vec<f64> = self.interference.iter().zip(&self.nearest).filter(|(_, &r)| r >= r_lo && r <= r_hi).map(|(i, _)| *i).collect();
        if sel.len() < NEEDED {
            return Err(SimulationError::InsufficientConditioning { retained: sel.len(), needed: NEEDED });
        }
        let n = sel.len() as f64;
        let mean = sel.iter().sum::<f64>() / n;
        let second = sel.iter().map(|x| x * x).sum::<f64>() / n;
        let cf = qs
            .iter()
            .map(|&q| {
                let (mut re, mut im, mut re2, mut im2) = (0.0, 0.0, 0.0, 0.0);
                for &x in &sel {
                    let (s, c) = (q * x).sin_cos();
                    re += c;
                    im += s;
                    re2 += c * c;
                    im2 += s * s;
                }
                let v = Complex64::new(re / n, im / n);
                // standard error of the real and imaginary parts combined
                let se = ((re2 / n - v.re * v.re + im2 / n - v.im * v.im).max(0.0) / n).sqrt();
                (q, v, se)
            })
            .collect();
        Ok(ConditionedStatistics { retained: sel.len(), mean_interference: mean, second_moment: second, std_error: ((second - mean * mean).max(0.0) / n).sqrt(), cf })
    }
}

#[derive(Debug, Clone)]
pub struct ConditionedStatistics {
    pub retained: usize,
    pub mean_interference: f64,
    pub second_moment: f64,
    /// standard error of the mean interference
    pub std_error: f64,
    /// (q, E[e^{jqI}], standard error)
    pub cf: Vec<(f64, Complex64, f64)>,
}

enum Sampler {
    Bgpp(BgppSampler),
    Hppp { mean: f64, u0: f64, u1: f64 },
    Ippp(IpppSampler),
}

impl Sampler {
    fn new(plan: &SimulationPlan) -> Result<Sampler, SimulationError> {
        let g = &plan.geom;
        let hppp = |lambda: f64| Sampler::Hppp {
            mean: lambda * std::f64::consts::PI * (g.tau * g.tau - g.r_e * g.r_e),
            u0: g.r_e * g.r_e,
            u1: g.tau * g.tau,
        };
        Ok(match plan.topology {
            Topology::Bgpp(m) if m.is_poisson() => hppp(m.lambda),
            Topology::Bgpp(m) => Sampler::Bgpp(BgppSampler::new(&m, g)?),
            Topology::Hppp(l) => hppp(l),
            Topology::Ippp(m) => Sampler::Ippp(IpppSampler::new(&m, g)),
        })
    }

    fn squared_distances<R: Rng>(&self, rng: &mut R, out: &mut Vec<f64>, pts: &mut Vec<[f64; 2]>) {
        match self {
            Sampler::Bgpp(s) => s.sample_sq(rng, out),
            Sampler::Hppp { mean, u0, u1 } => {
                out.clear();
                if *mean > 0.0 {
                    let n = Poisson::new(*mean).expect("finite mean").sample(rng) as usize;
                    out.extend((0..n).map(|_| u0 + rng.random::<f64>() * (u1 - u0)));
                }
            }
            Sampler::Ippp(s) => {
                s.sample_into(rng, pts);
                out.clear();
                out.extend(pts.iter().map(|p| p[0] * p[0] + p[1] * p[1]));
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Draw {
    serving: f64,
    interference: f64,
    nearest: f64,
    links: u32,
    lit: u32,
}

/// RNG of realization k.
pub fn realization_rng(seed: u64, k: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k);
    rng
}

/// Runs the plan; realizations are evaluated in parallel and returned in index order.
pub fn simulate(plan: &SimulationPlan) -> Result<SimulationResult, SimulationError> {
    plan.validate()?;
    let sampler = Sampler::new(plan)?;
    let radio = plan.radio;
    let m = radio.m as f64;
    let fading = Gamma::new(m, 1.0 / m).map_err(|e| SimulationError::Invalid(e.to_string()))?;
    let p_g = plan.bf.p_g;
    let all_lit = !plan.bf.enabled || p_g >= 1.0;
    let draws: Vec<Draw> = (0..plan.n_realizations as u64)
        .into_par_iter()
        .map_init(
            || (Vec::new(), Vec::new()),
            |(sq, pts), k| {
                let mut rng = realization_rng(plan.seed, k);
                sampler.squared_distances(&mut rng, sq, pts);
                if sq.is_empty() {
                    return Draw { nearest: f64::NAN, ..Draw::default() };
                }
                let (imin, &u0) = sq.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap();
                let serving = radio.mean_rx_power_sq(u0) * fading.sample(&mut rng);
                let mut interference = 0.0;
                let mut lit = 0u32;
                for (i, &u) in sq.iter().enumerate() {
                    if i == imin {
                        continue;
                    }
                    if all_lit || rng.random::<f64>() < p_g {
                        lit += 1;
                        interference += radio.mean_rx_power_sq(u) * fading.sample(&mut rng);
                    }
                }
                Draw { serving, interference, nearest: u0.sqrt(), links: sq.len() as u32 - 1, lit }
            },
        )
        .collect();
    let mut out = SimulationResult::default();
    let n = draws.len();
    out.exposure.reserve(n);
    out.sinr.reserve(n);
    for d in draws {
        let empty = d.nearest.is_nan();
        out.exposure.push(d.serving + d.interference);
        out.sinr.push(if empty { 0.0 } else { d.serving / (d.interference + plan.sigma2) });
        out.serving.push(d.serving);
        out.interference.push(d.interference);
        out.nearest.push(d.nearest);
        out.links += d.links as u64;
        out.lit_links += d.lit as u64;
    }
    Ok(out)
}
