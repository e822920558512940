//! Command implementations behind the `emfcov` binary. Each command returns
//! plain tables so that callers (and tests) can inspect results before they
//! are serialized.

use crate::bgpp::{frechet_bounds, BgppStudy};
use crate::error::AnalyticsError;
use crate::inversion::{Probability, QuadratureConfig};
use crate::ippp::{spatial_map, MapMetric, MvStudy};
use crate::model::{db_to_linear, linear_to_db, BeamformingConfig, ExposureValue, ModelError};
use crate::montecarlo::{simulate, EmpiricalDistribution, SimulationError, SimulationPlan, SimulationResult, Topology};
use crate::pointprocess::{fit_radial_density, read_bs_dataset, PpError};
use crate::scenario::{ippp_topology_block, sha256_hex, Scenario, ScenarioError, ScenarioTopology};
use std::fmt::Write as _;
use std::io::Write;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
    #[error(transparent)]
    Simulation(#[from] SimulationError),
    #[error(transparent)]
    PointProcess(#[from] PpError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// Short machine-readable class, printed on the error line.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Scenario(_) => "scenario",
            CliError::Analytics(_) => "numeric",
            CliError::Simulation(_) => "simulation",
            CliError::PointProcess(_) => "dataset",
            CliError::Model(_) => "model",
            CliError::Io(_) => "io",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Delimited table with a name and free-form notes.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub notes: Vec<String>,
}

impl Table {
    fn new(name: &str, columns: &[&str]) -> Self {
        Table { name: name.into(), columns: columns.iter().map(|s| s.to_string()).collect(), ..Default::default() }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Column `name` of row `k` parsed as a number.
    pub fn value(&self, k: usize, name: &str) -> Option<f64> {
        let c = self.columns.iter().position(|s| s == name)?;
        self.rows.get(k)?.get(c)?.parse().ok()
    }

    pub fn column(&self, name: &str) -> Vec<f64> {
        (0..self.rows.len()).filter_map(|k| self.value(k, name)).collect()
    }
}

/// Provenance for the header comment.
#[derive(Debug, Clone)]
pub struct Provenance {
    pub command: String,
    pub source: String,
    pub hash: String,
    pub seed: Option<u64>,
}

impl Provenance {
    pub fn for_scenario(command: &str, sc: &Scenario, seed: Option<u64>) -> Self {
        Provenance { command: command.into(), source: sc.name.clone(), hash: sc.hash.clone(), seed }
    }
}

/// Writes tables as CSV: a provenance comment block, then per table a
/// `# table:` line, the column header and the rows.
pub fn write_tables<W: Write>(mut w: W, prov: &Provenance, tables: &[Table]) -> std::io::Result<()> {
    writeln!(w, "# emfcov {}", env!("CARGO_PKG_VERSION"))?;
    writeln!(w, "# command: {}", prov.command)?;
    writeln!(w, "# source: {} sha256={}", prov.source, prov.hash)?;
    match prov.seed {
        Some(s) => writeln!(w, "# seed: {s}")?,
        None => writeln!(w, "# seed: none")?,
    }
    for (k, t) in tables.iter().enumerate() {
        if k > 0 {
            writeln!(w)?;
        }
        writeln!(w, "# table: {}", t.name)?;
        for n in &t.notes {
            writeln!(w, "# {n}")?;
        }
        writeln!(w, "{}", t.columns.join(","))?;
        for r in &t.rows {
            writeln!(w, "{}", r.join(","))?;
        }
    }
    Ok(())
}

fn num(x: f64) -> String {
    format!("{x:.10e}")
}

/// Parses `lo:hi:n` (inclusive, n points) or a comma-separated list.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let spec = spec.trim();
    let bad = |e: &dyn std::fmt::Display| usage(format!("bad grid `{spec}`: {e}"));
    let v = if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(usage(format!("bad grid `{spec}`: expected lo:hi:n")));
        }
        let lo: f64 = parts[0].trim().parse().map_err(|e| bad(&e))?;
        let hi: f64 = parts[1].trim().parse().map_err(|e| bad(&e))?;
        let n: usize = parts[2].trim().parse().map_err(|e| bad(&e))?;
        crate::ippp::linspace(lo, hi, n)
    } else {
        spec.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>().map_err(|e| bad(&e)))
            .collect::<Result<Vec<_>, _>>()?
    };
    if v.is_empty() {
        return Err(usage("threshold grid is empty"));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(usage(format!("bad grid `{spec}`: values must be finite")));
    }
    Ok(v)
}

/// Analytic evaluator for either topology.
pub enum Engine {
    Mi(Box<BgppStudy>),
    Mv(Box<MvStudy>),
}

impl Engine {
    pub fn new(sc: &Scenario) -> Result<Self, CliError> {
        Ok(match &sc.topology {
            ScenarioTopology::Bgpp(m) => Engine::Mi(Box::new(BgppStudy::new(m, &sc.geom, &sc.radio, &sc.bf)?.with_quadrature(sc.quadrature))),
            ScenarioTopology::Ippp(m) => Engine::Mv(Box::new(MvStudy::new(m, &sc.geom, &sc.radio, &sc.bf)?.with_quadrature(sc.quadrature))),
        })
    }

    /// CDF of the received power (W).
    pub fn cdf_exposure(&self, t_prime: f64) -> Result<Probability, AnalyticsError> {
        match self {
            Engine::Mi(s) => s.cdf_exposure(t_prime),
            Engine::Mv(s) => s.cdf_exposure(t_prime),
        }
    }

    pub fn ccdf_sinr(&self, t: f64, sigma2: f64) -> Result<Probability, AnalyticsError> {
        match self {
            Engine::Mi(s) => s.ccdf_sinr(t, sigma2),
            Engine::Mv(s) => s.ccdf_sinr(t, sigma2),
        }
    }

    pub fn joint_cdf(&self, t: f64, t_prime: f64, sigma2: f64) -> Result<Probability, AnalyticsError> {
        match self {
            Engine::Mi(s) => s.joint_cdf(t, t_prime, sigma2),
            Engine::Mv(s) => s.joint_cdf(t, t_prime, sigma2),
        }
    }

    /// Mean received power (W).
    pub fn mean_exposure(&self) -> f64 {
        match self {
            Engine::Mi(s) => s.mean_exposure(),
            Engine::Mv(s) => s.mean_exposure(),
        }
    }

    pub fn variance_exposure(&self) -> f64 {
        match self {
            Engine::Mi(s) => s.variance_exposure(),
            Engine::Mv(s) => s.variance_exposure(),
        }
    }

    pub fn empty_probability(&self) -> f64 {
        match self {
            Engine::Mi(s) => s.kernel().empty_probability(),
            Engine::Mv(s) => s.empty_probability(),
        }
    }

    /// Mean distance to the serving BS given at least one BS (m).
    pub fn mean_serving_distance(&self) -> f64 {
        let (num, den) = match self {
            Engine::Mi(s) => {
                let k = s.kernel();
                k.outer_nodes().into_iter().fold((0.0, 0.0), |(a, b), (u, w)| {
                    let d = k.omega(u) * w;
                    (a + u.sqrt() * d, b + d)
                })
            }
            Engine::Mv(s) => s.serving_nodes().into_iter().fold((0.0, 0.0), |(a, b), (r, w, f)| (a + r * w * f, b + w * f)),
        };
        num / den
    }
}

/// Selector for `analyze` and `sweep` curves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveMetric {
    ExposureCdf,
    SinrCcdf,
    Joint,
    Moments,
}

impl std::str::FromStr for CurveMetric {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        Ok(match s {
            "emf-cdf" => CurveMetric::ExposureCdf,
            "sinr-ccdf" => CurveMetric::SinrCcdf,
            "joint" => CurveMetric::Joint,
            "moments" => CurveMetric::Moments,
            _ => return Err(usage(format!("unknown metric `{s}` (emf-cdf, sinr-ccdf, joint, moments)"))),
        })
    }
}

/// Options shared by the analytic commands.
#[derive(Debug, Clone, Default)]
pub struct AnalyzeOptions {
    /// thresholds: dBm for exposure, dB for SINR; scenario grid when None
    pub grid: Option<Vec<f64>>,
    /// SINR thresholds for the joint metric (dB)
    pub sinr_grid: Option<Vec<f64>>,
    pub truncation_n: Option<usize>,
    pub tolerance: Option<f64>,
}

/// Applies `--truncation-n` and `--tolerance` overrides.
pub fn apply_overrides(sc: &Scenario, opts: &AnalyzeOptions) -> Result<Scenario, CliError> {
    let mut sc = sc.clone();
    if let Some(n) = opts.truncation_n {
        match &mut sc.topology {
            ScenarioTopology::Bgpp(m) => {
                m.n_trunc = n;
                m.validate()?;
            }
            ScenarioTopology::Ippp(_) => return Err(usage("--truncation-n applies to β-GPP scenarios only")),
        }
    }
    if let Some(t) = opts.tolerance {
        sc.quadrature = QuadratureConfig { abs_tol: t, rel_tol: t, ..sc.quadrature };
        sc.quadrature.validate().map_err(|e| usage(e.to_string()))?;
    }
    Ok(sc)
}

fn nonempty(v: Vec<f64>, what: &str) -> Result<Vec<f64>, CliError> {
    if v.is_empty() {
        Err(usage(format!("{what} grid is empty")))
    } else {
        Ok(v)
    }
}

/// `analyze`: one curve (or the moment summary) for the scenario.
pub fn cmd_analyze(sc: &Scenario, metric: CurveMetric, opts: &AnalyzeOptions) -> Result<Table, CliError> {
    let sc = apply_overrides(sc, opts)?;
    let engine = Engine::new(&sc)?;
    curve(&sc, &engine, metric, opts)
}

fn curve(sc: &Scenario, engine: &Engine, metric: CurveMetric, opts: &AnalyzeOptions) -> Result<Table, CliError> {
    let radio = &sc.radio;
    let sigma2 = sc.noise_power();
    let to_ipd = radio.kappa() / (4.0 * std::f64::consts::PI);
    match metric {
        CurveMetric::ExposureCdf => {
            let grid = nonempty(opts.grid.clone().unwrap_or_else(|| sc.exposure_dbm.clone()), "exposure threshold")?;
            let mut t = Table::new("emf_cdf", &["threshold_dbm", "threshold_v_per_m", "threshold_ipd_w_per_m2", "cdf", "error"]);
            for dbm in grid {
                let e = ExposureValue::from_dbm(dbm, radio)?;
                let p = engine.cdf_exposure(e.power)?;
                t.push(vec![num(dbm), num(e.field), num(e.ipd), num(p.value), num(p.error)]);
            }
            Ok(t)
        }
        CurveMetric::SinrCcdf => {
            let grid = nonempty(opts.grid.clone().unwrap_or_else(|| sc.sinr_db.clone()), "SINR threshold")?;
            let mut t = Table::new("sinr_ccdf", &["threshold_db", "ccdf", "error"]);
            for db in grid {
                let p = engine.ccdf_sinr(db_to_linear(db), sigma2)?;
                t.push(vec![num(db), num(p.value), num(p.error)]);
            }
            Ok(t)
        }
        CurveMetric::Joint => {
            let eg = nonempty(opts.grid.clone().unwrap_or_else(|| sc.exposure_dbm.clone()), "exposure threshold")?;
            let sg = nonempty(opts.sinr_grid.clone().unwrap_or_else(|| sc.sinr_db.clone()), "SINR threshold")?;
            let f_emf = eg
                .iter()
                .map(|&d| engine.cdf_exposure(ExposureValue::from_dbm(d, radio)?.power).map_err(CliError::from))
                .collect::<Result<Vec<_>, _>>()?;
            let f_cov = sg.iter().map(|&d| engine.ccdf_sinr(db_to_linear(d), sigma2)).collect::<Result<Vec<_>, _>>()?;
            let mut t = Table::new("joint", &["sinr_db", "exposure_dbm", "joint", "error", "frechet_lower", "frechet_upper"]);
            for (i, &sd) in sg.iter().enumerate() {
                for (j, &ed) in eg.iter().enumerate() {
                    let p = engine.joint_cdf(db_to_linear(sd), ExposureValue::from_dbm(ed, radio)?.power, sigma2)?;
                    let (lo, hi) = frechet_bounds(f_cov[i].value, f_emf[j].value)?;
                    t.push(vec![num(sd), num(ed), num(p.value), num(p.error), num(lo), num(hi)]);
                }
            }
            Ok(t)
        }
        CurveMetric::Moments => {
            let mean = engine.mean_exposure();
            let var = engine.variance_exposure();
            let mut t = Table::new("moments", &["quantity", "value", "unit"]);
            let rows = [
                ("mean_power", mean, "W"),
                ("mean_power_dbm", linear_to_db(mean) + 30.0, "dBm"),
                ("mean_ipd", mean * to_ipd, "W/m2"),
                ("variance_power", var, "W2"),
                ("variance_ipd", var * to_ipd * to_ipd, "W2/m4"),
                ("empty_probability", engine.empty_probability(), "1"),
                ("mean_serving_distance", engine.mean_serving_distance(), "m"),
                ("noise_power_dbm", linear_to_db(sigma2) + 30.0, "dBm"),
                ("illumination_probability", sc.bf.p_g, "1"),
            ];
            for (q, v, u) in rows {
                t.push(vec![q.into(), num(v), u.into()]);
            }
            Ok(t)
        }
    }
}

/// Parameters `sweep` can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Beta,
    /// values in BS/km²
    Lambda,
    /// values in rad
    Omega,
    DensityScale,
}

impl std::str::FromStr for SweepParam {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        Ok(match s {
            "beta" => SweepParam::Beta,
            "lambda" => SweepParam::Lambda,
            "omega" => SweepParam::Omega,
            "density-scale" => SweepParam::DensityScale,
            _ => return Err(usage(format!("unknown sweep parameter `{s}` (beta, lambda, omega, density-scale)"))),
        })
    }
}

/// Scenario with one parameter replaced.
pub fn with_parameter(sc: &Scenario, param: SweepParam, v: f64) -> Result<Scenario, CliError> {
    let mut s = sc.clone();
    match (param, &mut s.topology) {
        (SweepParam::Beta, ScenarioTopology::Bgpp(m)) => m.beta = v,
        (SweepParam::Lambda, ScenarioTopology::Bgpp(m)) => m.lambda = v * 1e-6,
        (SweepParam::DensityScale, ScenarioTopology::Bgpp(m)) => m.lambda *= v,
        (SweepParam::DensityScale, ScenarioTopology::Ippp(m)) => {
            if !(v > 0.0) {
                return Err(usage("density scale must be positive"));
            }
            *m = m.scaled(v)
        }
        (SweepParam::Omega, _) => s.bf = BeamformingConfig::directional(v)?,
        (p, ScenarioTopology::Ippp(_)) => return Err(usage(format!("{p:?} is a β-GPP parameter"))),
    }
    if let ScenarioTopology::Bgpp(m) = &s.topology {
        m.validate()?;
    }
    Ok(s)
}

/// `sweep`: one curve per parameter value, stacked, plus a summary table.
pub fn cmd_sweep(sc: &Scenario, param: SweepParam, values: &[f64], metric: CurveMetric, opts: &AnalyzeOptions) -> Result<Vec<Table>, CliError> {
    if values.is_empty() {
        return Err(usage("no sweep values"));
    }
    let base = apply_overrides(sc, opts)?;
    let mut curves: Option<Table> = None;
    let mut summary = Table::new(
        "summary",
        &["value", "mean_power_w", "mean_ipd_w_per_m2", "mean_serving_distance_m", "empty_probability", "mean_sinr_db_on_grid"],
    );
    summary.notes.push("mean_sinr_db_on_grid = lo + integral of the SINR CCDF over the dB grid (sinr-ccdf sweeps only)".into());
    let to_ipd = base.radio.kappa() / (4.0 * std::f64::consts::PI);
    for &v in values {
        let s = with_parameter(&base, param, v)?;
        let engine = Engine::new(&s)?;
        let t = curve(&s, &engine, metric, opts)?;
        let mean_sinr = if metric == CurveMetric::SinrCcdf {
            let x = t.column("threshold_db");
            let p = t.column("ccdf");
            let area: f64 = x.windows(2).zip(p.windows(2)).map(|(x, p)| 0.5 * (p[0] + p[1]) * (x[1] - x[0])).sum();
            num(x[0] + area)
        } else {
            String::new()
        };
        let mean = engine.mean_exposure();
        summary.push(vec![
            num(v),
            num(mean),
            num(mean * to_ipd),
            num(engine.mean_serving_distance()),
            num(engine.empty_probability()),
            mean_sinr,
        ]);
        let c = curves.get_or_insert_with(|| {
            let mut cols = vec!["value".to_string()];
            cols.extend(t.columns.iter().cloned());
            Table { name: format!("{}_by_{param:?}", t.name).to_lowercase(), columns: cols, ..Default::default() }
        });
        for r in t.rows {
            let mut row = vec![num(v)];
            row.extend(r);
            c.rows.push(row);
        }
    }
    Ok(vec![curves.unwrap_or_default(), summary])
}

/// One line of the validation report.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub analytic: f64,
    pub monte_carlo: f64,
    /// σ units for moments, absolute probability for laws
    pub gap: f64,
    pub limit: f64,
    /// None when skipped
    pub pass: Option<bool>,
    pub note: String,
}

#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub realizations: usize,
    pub seed: u64,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass != Some(false))
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new("validation", &["check", "analytic", "monte_carlo", "gap", "limit", "status", "note"]);
        t.notes.push(format!("realizations={} seed={}", self.realizations, self.seed));
        for c in &self.checks {
            let status = match c.pass {
                Some(true) => "pass",
                Some(false) => "fail",
                None => "skipped",
            };
            t.push(vec![c.name.clone(), num(c.analytic), num(c.monte_carlo), num(c.gap), num(c.limit), status.into(), c.note.clone()]);
        }
        t
    }
}

/// Number of law points compared in `validate`.
pub const VALIDATION_POINTS: usize = 10;

/// `validate`: Monte Carlo against the analytics on the same grid. The grid is
/// the MC quantiles at i/11, i = 1..10, so that every point is informative.
/// Moments are judged in standard errors (limit 3), laws by the largest
/// absolute gap (limit `ks_tol`).
pub fn simulation_plan(sc: &Scenario, n_realizations: usize, seed: u64) -> SimulationPlan {
    SimulationPlan {
        topology: match sc.topology {
            ScenarioTopology::Bgpp(m) => Topology::Bgpp(m),
            ScenarioTopology::Ippp(m) => Topology::Ippp(m),
        },
        radio: sc.radio,
        geom: sc.geom,
        bf: sc.bf,
        sigma2: sc.noise_power(),
        n_realizations,
        seed,
    }
}

/// `validate`, also returning the simulated samples.
pub fn cmd_validate(sc: &Scenario, n_realizations: usize, seed: u64, ks_tol: f64) -> Result<(ValidationReport, SimulationResult), CliError> {
    if n_realizations < 2 {
        return Err(usage("need at least 2 realizations"));
    }
    if !(ks_tol > 0.0) {
        return Err(usage("tolerance must be positive"));
    }
    let engine = Engine::new(sc)?;
    let sigma2 = sc.noise_power();
    let res = simulate(&simulation_plan(sc, n_realizations, seed))?;
    let emf = res.exposure_law(true)?;
    let sinr = res.sinr_law(true)?;
    let mut checks = Vec::new();

    let in_sigma = |a: f64, m: f64, se: f64| if se > 0.0 { (a - m).abs() / se } else if a == m { 0.0 } else { f64::INFINITY };
    let mean = engine.mean_exposure();
    let g = in_sigma(mean, emf.mean(), emf.std_error());
    checks.push(Check {
        name: "mean_exposure".into(),
        analytic: mean,
        monte_carlo: emf.mean(),
        gap: g,
        limit: 3.0,
        pass: Some(g <= 3.0),
        note: "W; gap in standard errors".into(),
    });
    let var = engine.variance_exposure();
    let var_se = variance_std_error(&emf);
    let g = in_sigma(var, emf.variance(), var_se);
    checks.push(Check {
        name: "variance_exposure".into(),
        analytic: var,
        monte_carlo: emf.variance(),
        gap: g,
        limit: 3.0,
        pass: Some(g <= 3.0),
        note: "W2; gap in standard errors".into(),
    });

    let quantile_grid = |law: &EmpiricalDistribution| -> Vec<f64> {
        let mut g: Vec<f64> = (1..=VALIDATION_POINTS).map(|i| law.quantile(i as f64 / (VALIDATION_POINTS + 1) as f64)).filter(|&x| x > 0.0).collect();
        g.dedup();
        g
    };
    let degenerate = |law: &EmpiricalDistribution| law.samples().first() == law.samples().last();

    if degenerate(&emf) {
        checks.push(skipped("exposure_cdf", "degenerate exposure law"));
    } else {
        let mut worst = (0.0f64, 0.0, 0.0);
        for t in quantile_grid(&emf) {
            let a = engine.cdf_exposure(t)?.value;
            let m = emf.cdf(t);
            if (a - m).abs() >= worst.0 {
                worst = ((a - m).abs(), a, m);
            }
        }
        checks.push(Check {
            name: "exposure_cdf".into(),
            analytic: worst.1,
            monte_carlo: worst.2,
            gap: worst.0,
            limit: ks_tol,
            pass: Some(worst.0 <= ks_tol),
            note: format!("max |gap| over {VALIDATION_POINTS} MC quantiles"),
        });
    }
    if degenerate(&sinr) {
        checks.push(skipped("sinr_ccdf", "degenerate SINR law"));
    } else {
        let mut worst = (0.0f64, 0.0, 0.0);
        for t in quantile_grid(&sinr) {
            let a = engine.ccdf_sinr(t, sigma2)?.value;
            let m = sinr.ccdf(t);
            if (a - m).abs() >= worst.0 {
                worst = ((a - m).abs(), a, m);
            }
        }
        checks.push(Check {
            name: "sinr_ccdf".into(),
            analytic: worst.1,
            monte_carlo: worst.2,
            gap: worst.0,
            limit: ks_tol,
            pass: Some(worst.0 <= ks_tol),
            note: format!("max |gap| over {VALIDATION_POINTS} MC quantiles"),
        });
    }
    let p0 = engine.empty_probability();
    let e0 = res.empty_count() as f64 / res.len() as f64;
    let se0 = (p0 * (1.0 - p0) / res.len() as f64).sqrt();
    let g = in_sigma(p0, e0, se0.max(1.0 / res.len() as f64));
    checks.push(Check {
        name: "empty_probability".into(),
        analytic: p0,
        monte_carlo: e0,
        gap: g,
        limit: 3.0,
        pass: Some(g <= 3.0),
        note: "gap in standard errors".into(),
    });
    Ok((ValidationReport { realizations: n_realizations, seed, checks }, res))
}

fn skipped(name: &str, why: &str) -> Check {
    Check { name: name.into(), analytic: f64::NAN, monte_carlo: f64::NAN, gap: f64::NAN, limit: f64::NAN, pass: None, note: why.into() }
}

/// Standard error of the sample variance, from the fourth central moment.
fn variance_std_error(law: &EmpiricalDistribution) -> f64 {
    let n = law.len() as f64;
    let m = law.mean();
    let (m2, m4) = law.samples().iter().fold((0.0, 0.0), |(a, b), x| {
        let d = (x - m) * (x - m);
        (a + d, b + d * d)
    });
    let (m2, m4) = (m2 / n, m4 / n);
    ((m4 - m2 * m2).max(0.0) / n).sqrt()
}

/// Selector for `map`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapKind {
    MeanExposure,
    ExposureCdf,
    SinrCcdf,
}

impl std::str::FromStr for MapKind {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        Ok(match s {
            "mean" | "mean-exposure" => MapKind::MeanExposure,
            "emf-cdf" => MapKind::ExposureCdf,
            "sinr-ccdf" => MapKind::SinrCcdf,
            _ => return Err(usage(format!("unknown map metric `{s}` (mean-exposure, emf-cdf, sinr-ccdf)"))),
        })
    }
}

/// `map`: metric at every (x, y) user location of a square grid (m).
/// Mean-exposure maps are reported as IPD (W/m²). The grid average over the
/// cells that succeeded is returned in the notes and as the second value.
pub fn cmd_map(sc: &Scenario, axis: &[f64], kind: MapKind, threshold: Option<f64>) -> Result<(Table, f64), CliError> {
    let ScenarioTopology::Ippp(model) = &sc.topology else {
        return Err(usage("map needs an I-PPP (motion-variant) scenario; β-GPP laws do not depend on location"));
    };
    if axis.is_empty() {
        return Err(usage("map grid is empty"));
    }
    let sigma2 = sc.noise_power();
    let to_ipd = sc.radio.kappa() / (4.0 * std::f64::consts::PI);
    let (metric, scale, label) = match (kind, threshold) {
        (MapKind::MeanExposure, _) => (MapMetric::MeanExposure, to_ipd, "mean IPD (W/m2)".to_string()),
        (MapKind::ExposureCdf, Some(dbm)) => {
            (MapMetric::ExposureCdf(ExposureValue::from_dbm(dbm, &sc.radio)?.power), 1.0, format!("P[exposure <= {dbm} dBm]"))
        }
        (MapKind::SinrCcdf, Some(db)) => (MapMetric::SinrCcdf { t: db_to_linear(db), sigma2 }, 1.0, format!("P[SINR > {db} dB]")),
        _ => return Err(usage("this map metric needs --threshold")),
    };
    let res = spatial_map(metric, axis, axis, model, &sc.geom, &sc.radio, &sc.bf)?;
    let mut t = Table::new("map", &["x_m", "y_m", "value", "error"]);
    t.notes.push(format!("value: {label}"));
    let mut failed = std::collections::HashMap::new();
    for (k, e) in &res.failures {
        failed.insert(*k, e.replace([',', '\n'], ";"));
    }
    for (iy, &y) in res.ys.iter().enumerate() {
        for (ix, &x) in res.xs.iter().enumerate() {
            let k = iy * res.xs.len() + ix;
            let v = res.values[k].map(|v| num(v * scale)).unwrap_or_default();
            t.push(vec![num(x), num(y), v, failed.remove(&k).unwrap_or_default()]);
        }
    }
    let avg = res.average * scale;
    t.notes.push(format!("grid_average={}", num(avg)));
    t.notes.push(format!("failed_cells={}", res.failures.len()));
    Ok((t, avg))
}

/// `fit`: least-squares radial density from a BS dataset. Returns the
/// scenario topology block, with diagnostics as comments, and the dataset hash.
pub fn cmd_fit(dataset: &str, center: [f64; 2], tau: f64, n_bins: usize) -> Result<(String, String), CliError> {
    let bytes = std::fs::read(dataset)?;
    let points = read_bs_dataset(std::io::Cursor::new(&bytes))?;
    if !(tau > 0.0) {
        return Err(usage("fit radius must be positive"));
    }
    let fit = fit_radial_density(&points, center, tau, n_bins)?;
    let mut out = String::new();
    let _ = writeln!(out, "# fitted from {} of {} points within {tau} m, {n_bins} bins", fit.n_points, points.len());
    let _ = writeln!(out, "# rms density residual: {:e} /m2", fit.residual);
    if fit.violations.is_empty() {
        let _ = writeln!(out, "# constraint checks: ok");
    }
    for w in &fit.warnings {
        let _ = writeln!(out, "# warning: {w}");
    }
    out.push_str(&ippp_topology_block(&fit.model));
    Ok((out, sha256_hex(&bytes)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(sc: &mut Scenario) {
        sc.quadrature = QuadratureConfig::with_tol(1e-5);
    }

    #[test]
    fn grids_parse() {
        assert_eq!(parse_grid("-3:3:3").unwrap(), vec![-3.0, 0.0, 3.0]);
        assert_eq!(parse_grid("1, 2,4").unwrap(), vec![1.0, 2.0, 4.0]);
        assert!(matches!(parse_grid(""), Err(CliError::Usage(_))));
        assert!(matches!(parse_grid("0:1:0"), Err(CliError::Usage(_))));
        assert!(matches!(parse_grid("0:1"), Err(CliError::Usage(_))));
        assert!(matches!(parse_grid("a,b"), Err(CliError::Usage(_))));
    }

    #[test]
    fn empty_grid_is_usage_error() {
        let sc = Scenario::paris();
        let opts = AnalyzeOptions { grid: Some(vec![]), ..Default::default() };
        let e = cmd_analyze(&sc, CurveMetric::ExposureCdf, &opts).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn exposure_columns_follow_unit_chain() {
        let mut sc = Scenario::paris();
        quick(&mut sc);
        let opts = AnalyzeOptions { grid: Some(vec![-40.0, -30.0]), ..Default::default() };
        let t = cmd_analyze(&sc, CurveMetric::ExposureCdf, &opts).unwrap();
        for k in 0..2 {
            let e = ExposureValue::from_dbm(t.value(k, "threshold_dbm").unwrap(), &sc.radio).unwrap();
            assert!((t.value(k, "threshold_v_per_m").unwrap() / e.field - 1.0).abs() < 1e-9);
            assert!((t.value(k, "threshold_ipd_w_per_m2").unwrap() / e.ipd - 1.0).abs() < 1e-9);
        }
        let c = t.column("cdf");
        assert!(c[0] <= c[1]);
    }

    #[test]
    fn single_value_sweep_matches_analyze() {
        let mut sc = Scenario::paris();
        quick(&mut sc);
        let opts = AnalyzeOptions { grid: Some(vec![0.0, 10.0]), truncation_n: Some(10), ..Default::default() };
        let a = cmd_analyze(&sc, CurveMetric::SinrCcdf, &opts).unwrap();
        let s = cmd_sweep(&sc, SweepParam::Beta, &[0.75], CurveMetric::SinrCcdf, &opts).unwrap();
        assert_eq!(s[0].column("ccdf"), a.column("ccdf"));
        assert_eq!(s[1].rows.len(), 1);
    }

    #[test]
    fn density_scale_sweep_is_linear_in_mean() {
        let sc = Scenario::brussels();
        let opts = AnalyzeOptions::default();
        let s = cmd_sweep(&sc, SweepParam::DensityScale, &[1.0, 2.0], CurveMetric::Moments, &opts).unwrap();
        let m = s[1].column("mean_power_w");
        // doubling every BS count doubles the aggregate mean power (no BF)
        assert!((m[1] / m[0] - 2.0).abs() < 1e-6, "{m:?}");
    }

    #[test]
    fn sweep_rejects_unknown_and_mismatched_parameters() {
        assert!("gamma".parse::<SweepParam>().is_err());
        let sc = Scenario::brussels();
        assert!(matches!(with_parameter(&sc, SweepParam::Beta, 0.5), Err(CliError::Usage(_))));
    }

    #[test]
    fn zero_power_validation_agrees_exactly() {
        let mut sc = Scenario::paris();
        sc.radio.pt_gmax = 0.0;
        let (r, _) = cmd_validate(&sc, 2000, 7, 0.01).unwrap();
        let m = r.check("mean_exposure").unwrap();
        assert_eq!((m.analytic, m.monte_carlo, m.gap), (0.0, 0.0, 0.0));
        assert!(r.passed());
    }

    #[test]
    fn validation_is_deterministic() {
        let mut sc = Scenario::paris();
        quick(&mut sc);
        let (a, ra) = cmd_validate(&sc, 3000, 11, 0.05).unwrap();
        let (b, rb) = cmd_validate(&sc, 3000, 11, 0.05).unwrap();
        assert_eq!(a.table(), b.table());
        assert_eq!(ra.exposure, rb.exposure);
    }

    #[test]
    fn map_needs_motion_variant_topology() {
        let sc = Scenario::paris();
        assert!(matches!(cmd_map(&sc, &[0.0], MapKind::MeanExposure, None), Err(CliError::Usage(_))));
        let b = Scenario::brussels();
        assert!(matches!(cmd_map(&b, &[0.0], MapKind::ExposureCdf, None), Err(CliError::Usage(_))));
        assert!(matches!(cmd_map(&b, &[], MapKind::MeanExposure, None), Err(CliError::Usage(_))));
    }

    #[test]
    fn one_cell_map_is_single_location_analysis() {
        let sc = Scenario::brussels();
        let (t, avg) = cmd_map(&sc, &[0.0], MapKind::MeanExposure, None).unwrap();
        let m = cmd_analyze(&sc, CurveMetric::Moments, &AnalyzeOptions::default()).unwrap();
        let ipd = m.value(2, "value").unwrap();
        assert!((t.value(0, "value").unwrap() / ipd - 1.0).abs() < 1e-9);
        assert!((avg / ipd - 1.0).abs() < 1e-9);
    }

    #[test]
    fn output_carries_provenance() {
        let sc = Scenario::paris();
        let mut t = Table::new("x", &["a"]);
        t.push(vec!["1".into()]);
        let mut buf = Vec::new();
        write_tables(&mut buf, &Provenance::for_scenario("analyze", &sc, Some(5)), &[t]).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.contains(&sc.hash));
        assert!(s.contains("# seed: 5"));
        assert!(s.ends_with("a\n1\n"));
    }

    #[test]
    fn fit_emits_loadable_block() {
        use crate::montecarlo::realization_rng;
        use crate::pointprocess::sample_ippp;
        let truth = crate::pointprocess::IpppModel::from_km(0.050, 5.241, -0.973, 0.048, [0.0, 0.0]);
        let geom = crate::model::GeometryConfig::new(0.0, 7000.0).unwrap();
        let mut rng = realization_rng(3, 0);
        let mut text = String::from("unit: m\n");
        for _ in 0..20 {
            for p in sample_ippp(&truth, &geom, &mut rng).points {
                let _ = writeln!(text, "{},{}", p[0], p[1]);
            }
        }
        let dir = std::env::temp_dir().join(format!("emfcov-fit-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bs.csv");
        std::fs::write(&path, &text).unwrap();
        let (block, hash) = cmd_fit(path.to_str().unwrap(), [0.0, 0.0], 7000.0, 20).unwrap();
        assert_eq!(hash.len(), 64);
        let base = crate::scenario::BRUSSELS_PRESET.split("[topology]").next().unwrap();
        let sc = Scenario::parse(&format!("{base}{block}")).unwrap();
        let ScenarioTopology::Ippp(m) = sc.topology else { panic!() };
        // 20 pooled deployments: 20 times the true density
        for d in [1000.0, 3000.0, 5000.0] {
            let r = m.density_at_delta(d) / (20.0 * truth.density_at_delta(d));
            assert!((r - 1.0).abs() < 0.15, "Δ={d}: ratio {r}");
        }
        std::fs::remove_dir_all(&dir).ok();
    }
}
