//! Scenario files: TOML documents holding radio, geometry, beamforming and
//! topology parameters, threshold grids and numerical overrides.
//!
//! Any dimensional field accepts either a bare number (SI) or a string with a
//! unit, e.g. `"2132.7 MHz"`, `"66 dBm"`, `"6 km"`, `"6.17 /km2"`.
//! Everything is normalized to SI on load and checked before use.
//!
//! ```toml
//! schema = 1
//! name = "example"
//!
//! [radio]
//! frequency = "2132.7 MHz"
//! bandwidth = "14.8 MHz"
//! eirp = "66 dBm"
//! bs_height = "33 m"
//! alpha = 3.2
//! nakagami_m = 1
//! noise_figure = "6 dB"
//!
//! [geometry]
//! exclusion_radius = "0 m"
//! outer_radius = "6 km"
//!
//! [beamforming]
//! enabled = true
//! omega = "0.0982 rad"
//!
//! [topology]
//! kind = "bgpp"
//! density = "6.17 /km2"
//! beta = 0.75
//! truncation_n = 50
//! ```

use crate::inversion::QuadratureConfig;
use crate::model::{dbm_to_watt, BeamformingConfig, GeometryConfig, ModelError, RadioConfig};
use crate::pointprocess::{BetaGppModel, IpppModel, PpError};
use serde::Deserialize;
use sha2::{Digest, Sha256};
use std::f64::consts::PI;
use std::path::Path;
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

pub const PARIS_PRESET: &str = include_str!("../presets/paris-5gnr2100.toml");
pub const BRUSSELS_PRESET: &str = include_str!("../presets/brussels-lte1800.toml");

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed scenario: {0}")]
    Syntax(String),
    #[error("schema: {field}: {reason}")]
    Schema { field: String, reason: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    PointProcess(#[from] PpError),
}

fn schema(field: &str, reason: impl Into<String>) -> ScenarioError {
    ScenarioError::Schema { field: field.into(), reason: reason.into() }
}

/// A number with an optional unit suffix.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Quantity {
    Num(f64),
    Int(i64),
    Text(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Dim {
    Frequency,
    Power,
    Length,
    Angle,
    Decibel,
    /// 1/length^k
    InvLength(i32),
}

impl Quantity {
    fn to_si(&self, field: &str, dim: Dim) -> Result<f64, ScenarioError> {
        let (v, unit) = match self {
            Quantity::Num(v) => (*v, String::new()),
            Quantity::Int(v) => (*v as f64, String::new()),
            Quantity::Text(s) => {
                let s = s.trim();
                let split = s
                    .char_indices()
                    .find(|&(i, c)| i > 0 && !(c.is_ascii_digit() || matches!(c, '.' | 'e' | 'E' | '+' | '-')))
                    .map(|(i, _)| i)
                    .unwrap_or(s.len());
                let (num, unit) = s.split_at(split);
                let v: f64 = num.trim().parse().map_err(|_| schema(field, format!("cannot parse number in `{s}`")))?;
                (v, unit.trim().to_string())
            }
        };
        if !v.is_finite() {
            return Err(schema(field, "must be finite"));
        }
        let factor_or_map = |table: &[(&str, f64)]| -> Result<f64, ScenarioError> {
            table
                .iter()
                .find(|(u, _)| *u == unit)
                .map(|(_, f)| v * f)
                .ok_or_else(|| schema(field, format!("unit `{unit}` not accepted here")))
        };
        match dim {
            Dim::Frequency => factor_or_map(&[("", 1.0), ("Hz", 1.0), ("kHz", 1e3), ("MHz", 1e6), ("GHz", 1e9)]),
            Dim::Length => factor_or_map(&[("", 1.0), ("m", 1.0), ("km", 1e3)]),
            Dim::Angle => factor_or_map(&[("", 1.0), ("rad", 1.0), ("deg", PI / 180.0)]),
            Dim::Decibel => factor_or_map(&[("", 1.0), ("dB", 1.0)]),
            Dim::Power => match unit.as_str() {
                "" | "W" => Ok(v),
                "mW" => Ok(v * 1e-3),
                "dBm" => Ok(dbm_to_watt(v)),
                "dBW" => Ok(10f64.powf(v / 10.0)),
                _ => Err(schema(field, format!("unit `{unit}` not accepted here"))),
            },
            Dim::InvLength(k) => {
                if unit.is_empty() {
                    return Ok(v);
                }
                let body = unit.strip_prefix('/').ok_or_else(|| schema(field, format!("expected `/m{k}` or `/km{k}`, got `{unit}`")))?;
                let (len, pow) = if let Some(p) = body.strip_prefix("km") {
                    (1e3, p)
                } else if let Some(p) = body.strip_prefix('m') {
                    (1.0, p)
                } else {
                    return Err(schema(field, format!("unknown unit `{unit}`")));
                };
                let pow = pow.trim_start_matches('^');
                let p: i32 = if pow.is_empty() { 1 } else { pow.parse().map_err(|_| schema(field, format!("bad exponent in `{unit}`")))? };
                if p != k {
                    return Err(schema(field, format!("expected dimension 1/length^{k}, got `{unit}`")));
                }
                Ok(v / f64::powi(len, k))
            }
        }
    }
}

/// A list of values or an inclusive range with `n` points.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    List(Vec<f64>),
    Range { from: f64, to: f64, n: usize },
}

impl GridSpec {
    pub fn values(&self) -> Vec<f64> {
        match self {
            GridSpec::List(v) => v.clone(),
            GridSpec::Range { from, to, n } => crate::ippp::linspace(*from, *to, *n),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRadio {
    frequency: Quantity,
    bandwidth: Quantity,
    eirp: Quantity,
    bs_height: Quantity,
    alpha: f64,
    nakagami_m: u32,
    noise_figure: Quantity,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGeometry {
    exclusion_radius: Quantity,
    outer_radius: Quantity,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBeamforming {
    enabled: bool,
    omega: Option<Quantity>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum RawTopology {
    Bgpp {
        density: Quantity,
        beta: f64,
        truncation_n: usize,
    },
    Ippp {
        a: Quantity,
        b: Quantity,
        c: Quantity,
        d: Quantity,
        /// max-density point relative to the user, [x, y]
        center: [Quantity; 2],
    },
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrids {
    /// exposure thresholds, dBm
    exposure_dbm: Option<GridSpec>,
    /// SINR thresholds, dB
    sinr_db: Option<GridSpec>,
    /// map axis (both x and y), km
    map_km: Option<GridSpec>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNumerics {
    tolerance: Option<f64>,
    max_panels: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSimulation {
    seed: Option<u64>,
    realizations: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    schema: u32,
    name: String,
    radio: RawRadio,
    geometry: RawGeometry,
    beamforming: RawBeamforming,
    topology: RawTopology,
    #[serde(default)]
    grids: RawGrids,
    #[serde(default)]
    numerics: RawNumerics,
    #[serde(default)]
    simulation: RawSimulation,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScenarioTopology {
    Bgpp(BetaGppModel),
    Ippp(IpppModel),
}

/// A validated scenario in SI units.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub radio: RadioConfig,
    pub geom: GeometryConfig,
    pub bf: BeamformingConfig,
    pub topology: ScenarioTopology,
    pub exposure_dbm: Vec<f64>,
    pub sinr_db: Vec<f64>,
    /// map axis in m
    pub map_axis: Vec<f64>,
    pub quadrature: QuadratureConfig,
    pub seed: u64,
    pub realizations: usize,
    /// sha256 of the source text
    pub hash: String,
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let raw: RawScenario = toml::from_str(text).map_err(|e| ScenarioError::Syntax(e.to_string()))?;
        if raw.schema != SCHEMA_VERSION {
            return Err(schema("schema", format!("version {} not supported (expected {SCHEMA_VERSION})", raw.schema)));
        }
        let r = &raw.radio;
        let radio = RadioConfig {
            f: r.frequency.to_si("radio.frequency", Dim::Frequency)?,
            bw: r.bandwidth.to_si("radio.bandwidth", Dim::Frequency)?,
            pt_gmax: r.eirp.to_si("radio.eirp", Dim::Power)?,
            z: r.bs_height.to_si("radio.bs_height", Dim::Length)?,
            alpha: r.alpha,
            m: r.nakagami_m,
            noise_figure_db: r.noise_figure.to_si("radio.noise_figure", Dim::Decibel)?,
        };
        radio.validate()?;
        let geom = GeometryConfig::new(
            raw.geometry.exclusion_radius.to_si("geometry.exclusion_radius", Dim::Length)?,
            raw.geometry.outer_radius.to_si("geometry.outer_radius", Dim::Length)?,
        )?;
        let bf = if raw.beamforming.enabled {
            let omega = raw
                .beamforming
                .omega
                .as_ref()
                .ok_or_else(|| schema("beamforming.omega", "required when beamforming is enabled"))?
                .to_si("beamforming.omega", Dim::Angle)?;
            BeamformingConfig::directional(omega)?
        } else {
            BeamformingConfig::disabled()
        };
        let topology = match &raw.topology {
            RawTopology::Bgpp { density, beta, truncation_n } => {
                let lambda = density.to_si("topology.density", Dim::InvLength(2))?;
                ScenarioTopology::Bgpp(BetaGppModel::new(lambda, *beta, *truncation_n)?)
            }
            RawTopology::Ippp { a, b, c, d, center } => {
                let m = IpppModel::with_center(
                    a.to_si("topology.a", Dim::InvLength(1))?,
                    b.to_si("topology.b", Dim::InvLength(2))?,
                    c.to_si("topology.c", Dim::InvLength(3))?,
                    d.to_si("topology.d", Dim::InvLength(4))?,
                    [center[0].to_si("topology.center", Dim::Length)?, center[1].to_si("topology.center", Dim::Length)?],
                );
                if m.d < 0.0 {
                    return Err(schema("topology.d", "negative d̃ makes the density negative far out"));
                }
                ScenarioTopology::Ippp(m)
            }
        };
        let grid = |g: &Option<GridSpec>, field: &str| -> Result<Vec<f64>, ScenarioError> {
            let v = g.as_ref().map(|g| g.values()).unwrap_or_default();
            if v.iter().any(|x| !x.is_finite()) {
                return Err(schema(field, "grid values must be finite"));
            }
            Ok(v)
        };
        let mut quadrature = QuadratureConfig::default();
        if let Some(t) = raw.numerics.tolerance {
            quadrature = QuadratureConfig { abs_tol: t, rel_tol: t, ..quadrature };
        }
        if let Some(p) = raw.numerics.max_panels {
            quadrature.max_panels = p;
        }
        quadrature.validate().map_err(|e| schema("numerics", e.to_string()))?;
        Ok(Scenario {
            name: raw.name,
            radio,
            geom,
            bf,
            topology,
            exposure_dbm: grid(&raw.grids.exposure_dbm, "grids.exposure_dbm")?,
            sinr_db: grid(&raw.grids.sinr_db, "grids.sinr_db")?,
            map_axis: grid(&raw.grids.map_km, "grids.map_km")?.into_iter().map(|x| x * 1e3).collect(),
            quadrature,
            seed: raw.simulation.seed.unwrap_or(1),
            realizations: raw.simulation.realizations.unwrap_or(100_000),
            hash: sha256_hex(text.as_bytes()),
        })
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text)
    }

    /// A file path, or one of the shipped preset names.
    pub fn resolve(name_or_path: &str) -> Result<Self, ScenarioError> {
        match name_or_path {
            "paris-5gnr2100" => Self::parse(PARIS_PRESET),
            "brussels-lte1800" => Self::parse(BRUSSELS_PRESET),
            p => Self::load(Path::new(p)),
        }
    }

    pub fn paris() -> Self {
        Self::parse(PARIS_PRESET).expect("shipped preset is valid")
    }

    pub fn brussels() -> Self {
        Self::parse(BRUSSELS_PRESET).expect("shipped preset is valid")
    }

    pub fn noise_power(&self) -> f64 {
        self.radio.noise_power()
    }
}

/// Topology block in the scenario syntax (SI units), used by `fit`.
pub fn ippp_topology_block(m: &IpppModel) -> String {
    let c = m.center();
    format!(
        "[topology]\nkind = \"ippp\"\na = \"{:e} /m\"\nb = \"{:e} /m2\"\nc = \"{:e} /m3\"\nd = \"{:e} /m4\"\ncenter = [\"{} m\", \"{} m\"]\n",
        m.a, m.b, m.c, m.d, c[0], c[1]
    )
}

/// Parses a length such as `"-0.145 km"` or `"250"` (m).
pub fn parse_length(text: &str) -> Result<f64, ScenarioError> {
    Quantity::Text(text.to_string()).to_si("length", Dim::Length)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_load_in_si() {
        let p = Scenario::paris();
        assert!((p.radio.f - 2132.7e6).abs() < 1e-3);
        assert!((p.radio.pt_gmax - dbm_to_watt(66.0)).abs() < 1e-12);
        assert_eq!(p.geom.tau, 6000.0);
        assert!((p.bf.p_g - 0.0469).abs() < 5e-5);
        match p.topology {
            ScenarioTopology::Bgpp(m) => {
                assert!((m.lambda - 6.17e-6).abs() < 1e-15);
                assert_eq!((m.beta, m.n_trunc), (0.75, 50));
            }
            _ => panic!("paris is a β-GPP"),
        }
        let b = Scenario::brussels();
        assert!(!b.bf.enabled);
        match b.topology {
            ScenarioTopology::Ippp(m) => {
                let want = IpppModel::from_km(0.050, 5.241, -0.973, 0.048, [-0.145, -0.569]);
                for (x, y) in [(m.a, want.a), (m.b, want.b), (m.c, want.c), (m.d, want.d), (m.rho, want.rho), (m.theta, want.theta)] {
                    assert!((x - y).abs() <= 1e-12 * y.abs().max(1e-30), "{x} vs {y}");
                }
            }
            _ => panic!("brussels is an I-PPP"),
        }
        assert_eq!(b.map_axis.len(), 50);
        assert_eq!(b.map_axis[0], -3000.0);
    }

    #[test]
    fn units_are_normalized() {
        let q = |s: &str| Quantity::Text(s.into());
        assert_eq!(q("2 GHz").to_si("f", Dim::Frequency).unwrap(), 2e9);
        assert_eq!(q("30 dBm").to_si("p", Dim::Power).unwrap(), 1.0);
        assert_eq!(q("1.5km").to_si("l", Dim::Length).unwrap(), 1500.0);
        assert!((q("5 /km2").to_si("d", Dim::InvLength(2)).unwrap() - 5e-6).abs() < 1e-20);
        assert!((q("2 /km^3").to_si("d", Dim::InvLength(3)).unwrap() - 2e-9).abs() < 1e-22);
        assert!((q("-1e-3 /m").to_si("d", Dim::InvLength(1)).unwrap() + 1e-3).abs() < 1e-18);
        assert!((q("90 deg").to_si("w", Dim::Angle).unwrap() - PI / 2.0).abs() < 1e-15);
        assert!(q("5 /km3").to_si("d", Dim::InvLength(2)).is_err());
        assert!(q("5 furlong").to_si("l", Dim::Length).is_err());
        assert_eq!(Quantity::Int(7).to_si("l", Dim::Length).unwrap(), 7.0);
    }

    #[test]
    fn schema_violations_are_rejected() {
        let bad_alpha = PARIS_PRESET.replace("alpha = 3.2", "alpha = 1.8");
        assert!(matches!(Scenario::parse(&bad_alpha), Err(ScenarioError::Model(_))));
        let bad_version = PARIS_PRESET.replace("schema = 1", "schema = 9");
        assert!(matches!(Scenario::parse(&bad_version), Err(ScenarioError::Schema { .. })));
        let unknown = PARIS_PRESET.replace("alpha = 3.2", "alpha = 3.2\ncolour = 1");
        assert!(matches!(Scenario::parse(&unknown), Err(ScenarioError::Syntax(_))));
        let bad_unit = PARIS_PRESET.replace("\"6 km\"", "\"6 kg\"");
        assert!(matches!(Scenario::parse(&bad_unit), Err(ScenarioError::Schema { .. })));
    }

    #[test]
    fn hash_tracks_content() {
        let a = Scenario::paris();
        let b = Scenario::parse(&format!("{PARIS_PRESET}\n# edited\n")).unwrap();
        assert_eq!(a.hash.len(), 64);
        assert_ne!(a.hash, b.hash);
        assert_eq!(a.hash, Scenario::paris().hash);
    }

    #[test]
    fn fitted_block_round_trips() {
        let m = IpppModel::from_km(0.050, 5.241, -0.973, 0.048, [-0.145, -0.569]);
        let text = BRUSSELS_PRESET.split("[topology]").next().unwrap().to_string() + &ippp_topology_block(&m);
        let s = Scenario::parse(&text).unwrap();
        let ScenarioTopology::Ippp(r) = s.topology else { panic!() };
        assert!((r.b / m.b - 1.0).abs() < 1e-12);
        assert!((r.rho / m.rho - 1.0).abs() < 1e-12);
    }
}
