//! Radio, geometry and antenna parameters, propagation and unit conversions.
//!
//! Everything is SI internally. dBm, MHz, km and V/m only appear in the
//! helper constructors and in [`ExposureValue`].
//!
//! ```
//! use emfcov::model::{RadioConfig, dbm_to_watt};
//! let radio = RadioConfig::new(2132.7e6, 14.8e6, dbm_to_watt(66.0), 33.0, 3.2, 1, 6.0).unwrap();
//! assert!((radio.kappa() - 7991.7).abs() < 0.1);
//! ```

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const BOLTZMANN: f64 = 1.380649e-23;
pub const T0_KELVIN: f64 = 290.0;
/// Free-space wave impedance 120π Ω.
pub const ETA0: f64 = 120.0 * PI;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid parameter {name}: {reason}")]
    Invalid { name: &'static str, reason: String },
}

fn invalid(name: &'static str, reason: impl Into<String>) -> ModelError {
    ModelError::Invalid { name, reason: reason.into() }
}

pub fn dbm_to_watt(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0) * 1e-3
}

pub fn watt_to_dbm(w: f64) -> f64 {
    10.0 * (w * 1e3).log10()
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadioConfig {
    /// carrier frequency, Hz
    pub f: f64,
    /// bandwidth, Hz
    pub bw: f64,
    /// EIRP P_t G_max, W
    pub pt_gmax: f64,
    /// BS height, m
    pub z: f64,
    pub alpha: f64,
    /// Nakagami shape
    pub m: u32,
    pub noise_figure_db: f64,
}

impl RadioConfig {
    pub fn new(f: f64, bw: f64, pt_gmax: f64, z: f64, alpha: f64, m: u32, noise_figure_db: f64) -> Result<Self, ModelError> {
        let r = RadioConfig { f, bw, pt_gmax, z, alpha, m, noise_figure_db };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.f > 0.0) {
            return Err(invalid("f", "must be positive"));
        }
        if !(self.bw > 0.0) {
            return Err(invalid("bw", "must be positive"));
        }
        if !(self.pt_gmax >= 0.0) || !self.pt_gmax.is_finite() {
            return Err(invalid("pt_gmax", "must be finite and nonnegative"));
        }
        if !(self.z > 0.0) {
            return Err(invalid("z", "must be positive"));
        }
        if !(self.alpha > 2.0) {
            return Err(invalid("alpha", format!("path-loss exponent {} must exceed 2", self.alpha)));
        }
        if self.m < 1 {
            return Err(invalid("m", "Nakagami order must be >= 1"));
        }
        Ok(())
    }

    /// κ = (4πf/c₀)².
    pub fn kappa(&self) -> f64 {
        kappa(self.f)
    }

    /// κ⁻¹ (r² + z²)^(-α/2).
    pub fn path_gain(&self, r: f64) -> f64 {
        self.path_gain_sq(r * r)
    }

    /// Path gain as a function of the squared horizontal distance u = r².
    pub fn path_gain_sq(&self, u: f64) -> f64 {
        (u + self.z * self.z).powf(-0.5 * self.alpha) / self.kappa()
    }

    /// Mean received power P̄_r(r) = P_t G_max l(r).
    pub fn mean_rx_power(&self, r: f64) -> f64 {
        self.pt_gmax * self.path_gain(r)
    }

    pub fn mean_rx_power_sq(&self, u: f64) -> f64 {
        self.pt_gmax * self.path_gain_sq(u)
    }

    /// Thermal noise plus noise figure, W.
    pub fn noise_power(&self) -> f64 {
        noise_power(self.bw, self.noise_figure_db)
    }

    /// Fading power CDF F_{|h|²}(x) for Gamma(m, 1/m).
    pub fn fading_cdf(&self, x: f64) -> f64 {
        crate::specfun::regularized_lower_gamma_real(self.m, self.m as f64 * x)
    }

    pub fn convert(&self, power: f64) -> Result<ExposureValue, ModelError> {
        convert_exposure(power, self)
    }
}

pub fn kappa(f: f64) -> f64 {
    let k = 4.0 * PI * f / SPEED_OF_LIGHT;
    k * k
}

/// σ² in W from 10 log10(k T₀ B) + 30 + F dBm.
pub fn noise_power(bw: f64, noise_figure_db: f64) -> f64 {
    dbm_to_watt(10.0 * (BOLTZMANN * T0_KELVIN * bw).log10() + 30.0 + noise_figure_db)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometryConfig {
    /// exclusion radius, m
    pub r_e: f64,
    /// study-disk radius, m
    pub tau: f64,
}

impl GeometryConfig {
    pub fn new(r_e: f64, tau: f64) -> Result<Self, ModelError> {
        let g = GeometryConfig { r_e, tau };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.r_e >= 0.0) || !(self.tau > self.r_e) || !self.tau.is_finite() {
            return Err(invalid("geometry", format!("need 0 <= r_e < tau, got r_e={} tau={}", self.r_e, self.tau)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamformingConfig {
    /// main-lobe half width, rad
    pub omega: f64,
    pub p_g: f64,
    pub enabled: bool,
}

impl BeamformingConfig {
    /// Dynamic beamforming with main lobe ω; p_g = 3ω/(2π).
    pub fn directional(omega: f64) -> Result<Self, ModelError> {
        Ok(BeamformingConfig { omega, p_g: illumination_probability(omega)?, enabled: true })
    }

    /// No dynamic beamforming: every BS radiates towards the user.
    pub fn disabled() -> Self {
        BeamformingConfig { omega: 2.0 * PI / 3.0, p_g: 1.0, enabled: false }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.enabled {
            let p = illumination_probability(self.omega)?;
            if (p - self.p_g).abs() > 1e-12 {
                return Err(invalid("p_g", format!("{} inconsistent with omega={} (expected {p})", self.p_g, self.omega)));
            }
        } else if self.p_g != 1.0 {
            return Err(invalid("p_g", "must be 1 without beamforming"));
        }
        Ok(())
    }
}

/// Two-level sector gain normalized to G_max = 1; the boundary |θ| = ω is inside the lobe.
pub fn sector_gain(theta: f64, bf: &BeamformingConfig) -> f64 {
    if theta.abs() <= bf.omega {
        1.0
    } else {
        0.0
    }
}

/// p_g = 3ω/(2π) for ω in [0, 2π/3].
pub fn illumination_probability(omega: f64) -> Result<f64, ModelError> {
    if !(0.0..=2.0 * PI / 3.0 + 1e-15).contains(&omega) {
        return Err(invalid("omega", format!("{omega} outside [0, 2π/3]")));
    }
    Ok((3.0 * omega / (2.0 * PI)).min(1.0))
}

/// One exposure level in the three customary units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExposureValue {
    /// received power, W
    pub power: f64,
    /// incident power density, W/m²
    pub ipd: f64,
    /// RMS electric field, V/m
    pub field: f64,
}

impl ExposureValue {
    pub fn power_dbm(&self) -> f64 {
        watt_to_dbm(self.power)
    }

    pub fn from_ipd(ipd: f64, radio: &RadioConfig) -> Result<Self, ModelError> {
        if !(ipd >= 0.0) {
            return Err(invalid("ipd", "must be nonnegative"));
        }
        convert_exposure(ipd * 4.0 * PI / radio.kappa(), radio)
    }

    pub fn from_field(field: f64, radio: &RadioConfig) -> Result<Self, ModelError> {
        if !(field >= 0.0) {
            return Err(invalid("field", "must be nonnegative"));
        }
        Self::from_ipd(field * field / ETA0, radio)
    }

    pub fn from_dbm(dbm: f64, radio: &RadioConfig) -> Result<Self, ModelError> {
        convert_exposure(dbm_to_watt(dbm), radio)
    }
}

/// Power (W) to IPD = κ/(4π)·P and field = √(120π·IPD).
pub fn convert_exposure(power: f64, radio: &RadioConfig) -> Result<ExposureValue, ModelError> {
    if !(power >= 0.0) {
        return Err(invalid("power", format!("{power} must be nonnegative")));
    }
    let ipd = radio.kappa() / (4.0 * PI) * power;
    Ok(ExposureValue { power, ipd, field: (ETA0 * ipd).sqrt() })
}
