use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{ElementPattern, RadioError};
use crate::raytrace::PropagationPath;

/// Thermal noise density at 290 K, dBm/Hz.
pub const THERMAL_NOISE_DBM_HZ: f64 = -174.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Summation {
    /// Complex sum of path fields.
    Coherent,
    /// Sum of path powers.
    Power,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioConfig {
    pub f_c: f64,
    pub bandwidth: f64,
    /// Per sector.
    pub tx_power_dbm: f64,
    pub noise_figure_db: f64,
    pub array: (u32, u32),
    /// Element spacing in wavelengths; recorded, not used by the ideal
    /// steering model.
    pub element_spacing: f64,
    pub pattern: ElementPattern,
    pub rx_gain_dbi: f64,
    pub summation: Summation,
}

impl Default for RadioConfig {
    fn default() -> Self {
        Self {
            f_c: 12.7e9,
            bandwidth: 400e6,
            tx_power_dbm: 30.0,
            noise_figure_db: 7.0,
            array: (4, 4),
            element_spacing: 0.5,
            pattern: ElementPattern::default(),
            rx_gain_dbi: 0.0,
            summation: Summation::Coherent,
        }
    }
}

impl RadioConfig {
    pub fn validate(&self) -> Result<(), RadioError> {
        let pos = |v: f64| v.is_finite() && v > 0.0;
        if !pos(self.f_c) {
            return Err(RadioError::Config(format!("carrier frequency must be positive, got {}", self.f_c)));
        }
        if !pos(self.bandwidth) {
            return Err(RadioError::Config(format!("bandwidth must be positive, got {}", self.bandwidth)));
        }
        if self.array.0 < 1 || self.array.1 < 1 {
            return Err(RadioError::Config(format!("array dimensions must be at least 1, got {:?}", self.array)));
        }
        if !(self.tx_power_dbm.is_finite() && self.noise_figure_db.is_finite() && self.rx_gain_dbi.is_finite()) {
            return Err(RadioError::Config("powers and gains must be finite".into()));
        }
        self.pattern.validate()
    }

    pub fn noise_floor_dbm(&self) -> f64 {
        THERMAL_NOISE_DBM_HZ + 10.0 * self.bandwidth.log10() + self.noise_figure_db
    }
}

/// Free-space path loss in dB.
pub fn fspl_db(d: f64, f_c: f64) -> f64 {
    let lambda = crate::raytrace::SPEED_OF_LIGHT / f_c;
    20.0 * (4.0 * std::f64::consts::PI * d / lambda).log10()
}

/// Received power in dBm from the co-polar path gains, each weighted by the
/// transmit and receive antenna gains (dBi) toward that path. No paths
/// gives negative infinity (outage).
pub fn received_power(
    paths: &[PropagationPath],
    tx_gain_dbi: impl Fn(&PropagationPath) -> f64,
    rx_gain_dbi: impl Fn(&PropagationPath) -> f64,
    cfg: &RadioConfig,
) -> f64 {
    let weight = |p: &PropagationPath| 10f64.powf((tx_gain_dbi(p) + rx_gain_dbi(p)) / 20.0);
    let gain = match cfg.summation {
        Summation::Coherent => paths
            .iter()
            .map(|p| {
                let phase = Complex64::from_polar(1.0, -std::f64::consts::TAU * cfg.f_c * p.delay_s);
                p.copolar() * phase * weight(p)
            })
            .sum::<Complex64>()
            .norm_sqr(),
        Summation::Power => paths.iter().map(|p| (p.copolar() * weight(p)).norm_sqr()).sum(),
    };
    cfg.tx_power_dbm + 10.0 * gain.log10()
}

pub fn snr_db(p_rx_dbm: f64, cfg: &RadioConfig) -> f64 {
    p_rx_dbm - cfg.noise_floor_dbm()
}

/// B·log2(1 + SNR) in bit/s; zero at outage.
pub fn shannon_capacity(snr_db: f64, bandwidth: f64) -> f64 {
    bandwidth * (10f64.powf(snr_db / 10.0)).ln_1p() / std::f64::consts::LN_2
}

/// The SNR (dB) at which the Shannon capacity equals `rate`.
pub fn min_snr_for_rate(rate: f64, bandwidth: f64) -> f64 {
    10.0 * (rate / bandwidth * std::f64::consts::LN_2).exp_m1().log10()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateRequirement {
    pub name: String,
    /// bit/s
    pub rate: f64,
}

impl RateRequirement {
    pub fn new(name: impl Into<String>, rate: f64) -> Result<Self, RadioError> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(RadioError::Config(format!("required rate must be positive, got {rate}")));
        }
        Ok(Self { name: name.into(), rate })
    }

    /// Extended reality downlink, 30 Mbit/s.
    pub fn xr() -> Self {
        Self {
            name: "XR".into(),
            rate: 30e6,
        }
    }

    /// Vehicle sensor sharing, 700 Mbit/s.
    pub fn v2x() -> Self {
        Self {
            name: "V2X".into(),
            rate: 700e6,
        }
    }
}
