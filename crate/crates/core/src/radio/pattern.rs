//! Sectorized base-station antennas with the 3GPP TR 38.901 element pattern.

use serde::{Deserialize, Serialize};

use super::RadioError;
use crate::math::Vec3;

/// One sector of a base station. Azimuth 0 deg points along local +y
/// (north) and grows clockwise; positive downtilt points below the horizon.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sector {
    pub azimuth_deg: f64,
    pub width_deg: f64,
    pub downtilt_deg: f64,
}

impl Sector {
    pub const DEFAULT_WIDTH_DEG: f64 = 120.0;

    pub fn new(azimuth_deg: f64, width_deg: f64, downtilt_deg: f64) -> Result<Self, RadioError> {
        let s = Self {
            azimuth_deg,
            width_deg,
            downtilt_deg,
        };
        s.validate()?;
        Ok(s)
    }

    /// `n` equal sectors starting at azimuth 0.
    pub fn evenly_spaced(n: usize) -> Vec<Sector> {
        let w = 360.0 / n as f64;
        (0..n)
            .map(|i| Sector {
                azimuth_deg: w * i as f64,
                width_deg: Self::DEFAULT_WIDTH_DEG.min(w),
                downtilt_deg: 0.0,
            })
            .collect()
    }

    pub fn validate(&self) -> Result<(), RadioError> {
        if !(self.width_deg > 0.0 && self.width_deg <= 360.0) {
            return Err(RadioError::Config(format!("sector width {} outside (0, 360]", self.width_deg)));
        }
        if !self.azimuth_deg.is_finite() || !(-90.0..=90.0).contains(&self.downtilt_deg) {
            return Err(RadioError::Config("sector azimuth/downtilt out of range".into()));
        }
        Ok(())
    }

    /// Unit boresight vector in local east/north/up coordinates.
    pub fn boresight(&self) -> Vec3 {
        let (sa, ca) = self.azimuth_deg.to_radians().sin_cos();
        let (st, ct) = self.downtilt_deg.to_radians().sin_cos();
        Vec3::new(sa * ct, ca * ct, -st)
    }

    /// Pattern angles (theta from the sector's zenith, phi from boresight),
    /// in degrees, of a unit direction given in local coordinates.
    pub fn local_angles(&self, dir: &Vec3) -> (f64, f64) {
        let x = self.boresight();
        let (sa, ca) = self.azimuth_deg.to_radians().sin_cos();
        let (st, ct) = self.downtilt_deg.to_radians().sin_cos();
        // tilted zenith, orthogonal to the boresight
        let z = Vec3::new(sa * st, ca * st, ct);
        let y = z.cross(&x);
        let theta = dir.dot(&z).clamp(-1.0, 1.0).acos().to_degrees();
        let phi = dir.dot(&y).atan2(dir.dot(&x)).to_degrees();
        (theta, phi)
    }
}

/// Parameters of the TR 38.901 single-element radiation pattern.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElementPattern {
    pub theta_3db_deg: f64,
    pub phi_3db_deg: f64,
    pub sla_v_db: f64,
    pub a_max_db: f64,
    pub g_max_dbi: f64,
}

impl Default for ElementPattern {
    fn default() -> Self {
        Self {
            theta_3db_deg: 65.0,
            phi_3db_deg: 65.0,
            sla_v_db: 30.0,
            a_max_db: 30.0,
            g_max_dbi: 8.0,
        }
    }
}

impl ElementPattern {
    pub fn validate(&self) -> Result<(), RadioError> {
        let ok = self.theta_3db_deg > 0.0
            && self.phi_3db_deg > 0.0
            && self.sla_v_db >= 0.0
            && self.a_max_db >= 0.0
            && self.g_max_dbi.is_finite()
            && self.sla_v_db.is_finite()
            && self.a_max_db.is_finite();
        if !ok {
            return Err(RadioError::Config("invalid element pattern".into()));
        }
        Ok(())
    }

    /// Attenuation in dB relative to boresight, in [0, A_max].
    pub fn attenuation_db(&self, theta_deg: f64, phi_deg: f64) -> f64 {
        let a_v = -(12.0 * ((theta_deg - 90.0) / self.theta_3db_deg).powi(2)).min(self.sla_v_db);
        let a_h = -(12.0 * (phi_deg / self.phi_3db_deg).powi(2)).min(self.a_max_db);
        (-(a_v + a_h)).min(self.a_max_db)
    }
}

/// Element gain in dBi for zenith angle `theta_deg` in [0, 180] and azimuth
/// `phi_deg` in [-180, 180], both relative to the element's boresight frame.
pub fn element_gain(theta_deg: f64, phi_deg: f64, pattern: &ElementPattern) -> f64 {
    pattern.g_max_dbi - pattern.attenuation_db(theta_deg, phi_deg)
}

/// Ideal per-link beam-steering gain of a `rows × cols` array.
pub fn array_gain_db(rows: u32, cols: u32) -> f64 {
    10.0 * ((rows as f64) * (cols as f64)).log10()
}

/// Transmit gain (dBi) toward `dir`: the element pattern in sector-local
/// angles plus the array steering gain. Directions outside the sector width
/// are still evaluated; the pattern supplies the roll-off.
pub fn tx_gain(dir: &Vec3, sector: &Sector, pattern: &ElementPattern, array: (u32, u32)) -> f64 {
    let (theta, phi) = sector.local_angles(dir);
    element_gain(theta, phi, pattern) + array_gain_db(array.0, array.1)
}
