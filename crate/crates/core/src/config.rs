//! Run configuration: one TOML file with every constant a run depends on.
//!
//! ```toml
//! [crs]            # source projection, unit and custom origin
//! [scene]          # ground plane and pole heights
//! [materials]      # ITU-style material parameters
//! [radio]          # carrier, bandwidth, powers, array, pattern
//! [raytrace]       # reflection order, rays, diffraction
//! [grid]           # coverage cell size and receiver height
//! ```
//!
//! Missing sections take their defaults; unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geodesy::SourceCrs;
use crate::radio::{GridSpec, RadioConfig};
use crate::raytrace::RtConfig;
use crate::scene::{MaterialTable, PoleHeightTable, SceneConfig};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config: {0}")]
    Parse(String),
    #[error("config: {0}")]
    Invalid(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneSection {
    pub ground: bool,
    pub pole_heights: PoleHeightTable,
}

impl Default for SceneSection {
    fn default() -> Self {
        Self {
            ground: true,
            pole_heights: PoleHeightTable::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub crs: SourceCrs,
    pub scene: SceneSection,
    pub materials: MaterialTable,
    pub radio: RadioConfig,
    pub raytrace: RtConfig,
    pub grid: GridSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            crs: SourceCrs::boston(),
            scene: SceneSection::default(),
            materials: MaterialTable::itu(),
            radio: RadioConfig::default(),
            raytrace: RtConfig::default(),
            grid: GridSpec::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, ConfigError> {
        let c: RunConfig = toml::from_str(s).map_err(|e| ConfigError::Parse(e.to_string()))?;
        c.validated()
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let s = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&s)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    fn validated(mut self) -> Result<Self, ConfigError> {
        let bad = |e: &dyn std::fmt::Display| ConfigError::Invalid(e.to_string());
        self.crs.validate().map_err(|e| bad(&e))?;
        self.materials = self.materials.validated().map_err(|e| bad(&e))?;
        let h = &self.scene.pole_heights;
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if !ok(h.default_m) || !h.heights.values().all(|v| ok(*v)) {
            return Err(ConfigError::Invalid("pole heights must be finite and non-negative".into()));
        }
        self.radio.validate().map_err(|e| bad(&e))?;
        self.raytrace.validate().map_err(|e| bad(&e))?;
        if !(self.grid.cell_m.is_finite() && self.grid.cell_m > 0.0 && self.grid.rx_height_m.is_finite()) {
            return Err(ConfigError::Invalid("grid cell must be positive and receiver height finite".into()));
        }
        Ok(self)
    }

    pub fn scene_config(&self) -> SceneConfig {
        SceneConfig {
            lcc: self.crs.lcc.clone(),
            pole_heights: self.scene.pole_heights.clone(),
            ground: self.scene.ground,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_default() {
        assert_eq!(RunConfig::from_toml_str("").unwrap(), RunConfig::default());
    }

    #[test]
    fn toml_round_trip() {
        let mut c = RunConfig::default();
        c.radio.bandwidth = 100e6;
        c.raytrace.n_launch_rays = 1234;
        c.scene.ground = false;
        let back = RunConfig::from_toml_str(&c.to_toml()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn partial_override() {
        let c = RunConfig::from_toml_str("[radio]\nbandwidth = 2e8\n[grid]\ncell_m = 2.0\n").unwrap();
        assert_eq!(c.radio.bandwidth, 2e8);
        assert_eq!(c.radio.f_c, RadioConfig::default().f_c);
        assert_eq!(c.grid.cell_m, 2.0);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(RunConfig::from_toml_str("[radio]\nbandwidth = -1.0\n").is_err());
        assert!(RunConfig::from_toml_str("[raytrace]\nenable_scattering = true\n").is_err());
        assert!(RunConfig::from_toml_str("[grid]\ncell_m = 0.0\n").is_err());
        assert!(RunConfig::from_toml_str("bogus = 1\n").is_err());
    }
}
