use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::SceneError;
use crate::ingest::ModelType;

/// Vacuum permittivity (F/m).
pub const EPSILON_0: f64 = 8.854_187_8128e-12;

const BUILTIN: &str = include_str!("../../data/itu_materials.toml");

pub const CONCRETE: &str = "itu_concrete";
pub const BRICK: &str = "itu_brick";
pub const MEDIUM_DRY_GROUND: &str = "itu_medium_dry_ground";

/// Power-law frequency model of a material's electrical properties.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Material {
    #[serde(skip)]
    pub name: String,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub band_ghz: [f64; 2],
}

impl Material {
    pub fn relative_permittivity(&self, f_hz: f64) -> f64 {
        self.a * (f_hz * 1e-9).powf(self.b)
    }

    /// Conductivity in S/m.
    pub fn conductivity(&self, f_hz: f64) -> f64 {
        self.c * (f_hz * 1e-9).powf(self.d)
    }

    pub fn in_band(&self, f_hz: f64) -> bool {
        let g = f_hz * 1e-9;
        self.band_ghz[0] <= g && g <= self.band_ghz[1]
    }

    /// Complex relative permittivity eta = eps_r - j sigma / (2 pi f eps_0).
    pub fn complex_permittivity(&self, f_hz: f64) -> Complex64 {
        let sigma = self.conductivity(f_hz);
        Complex64::new(
            self.relative_permittivity(f_hz),
            -sigma / (2.0 * std::f64::consts::PI * f_hz * EPSILON_0),
        )
    }

    fn validate(&self) -> Result<(), SceneError> {
        let ok = [self.a, self.b, self.c, self.d, self.band_ghz[0], self.band_ghz[1]]
            .iter()
            .all(|v| v.is_finite())
            && self.a > 0.0
            && self.c >= 0.0
            && self.band_ghz[0] > 0.0
            && self.band_ghz[0] <= self.band_ghz[1];
        if !ok {
            return Err(SceneError::Config(format!("material `{}` has invalid constants", self.name)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaterialTable {
    pub version: String,
    pub materials: BTreeMap<String, Material>,
}

impl MaterialTable {
    /// The shipped ITU table.
    pub fn itu() -> Self {
        Self::from_toml_str(BUILTIN).expect("built-in material table parses")
    }

    pub fn from_toml_str(s: &str) -> Result<Self, SceneError> {
        let t: MaterialTable = toml::from_str(s).map_err(|e| SceneError::Config(e.to_string()))?;
        t.validated()
    }

    /// Fills in material names from their keys and checks every entry.
    pub fn validated(mut self) -> Result<Self, SceneError> {
        for (name, m) in self.materials.iter_mut() {
            m.name = name.clone();
            m.validate()?;
        }
        Ok(self)
    }

    pub fn get(&self, name: &str) -> Result<&Material, SceneError> {
        self.materials
            .get(name)
            .ok_or_else(|| SceneError::Config(format!("unknown material `{name}`")))
    }

    /// Looks up a material for use at `f_hz`, warning when the frequency is
    /// outside the fitted band (the model is then extrapolated).
    pub fn at_frequency(&self, name: &str, f_hz: f64) -> Result<&Material, SceneError> {
        let m = self.get(name)?;
        if !m.in_band(f_hz) {
            log::warn!(
                "material {name}: {:.3} GHz is outside its fitted band {}-{} GHz; extrapolating",
                f_hz * 1e-9,
                m.band_ghz[0],
                m.band_ghz[1]
            );
        }
        Ok(m)
    }
}

/// Material name for a model type: walls are brick, buildings concrete,
/// ground medium-dry ground; anything else falls back to concrete.
pub fn assign_material(model_type: &ModelType) -> &'static str {
    match model_type {
        ModelType::Wall => BRICK,
        ModelType::Building => CONCRETE,
        ModelType::Ground => MEDIUM_DRY_GROUND,
        ModelType::Other(t) => {
            log::warn!("no material rule for model type `{t}`; using {CONCRETE}");
            CONCRETE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn assignment_rules() {
        assert_eq!(assign_material(&ModelType::Building), "itu_concrete");
        assert_eq!(assign_material(&ModelType::Wall), "itu_brick");
        assert_eq!(assign_material(&ModelType::Ground), "itu_medium_dry_ground");
        assert_eq!(assign_material(&ModelType::Other("Gazebo".into())), "itu_concrete");
    }

    #[test]
    fn physical_at_12_7_ghz() {
        let t = MaterialTable::itu();
        let f = 12.7e9;
        for name in [CONCRETE, BRICK, MEDIUM_DRY_GROUND] {
            let m = t.at_frequency(name, f).unwrap();
            assert!(m.relative_permittivity(f) >= 1.0);
            assert!(m.conductivity(f) > 0.0);
            let eta = m.complex_permittivity(f);
            assert!(eta.re >= 1.0 && eta.im <= 0.0);
        }
        assert!(t.get(CONCRETE).unwrap().in_band(f));
        assert!(t.get(BRICK).unwrap().in_band(f));
        assert!(!t.get(MEDIUM_DRY_GROUND).unwrap().in_band(f));
    }

    #[test]
    fn concrete_values() {
        let t = MaterialTable::itu();
        let c = t.get(CONCRETE).unwrap();
        assert_eq!(c.relative_permittivity(12.7e9), 5.24);
        // 0.0462 * 12.7^0.7822
        assert!((c.conductivity(12.7e9) - 0.0462 * 12.7f64.powf(0.7822)).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_table() {
        assert!(MaterialTable::from_toml_str("version = \"x\"\n[materials.m]\na = -1.0\nb = 0.0\nc = 0.0\nd = 0.0\nband_ghz = [1.0, 2.0]\n").is_err());
    }
}
