use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SceneError;

const BUILTIN: &str = include_str!("../../data/pole_heights.toml");

/// Pole type → antenna mounting height. Keys match case-insensitively
/// after trimming; unknown or empty pole types fall back to `default_m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoleHeightTable {
    pub default_m: f64,
    #[serde(default)]
    pub heights: BTreeMap<String, f64>,
}

impl Default for PoleHeightTable {
    fn default() -> Self {
        Self::from_toml_str(BUILTIN).expect("built-in pole height table parses")
    }
}

impl PoleHeightTable {
    pub fn from_toml_str(s: &str) -> Result<Self, SceneError> {
        let t: PoleHeightTable = toml::from_str(s).map_err(|e| SceneError::Config(e.to_string()))?;
        let bad = |h: f64| !(h.is_finite() && h >= 0.0);
        if bad(t.default_m) || t.heights.values().any(|h| bad(*h)) {
            return Err(SceneError::Config("pole heights must be finite and non-negative".into()));
        }
        Ok(t)
    }

    pub fn from_file(path: &Path) -> Result<Self, SceneError> {
        let s = std::fs::read_to_string(path).map_err(|e| SceneError::io(path, e))?;
        Self::from_toml_str(&s)
    }

    pub fn height_for(&self, pole_type: &str) -> f64 {
        let key = pole_type.trim();
        if key.is_empty() {
            return self.default_m;
        }
        self.heights
            .iter()
            .find(|(k, _)| k.trim().eq_ignore_ascii_case(key))
            .map(|(_, h)| *h)
            .unwrap_or(self.default_m)
    }
}

pub fn antenna_height_from_pole_type(pole_type: &str, table: &PoleHeightTable) -> f64 {
    table.height_for(pole_type)
}
