use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::geojson::point_features;
use super::{AntennaRecord, IngestError};
use crate::geodesy::GeoCoord;

/// Records closer than this with the same id are the same antenna.
pub const DUPLICATE_DISTANCE_M: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AntennaSource {
    #[serde(rename = "pre-2017")]
    Pre2017,
    #[serde(rename = "post-2017")]
    Post2017,
}

impl AntennaSource {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Pre2017 => "pre-2017",
            Self::Post2017 => "post-2017",
        }
    }
}

/// Which source properties hold the antenna id and the pole type. The first
/// key present in a feature wins.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnMapping {
    pub id: Vec<String>,
    pub pole_type: Vec<String>,
}

impl ColumnMapping {
    pub fn pre_2017() -> Self {
        Self {
            id: vec!["DAS_ID".into(), "antenna_id".into()],
            pole_type: vec!["Pole_Type".into(), "pole_type".into()],
        }
    }

    pub fn post_2017() -> Self {
        Self {
            id: vec!["Antenna_ID".into(), "antenna_id".into()],
            pole_type: vec!["New_Pole_Type".into(), "pole_type".into()],
        }
    }

    fn extract(&self, props: &mut Map<String, Value>, keys_of: fn(&Self) -> &[String]) -> Option<String> {
        for k in keys_of(self) {
            if let Some(v) = props.remove(k) {
                return match v {
                    Value::String(s) => Some(s),
                    Value::Null => None,
                    other => Some(other.to_string()),
                };
            }
        }
        None
    }
}

fn ground_distance_m(a: &GeoCoord, b: &GeoCoord) -> f64 {
    // equirectangular; exact enough at sub-meter separations
    const R: f64 = 6_371_008.8;
    let lat = 0.5 * (a.lat + b.lat).to_radians();
    let dx = (b.lon - a.lon).to_radians() * lat.cos() * R;
    let dy = (b.lat - a.lat).to_radians() * R;
    dx.hypot(dy)
}

fn load(
    bytes: &[u8],
    mapping: &ColumnMapping,
    source: AntennaSource,
) -> Result<Vec<AntennaRecord>, IngestError> {
    let id_keys: Vec<&str> = mapping.id.iter().map(String::as_str).collect();
    Ok(point_features(bytes, &id_keys)?
        .into_iter()
        .enumerate()
        .map(|(i, f)| {
            let mut p = f.properties;
            let antenna_id = mapping
                .extract(&mut p, |m| &m.id)
                .unwrap_or_else(|| format!("{}-{i}", source.as_str()));
            let pole_type = mapping.extract(&mut p, |m| &m.pole_type).unwrap_or_default();
            AntennaRecord {
                antenna_id,
                location: f.location,
                pole_type,
                source,
                attributes: p,
            }
        })
        .collect())
}

/// Merges the two approval datasets under unified property names. Records
/// present in both (same id, within 0.5 m) are kept once, from the newer set.
/// Output order: surviving pre-2017 records, then post-2017 records, each in
/// input order.
pub fn merge_antenna_datasets(
    pre2017: &[u8],
    post2017: &[u8],
    pre_mapping: &ColumnMapping,
    post_mapping: &ColumnMapping,
) -> Result<Vec<AntennaRecord>, IngestError> {
    let pre = load(pre2017, pre_mapping, AntennaSource::Pre2017)?;
    let post = load(post2017, post_mapping, AntennaSource::Post2017)?;
    let mut by_id: HashMap<&str, Vec<&GeoCoord>> = HashMap::new();
    for r in &post {
        by_id.entry(&r.antenna_id).or_default().push(&r.location);
    }
    let mut out: Vec<AntennaRecord> = pre
        .iter()
        .filter(|r| {
            !by_id.get(r.antenna_id.as_str()).is_some_and(|locs| {
                locs.iter()
                    .any(|l| ground_distance_m(l, &r.location) <= DUPLICATE_DISTANCE_M)
            })
        })
        .cloned()
        .collect();
    out.extend(post);
    Ok(out)
}
