//! Source model catalog: one row per model with its OBJ file, as CSV or
//! as a GeoJSON FeatureCollection whose properties carry the same columns.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::IngestError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CatalogRow {
    pub model_id: String,
    #[serde(rename = "type")]
    pub model_type: String,
    pub lod: String,
    /// OBJ path relative to the source directory.
    pub obj: String,
}

pub fn parse_csv_catalog(bytes: &[u8]) -> Result<Vec<CatalogRow>, IngestError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(bytes);
    let headers = rdr.headers()?.clone();
    for col in ["model_id", "type", "lod", "obj"] {
        if !headers.iter().any(|h| h == col) {
            return Err(IngestError::Invalid(format!(
                "catalog header lacks column `{col}`"
            )));
        }
    }
    let rows = rdr
        .deserialize()
        .collect::<Result<Vec<CatalogRow>, _>>()?;
    Ok(rows)
}

pub fn write_csv_catalog(rows: &[CatalogRow]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("in-memory CSV write");
    }
    w.into_inner().expect("in-memory CSV flush")
}

/// Features with properties `model_id`, `type`, `lod`, `obj`; geometry is
/// ignored. Numeric `lod` values are accepted.
pub fn parse_geojson_catalog(bytes: &[u8]) -> Result<Vec<CatalogRow>, IngestError> {
    let v: Value = serde_json::from_slice(bytes)?;
    if v.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err(IngestError::Invalid("catalog is not a GeoJSON FeatureCollection".into()));
    }
    let features = v
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| IngestError::Invalid("FeatureCollection lacks `features`".into()))?;
    features
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let props = f.get("properties").and_then(Value::as_object);
            let field = |k: &str| -> Result<String, IngestError> {
                match props.and_then(|p| p.get(k)) {
                    Some(Value::String(s)) => Ok(s.trim().to_string()),
                    Some(Value::Number(n)) => Ok(n.to_string()),
                    _ => Err(IngestError::Schema {
                        feature: format!("#{i}"),
                        msg: format!("missing property `{k}`"),
                    }),
                }
            };
            Ok(CatalogRow {
                model_id: field("model_id")?,
                model_type: field("type")?,
                lod: field("lod")?,
                obj: field("obj")?,
            })
        })
        .collect()
}

/// GeoJSON when the first non-blank byte is `{`, CSV otherwise.
pub fn parse_source_catalog(bytes: &[u8]) -> Result<Vec<CatalogRow>, IngestError> {
    match bytes.iter().find(|b| !b.is_ascii_whitespace()) {
        Some(b'{') => parse_geojson_catalog(bytes),
        _ => parse_csv_catalog(bytes),
    }
}
