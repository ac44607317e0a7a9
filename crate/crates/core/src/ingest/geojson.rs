//! GeoJSON catalogs, tile info and the merged antenna collection.
//!
//! Output is deterministic: properties are written in key order and floats in
//! shortest round-trip form.

use serde_json::{json, Map, Value};

use super::{AntennaRecord, AntennaSource, IngestError, LodCode, ModelRecord, ModelType, TileInfo};
use crate::geodesy::GeoCoord;

pub(crate) struct PointFeature {
    pub label: String,
    pub location: GeoCoord,
    pub properties: Map<String, Value>,
}

fn feature_collection(bytes: &[u8]) -> Result<Vec<Value>, IngestError> {
    let v: Value = serde_json::from_slice(bytes)?;
    if v.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err(IngestError::schema("<root>", "not a FeatureCollection"));
    }
    match v.get("features") {
        Some(Value::Array(a)) => Ok(a.clone()),
        _ => Err(IngestError::schema("<root>", "missing `features` array")),
    }
}

fn label(i: usize, f: &Value, id_keys: &[&str]) -> String {
    let props = f.get("properties");
    for k in id_keys {
        if let Some(id) = props.and_then(|p| p.get(*k)) {
            let id = match id {
                Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            return format!("#{i} ({id})");
        }
    }
    format!("#{i}")
}

fn position(label: &str, c: &Value) -> Result<GeoCoord, IngestError> {
    let arr = c
        .as_array()
        .filter(|a| a.len() == 2 || a.len() == 3)
        .ok_or_else(|| IngestError::schema(label, "position must have 2 or 3 numbers"))?;
    let n = |k: usize| {
        arr[k]
            .as_f64()
            .ok_or_else(|| IngestError::schema(label, "non-numeric coordinate"))
    };
    let alt = if arr.len() == 3 { n(2)? } else { 0.0 };
    GeoCoord::with_alt(n(0)?, n(1)?, alt).map_err(|e| IngestError::schema(label, e.to_string()))
}

fn position_json(g: &GeoCoord) -> Value {
    if g.alt == 0.0 {
        json!([g.lon, g.lat])
    } else {
        json!([g.lon, g.lat, g.alt])
    }
}

pub(crate) fn point_features(bytes: &[u8], id_keys: &[&str]) -> Result<Vec<PointFeature>, IngestError> {
    let mut out = Vec::new();
    for (i, f) in feature_collection(bytes)?.iter().enumerate() {
        let label = label(i, f, id_keys);
        let geom = f
            .get("geometry")
            .ok_or_else(|| IngestError::schema(&label, "missing geometry"))?;
        let kind = geom.get("type").and_then(Value::as_str).unwrap_or("");
        if kind != "Point" {
            return Err(IngestError::schema(&label, format!("expected Point geometry, found `{kind}`")));
        }
        let location = position(&label, geom.get("coordinates").unwrap_or(&Value::Null))?;
        let properties = match f.get("properties") {
            Some(Value::Object(m)) => m.clone(),
            None | Some(Value::Null) => Map::new(),
            Some(_) => return Err(IngestError::schema(&label, "properties must be an object")),
        };
        out.push(PointFeature {
            label,
            location,
            properties,
        });
    }
    Ok(out)
}

fn point_feature(loc: &GeoCoord, props: Map<String, Value>) -> Value {
    json!({
        "type": "Feature",
        "geometry": {"type": "Point", "coordinates": position_json(loc)},
        "properties": Value::Object(props),
    })
}

fn collection(features: Vec<Value>) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(&json!({
        "type": "FeatureCollection",
        "features": features,
    }))
    .expect("JSON values always serialize");
    out.push(b'\n');
    out
}

fn take_string(props: &mut Map<String, Value>, key: &str) -> Option<String> {
    match props.remove(key)? {
        Value::String(s) => Some(s),
        Value::Null => None,
        other => Some(other.to_string()),
    }
}

pub fn parse_catalog(bytes: &[u8]) -> Result<Vec<ModelRecord>, IngestError> {
    point_features(bytes, &["model_id"])?
        .into_iter()
        .map(|f| {
            let mut p = f.properties;
            let model_id = take_string(&mut p, "model_id")
                .ok_or_else(|| IngestError::schema(&f.label, "missing required property `model_id`"))?;
            let model_type: ModelType = take_string(&mut p, "type")
                .ok_or_else(|| IngestError::schema(&f.label, "missing required property `type`"))?
                .parse()
                .unwrap_or_else(|never| match never {});
            let lod = match p.remove("lod") {
                None | Some(Value::Null) => LodCode::Lod1,
                Some(Value::Number(n)) => n
                    .as_f64()
                    .and_then(LodCode::from_code)
                    .ok_or_else(|| IngestError::schema(&f.label, format!("unknown LOD {n}")))?,
                Some(Value::String(s)) => s.parse().map_err(|e: String| IngestError::schema(&f.label, e))?,
                Some(other) => return Err(IngestError::schema(&f.label, format!("bad LOD {other}"))),
            };
            let mesh_path = take_string(&mut p, "mesh").unwrap_or_else(|| format!("meshes/{model_id}.ply"));
            let triangle_count = match p.remove("n_triangles") {
                None | Some(Value::Null) => 0,
                Some(v) => v
                    .as_u64()
                    .ok_or_else(|| IngestError::schema(&f.label, "n_triangles must be a non-negative integer"))?
                    as usize,
            };
            Ok(ModelRecord {
                model_id,
                centroid: f.location,
                model_type,
                lod,
                mesh_path,
                triangle_count,
                attributes: p,
            })
        })
        .collect()
}

fn lod_json(l: LodCode) -> Value {
    let c = l.code();
    if c.fract() == 0.0 {
        json!(c as i64)
    } else {
        json!(c)
    }
}

pub fn write_catalog(records: &[ModelRecord]) -> Vec<u8> {
    let features = records
        .iter()
        .map(|r| {
            let mut p = r.attributes.clone();
            p.insert("model_id".into(), json!(r.model_id));
            p.insert("type".into(), json!(r.model_type.to_string()));
            p.insert("lod".into(), lod_json(r.lod));
            p.insert("mesh".into(), json!(r.mesh_path));
            p.insert("n_triangles".into(), json!(r.triangle_count));
            point_feature(&r.centroid, p)
        })
        .collect();
    collection(features)
}

pub fn parse_tileinfo(bytes: &[u8]) -> Result<TileInfo, IngestError> {
    let features = feature_collection(bytes)?;
    let [f] = features.as_slice() else {
        return Err(IngestError::schema("<root>", format!("expected 1 feature, found {}", features.len())));
    };
    let label = label(0, f, &["name"]);
    let props = f
        .get("properties")
        .and_then(Value::as_object)
        .ok_or_else(|| IngestError::schema(&label, "missing properties"))?;
    let num = |k: &str| {
        props
            .get(k)
            .and_then(Value::as_f64)
            .ok_or_else(|| IngestError::schema(&label, format!("missing numeric property `{k}`")))
    };
    let name = props
        .get("name")
        .and_then(Value::as_str)
        .ok_or_else(|| IngestError::schema(&label, "missing property `name`"))?
        .to_string();
    let center = GeoCoord::new(num("center_lon")?, num("center_lat")?)?;
    let side_m = num("side_m")?;
    let geom = f
        .get("geometry")
        .ok_or_else(|| IngestError::schema(&label, "missing geometry"))?;
    if geom.get("type").and_then(Value::as_str) != Some("Polygon") {
        return Err(IngestError::schema(&label, "tile geometry must be a Polygon"));
    }
    let ring = geom
        .get("coordinates")
        .and_then(Value::as_array)
        .and_then(|r| r.first())
        .and_then(Value::as_array)
        .ok_or_else(|| IngestError::schema(&label, "polygon lacks an exterior ring"))?;
    let mut boundary = ring
        .iter()
        .map(|c| position(&label, c))
        .collect::<Result<Vec<_>, _>>()?;
    if boundary.len() < 4 || boundary.first() != boundary.last() {
        return Err(IngestError::schema(&label, "exterior ring must be closed with at least 3 distinct vertices"));
    }
    boundary.pop();
    Ok(TileInfo {
        name,
        boundary,
        center,
        side_m,
    })
}

pub fn write_tileinfo(info: &TileInfo) -> Vec<u8> {
    let mut ring: Vec<Value> = info.boundary.iter().map(position_json).collect();
    if let Some(first) = ring.first().cloned() {
        ring.push(first);
    }
    let f = json!({
        "type": "Feature",
        "geometry": {"type": "Polygon", "coordinates": [ring]},
        "properties": {
            "name": info.name,
            "center_lon": info.center.lon,
            "center_lat": info.center.lat,
            "side_m": info.side_m,
        },
    });
    collection(vec![f])
}

/// Reads the merged antenna collection written by [`write_antennas`].
pub fn parse_antennas(bytes: &[u8]) -> Result<Vec<AntennaRecord>, IngestError> {
    point_features(bytes, &["antenna_id"])?
        .into_iter()
        .map(|f| {
            let mut p = f.properties;
            let antenna_id = take_string(&mut p, "antenna_id")
                .ok_or_else(|| IngestError::schema(&f.label, "missing property `antenna_id`"))?;
            let pole_type = take_string(&mut p, "pole_type").unwrap_or_default();
            let source = match take_string(&mut p, "source_dataset").as_deref() {
                Some("pre-2017") => AntennaSource::Pre2017,
                Some("post-2017") => AntennaSource::Post2017,
                other => {
                    return Err(IngestError::schema(
                        &f.label,
                        format!("bad source_dataset {other:?}"),
                    ))
                }
            };
            Ok(AntennaRecord {
                antenna_id,
                location: f.location,
                pole_type,
                source,
                attributes: p,
            })
        })
        .collect()
}

pub fn write_antennas(records: &[AntennaRecord]) -> Vec<u8> {
    let features = records
        .iter()
        .map(|r| {
            let mut p = r.attributes.clone();
            p.insert("antenna_id".into(), json!(r.antenna_id));
            p.insert("pole_type".into(), json!(r.pole_type));
            p.insert("source_dataset".into(), json!(r.source.as_str()));
            point_feature(&r.location, p)
        })
        .collect();
    collection(features)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_collection() {
        let b = br#"{"type":"FeatureCollection","features":[]}"#;
        assert!(parse_catalog(b).unwrap().is_empty());
    }

    #[test]
    fn missing_required_property_names_feature() {
        let b = br#"{"type":"FeatureCollection","features":[
            {"type":"Feature","geometry":{"type":"Point","coordinates":[-71.1,42.3]},
             "properties":{"model_id":"abc","lod":1}}]}"#;
        let e = parse_catalog(b).unwrap_err().to_string();
        assert!(e.contains("abc") && e.contains("type"), "{e}");
    }

    #[test]
    fn catalog_round_trip_preserves_attributes() {
        let mut attrs = Map::new();
        attrs.insert("height_ft".into(), json!(123.5));
        attrs.insert("owner".into(), json!("city"));
        let r = ModelRecord {
            model_id: "B_17".into(),
            centroid: GeoCoord::new(-71.10251895713, 42.35709028271).unwrap(),
            model_type: ModelType::Other("Gazebo".into()),
            lod: LodCode::Lod3_25,
            mesh_path: "meshes/B_17.ply".into(),
            triangle_count: 44,
            attributes: attrs,
        };
        let back = parse_catalog(&write_catalog(&[r.clone()])).unwrap();
        assert_eq!(back, vec![r]);
    }

    #[test]
    fn tileinfo_for_f4() {
        let info = TileInfo {
            name: "BOS_F_4".into(),
            boundary: vec![
                GeoCoord::new(-71.11, 42.35).unwrap(),
                GeoCoord::new(-71.09, 42.35).unwrap(),
                GeoCoord::new(-71.09, 42.36).unwrap(),
                GeoCoord::new(-71.11, 42.36).unwrap(),
            ],
            center: GeoCoord::new(-71.1025189571, 42.3570902827).unwrap(),
            side_m: 1524.003048,
        };
        let back = parse_tileinfo(&write_tileinfo(&info)).unwrap();
        assert_eq!(back, info);
        assert_eq!(back.center.lon, -71.1025189571);
        assert_eq!(back.center.lat, 42.3570902827);
    }

    #[test]
    fn non_point_rejected() {
        let b = br#"{"type":"FeatureCollection","features":[
            {"type":"Feature","geometry":{"type":"LineString","coordinates":[[0,0],[1,1]]},"properties":{}}]}"#;
        assert!(point_features(b, &[]).is_err());
    }
}
