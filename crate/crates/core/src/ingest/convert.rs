//! OBJ tile → metric, origin-centered binary PLY plus georeferencing catalogs.

use std::collections::HashSet;
use std::path::Path;

use rayon::prelude::*;
use serde_json::Map;

use super::{
    parse_obj, triangulate_polygon, write_catalog, write_ply, write_tileinfo, CatalogRow,
    DatasetLayout, IngestError, LodCode, ModelRecord, ModelType, TileInfo,
};
use crate::geodesy::{GeoCoord, Lcc, SourceCrs, TileGrid, TileId};
use crate::mesh::{remove_degenerate, validate, TriangleMesh};

#[derive(Clone, Debug, PartialEq)]
pub struct SkippedModel {
    pub model_id: String,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConversionReport {
    pub tile: TileInfo,
    pub records: Vec<ModelRecord>,
    pub skipped: Vec<SkippedModel>,
    /// Sum of triangle counts over written meshes.
    pub triangles: usize,
    /// Degenerate or duplicate triangles dropped during cleaning.
    pub removed_triangles: usize,
}

/// Axis-aligned square in absolute projected meters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TileSquare {
    pub center_m: (f64, f64),
    pub side_m: f64,
}

impl TileSquare {
    pub fn corners_m(&self) -> [(f64, f64); 4] {
        let h = 0.5 * self.side_m;
        let (x, y) = self.center_m;
        [(x - h, y - h), (x + h, y - h), (x + h, y + h), (x - h, y + h)]
    }

    pub fn to_tileinfo(&self, name: &str, lcc: &Lcc) -> Result<TileInfo, IngestError> {
        let boundary = self
            .corners_m()
            .iter()
            .map(|(x, y)| lcc.inverse_m(*x, *y))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(TileInfo {
            name: name.to_string(),
            boundary,
            center: lcc.inverse_m(self.center_m.0, self.center_m.1)?,
            side_m: self.side_m,
        })
    }
}

struct Converted {
    record: ModelRecord,
    bounds_m: [f64; 4],
    removed: usize,
}

/// Chooses the recentering offset. Starting from the vertex mean, the offset
/// is nudged by the residual mean of the rounded float32 coordinates, keeping
/// the offset whose rounded vertices average closest to zero.
fn recenter(values: &[f64]) -> (f64, Vec<f32>) {
    let n = values.len() as f64;
    let mut c = values.iter().sum::<f64>() / n;
    let round = |c: f64| -> (f64, Vec<f32>) {
        let v: Vec<f32> = values.iter().map(|x| (x - c) as f32).collect();
        let r = v.iter().map(|&x| x as f64).sum::<f64>() / n;
        (r, v)
    };
    let (mut r, mut v) = round(c);
    let mut best = (r.abs(), c, v.clone());
    for _ in 0..8 {
        if r == 0.0 {
            break;
        }
        c += r;
        (r, v) = round(c);
        if r.abs() < best.0 {
            best = (r.abs(), c, v.clone());
        }
    }
    (best.1, best.2)
}

fn convert_model(
    row: &CatalogRow,
    obj_dir: &Path,
    crs: &SourceCrs,
    lcc: &Lcc,
    meshes_dir: &Path,
) -> Result<Converted, String> {
    if row.model_id.is_empty()
        || row.model_id.contains(['/', '\\'])
        || row.model_id.starts_with('.')
    {
        return Err(format!("model id `{}` is not usable as a file name", row.model_id));
    }
    let lod: LodCode = row.lod.parse()?;
    let path = obj_dir.join(&row.obj);
    let bytes = std::fs::read(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    let raw = parse_obj(&bytes).map_err(|e| format!("{}: {e}", row.obj))?;
    let unit = crs.source_unit();
    let metric: Vec<[f64; 3]> = raw
        .vertices
        .iter()
        .map(|v| {
            let (e, n) = crs.source_to_projected_m(v[0], v[1]);
            [e, n, unit.to_meters(v[2])]
        })
        .collect();
    let triangles: Vec<[u32; 3]> = raw
        .faces
        .iter()
        .flat_map(|f| triangulate_polygon(&metric, f))
        .collect();
    let xs: Vec<f64> = metric.iter().map(|p| p[0]).collect();
    let ys: Vec<f64> = metric.iter().map(|p| p[1]).collect();
    let (cx, fx) = recenter(&xs);
    let (cy, fy) = recenter(&ys);
    let vertices: Vec<[f32; 3]> = (0..metric.len())
        .map(|i| [fx[i], fy[i], metric[i][2] as f32])
        .collect();
    let mut mesh = TriangleMesh::new(vertices, triangles);
    let report = validate(&mesh);
    if report.has_fatal() {
        return Err(format!("invalid mesh: {:?}", report.defects.first()));
    }
    let removed = remove_degenerate(&mut mesh);
    if mesh.triangles.is_empty() {
        return Err("no valid triangles".into());
    }
    let file = format!("{}.ply", row.model_id);
    let out = meshes_dir.join(&file);
    std::fs::write(&out, write_ply(&mesh)).map_err(|e| format!("{}: {e}", out.display()))?;
    let centroid: GeoCoord = lcc.inverse_m(cx, cy).map_err(|e| e.to_string())?;
    let fold = |v: &[f64], f: fn(f64, f64) -> f64, init: f64| v.iter().copied().fold(init, f);
    Ok(Converted {
        record: ModelRecord {
            model_id: row.model_id.clone(),
            centroid,
            model_type: row.model_type.parse::<ModelType>().unwrap_or_else(|n| match n {}),
            lod,
            mesh_path: format!("meshes/{file}"),
            triangle_count: mesh.triangles.len(),
            attributes: Map::new(),
        },
        bounds_m: [
            fold(&xs, f64::min, f64::INFINITY),
            fold(&ys, f64::min, f64::INFINITY),
            fold(&xs, f64::max, f64::NEG_INFINITY),
            fold(&ys, f64::max, f64::NEG_INFINITY),
        ],
        removed,
    })
}

/// Converts every catalog row's OBJ into `out`, continuing past broken
/// models. Standard tile names take their square from the tile grid; other
/// names get the bounding square of the converted geometry.
pub fn convert_tile(
    obj_dir: &Path,
    catalog: &[CatalogRow],
    crs: &SourceCrs,
    tile_name: &str,
    out: &DatasetLayout,
) -> Result<ConversionReport, IngestError> {
    crs.validate()?;
    let lcc = Lcc::new(&crs.lcc)?;
    let meshes_dir = out.meshes_dir();
    std::fs::create_dir_all(&meshes_dir).map_err(|e| IngestError::io(&meshes_dir, e))?;

    let mut seen = HashSet::new();
    let duplicate: Vec<bool> = catalog
        .iter()
        .map(|r| !seen.insert(r.model_id.as_str()))
        .collect();
    let results: Vec<Result<Converted, String>> = catalog
        .par_iter()
        .zip(duplicate.par_iter())
        .map(|(row, &dup)| {
            if dup {
                return Err("duplicate model id".to_string());
            }
            convert_model(row, obj_dir, crs, &lcc, &meshes_dir)
        })
        .collect();

    let mut records = Vec::new();
    let mut skipped = Vec::new();
    let mut removed_triangles = 0;
    let mut bounds = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
    for (row, r) in catalog.iter().zip(results) {
        match r {
            Ok(c) => {
                bounds[0] = bounds[0].min(c.bounds_m[0]);
                bounds[1] = bounds[1].min(c.bounds_m[1]);
                bounds[2] = bounds[2].max(c.bounds_m[2]);
                bounds[3] = bounds[3].max(c.bounds_m[3]);
                removed_triangles += c.removed;
                records.push(c.record);
            }
            Err(reason) => {
                log::warn!("skipping model {}: {reason}", row.model_id);
                skipped.push(SkippedModel {
                    model_id: row.model_id.clone(),
                    reason,
                });
            }
        }
    }

    let square = match tile_name.parse::<TileId>() {
        Ok(id) => {
            let grid = TileGrid::new(crs.clone());
            TileSquare {
                center_m: grid.center_m(id),
                side_m: grid.side_m(),
            }
        }
        Err(_) => {
            if records.is_empty() {
                return Err(IngestError::Invalid(format!(
                    "custom scene `{tile_name}` has no convertible models to bound it"
                )));
            }
            let side = (bounds[2] - bounds[0]).max(bounds[3] - bounds[1]);
            TileSquare {
                center_m: (0.5 * (bounds[0] + bounds[2]), 0.5 * (bounds[1] + bounds[3])),
                side_m: side.max(1.0),
            }
        }
    };
    let tile = square.to_tileinfo(tile_name, &lcc)?;
    let models_dir = out.models_dir();
    let cat = out.catalog(tile_name);
    std::fs::write(&cat, write_catalog(&records)).map_err(|e| IngestError::io(&cat, e))?;
    let ti = out.tileinfo(tile_name);
    std::fs::write(&ti, write_tileinfo(&tile)).map_err(|e| IngestError::io(&ti, e))?;
    log::info!(
        "{tile_name}: {} models converted, {} skipped into {}",
        records.len(),
        skipped.len(),
        models_dir.display()
    );
    Ok(ConversionReport {
        triangles: records.iter().map(|r| r.triangle_count).sum(),
        tile,
        records,
        skipped,
        removed_triangles,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recenter_residual_is_small() {
        let xs: Vec<f64> = (0..7).map(|i| 731_100.0 * 0.3048 + 37.123_456_7 * i as f64).collect();
        let (c, v) = recenter(&xs);
        let mean = v.iter().map(|&x| x as f64).sum::<f64>() / v.len() as f64;
        assert!(mean.abs() < 1e-6, "{mean}");
        for (x, f) in xs.iter().zip(&v) {
            assert!((x - c - *f as f64).abs() < 1e-5);
        }
    }
}
