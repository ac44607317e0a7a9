use std::collections::{HashMap, HashSet};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use super::{assign_material, geometry, PlacedMesh, Scene, SceneConfig, SceneError};
use crate::geodesy::{GeoCoord, LocalFrame};
use crate::ingest::{parse_antennas, parse_catalog, parse_tileinfo, read_ply, AntennaRecord, DatasetLayout, ModelRecord, TileInfo};
use crate::mesh::TriangleMesh;

fn read(path: &Path) -> Result<Vec<u8>, SceneError> {
    std::fs::read(path).map_err(|e| SceneError::io(path, e))
}

/// Loads meshes once per file.
#[derive(Default)]
struct MeshCache(HashMap<PathBuf, Arc<TriangleMesh>>);

impl MeshCache {
    fn get(&mut self, path: &Path) -> Result<Arc<TriangleMesh>, SceneError> {
        if let Some(m) = self.0.get(path) {
            return Ok(m.clone());
        }
        let m = Arc::new(read_ply(&read(path)?)?);
        self.0.insert(path.to_path_buf(), m.clone());
        Ok(m)
    }
}

fn place(record: &ModelRecord, frame: &LocalFrame, layout: &DatasetLayout, cache: &mut MeshCache) -> Result<PlacedMesh, SceneError> {
    let path = layout.mesh_file(&record.mesh_path);
    let mesh = cache.get(&path)?;
    Ok(PlacedMesh {
        id: record.model_id.clone(),
        model_type: record.model_type.clone(),
        mesh_path: Some(path),
        mesh,
        translation: frame.to_local(&record.centroid)?,
        material: assign_material(&record.model_type).to_string(),
    })
}

fn load_antennas(layout: &DatasetLayout) -> Result<Vec<AntennaRecord>, SceneError> {
    let path = layout.antennas();
    if !path.exists() {
        log::info!("no antenna collection at {}", path.display());
        return Ok(Vec::new());
    }
    Ok(parse_antennas(&read(&path)?)?)
}

fn load_tile(layout: &DatasetLayout, name: &str) -> Result<TileInfo, SceneError> {
    let path = layout.tileinfo(name);
    if !path.exists() {
        return Err(SceneError::NotFound {
            name: name.to_string(),
            available: layout.scenes(),
        });
    }
    Ok(parse_tileinfo(&read(&path)?)?)
}

fn local_ring(tile: &TileInfo, frame: &LocalFrame) -> Result<Vec<[f64; 2]>, SceneError> {
    tile.boundary
        .iter()
        .map(|g| frame.to_local(g).map(|l| [l[0], l[1]]).map_err(Into::into))
        .collect()
}

/// Builds the scene of one converted tile: every catalog model placed at
/// its centroid, antennas inside the (closed) tile boundary, and a ground
/// plane unless disabled in `cfg`.
pub fn load_tile_scene(root: &Path, tile_name: &str, cfg: &SceneConfig) -> Result<Scene, SceneError> {
    let layout = DatasetLayout::new(root);
    let tile = load_tile(&layout, tile_name)?;
    let frame = LocalFrame::new(tile.center, &cfg.lcc)?;
    let boundary = local_ring(&tile, &frame)?;
    let records = parse_catalog(&read(&layout.catalog(tile_name))?)?;

    let mut scene = Scene::new(tile_name, frame, boundary);
    let mut cache = MeshCache::default();
    for r in &records {
        let m = place(r, &scene.frame, &layout, &mut cache)?;
        if !scene.contains([m.translation[0], m.translation[1]]) {
            log::warn!("{tile_name}: model {} is centered outside the tile boundary", r.model_id);
        }
        scene.meshes.push(m);
    }
    for a in load_antennas(&layout)? {
        let l = scene.frame.to_local(&a.location)?;
        if scene.contains([l[0], l[1]]) {
            scene.antennas.push(a);
        }
    }
    if cfg.ground {
        scene.add_ground_plane();
    }
    log::info!(
        "scene {tile_name}: {} models, {} antennas",
        scene.meshes.len(),
        scene.antennas.len()
    );
    Ok(scene)
}

/// Builds a scene from every model whose catalog centroid lies within
/// `radius_m` of `center`, scanning all tiles whose boundary meets the disc.
/// The frame is centered on `center` and the boundary is the square
/// circumscribing the disc.
pub fn extract_scene(root: &Path, center: GeoCoord, radius_m: f64, cfg: &SceneConfig) -> Result<Scene, SceneError> {
    if !(radius_m.is_finite() && radius_m > 0.0) {
        return Err(SceneError::InvalidRadius(radius_m));
    }
    let layout = DatasetLayout::new(root);
    let frame = LocalFrame::new(center, &cfg.lcc)?;
    let mut tiles = Vec::new();
    for name in layout.scenes() {
        let tile = load_tile(&layout, &name)?;
        if geometry::disc_intersects(&local_ring(&tile, &frame)?, [0.0, 0.0], radius_m) {
            tiles.push(name);
        }
    }
    if tiles.is_empty() {
        return Err(SceneError::EmptyScene(format!(
            "no tile intersects the {radius_m} m disc around ({}, {})",
            center.lon, center.lat
        )));
    }

    let r = radius_m;
    let name = format!("extract_{:.6}_{:.6}_{}m", center.lon, center.lat, r);
    let boundary = vec![[-r, -r], [r, -r], [r, r], [-r, r]];
    let mut scene = Scene::new(name, frame, boundary);
    let within = |g: &GeoCoord, f: &LocalFrame| -> Result<bool, SceneError> {
        let l = f.to_local(g)?;
        Ok(l[0].hypot(l[1]) <= r)
    };
    let mut cache = MeshCache::default();
    let mut seen = HashSet::new();
    for t in &tiles {
        for rec in parse_catalog(&read(&layout.catalog(t))?)? {
            if within(&rec.centroid, &scene.frame)? && seen.insert(rec.model_id.clone()) {
                let m = place(&rec, &scene.frame, &layout, &mut cache)?;
                scene.meshes.push(m);
            }
        }
    }
    if scene.meshes.is_empty() {
        return Err(SceneError::EmptyScene(format!(
            "no model centroid within {radius_m} m of ({}, {})",
            center.lon, center.lat
        )));
    }
    let mut seen = HashSet::new();
    for a in load_antennas(&layout)? {
        if within(&a.location, &scene.frame)? && seen.insert(a.antenna_id.clone()) {
            scene.antennas.push(a);
        }
    }
    if cfg.ground {
        scene.add_ground_plane();
    }
    log::info!(
        "extracted {} models from {} tile(s), {} antennas",
        scene.meshes.len(),
        tiles.len(),
        scene.antennas.len()
    );
    Ok(scene)
}
