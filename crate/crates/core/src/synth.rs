//! Synthetic Manhattan-grid cities in the source dataset format, with a
//! ground-truth sidecar, for end-to-end and oracle tests.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Map;

use crate::geodesy::{GeoCoord, Lcc, SourceCrs, TileGrid, TileId};
use crate::ingest::{
    convert_tile, write_antennas, write_csv_catalog, write_obj, AntennaRecord, AntennaSource,
    CatalogRow, ConversionReport, DatasetLayout, IngestError, RawObjMesh,
};

const POLE_TYPES: [&str; 4] = ["wood", "steel", "utility_pole", ""];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeightRange {
    pub min: f64,
    pub max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub seed: u64,
    /// Blocks per tile as (rows, cols); one building per block.
    pub blocks: [u32; 2],
    pub street_width_m: f64,
    /// Side of each square building footprint.
    pub footprint_m: f64,
    pub height_m: HeightRange,
    pub antennas_per_block: u32,
    /// Antennas placed just east of the last tile, outside every tile.
    pub outside_antennas: u32,
    /// Tile names on the standard grid; each gets its own city.
    pub tiles: Vec<String>,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            seed: 1,
            blocks: [5, 5],
            street_width_m: 20.0,
            footprint_m: 40.0,
            height_m: HeightRange { min: 10.0, max: 60.0 },
            antennas_per_block: 1,
            outside_antennas: 0,
            tiles: vec!["BOS_F_4".into()],
        }
    }
}

impl SynthSpec {
    pub fn pitch_m(&self) -> f64 {
        self.footprint_m + self.street_width_m
    }

    pub fn validate(&self) -> Result<Vec<TileId>, IngestError> {
        let bad = |m: &str| Err(IngestError::Invalid(format!("synth spec: {m}")));
        if self.blocks[0] == 0 || self.blocks[1] == 0 {
            return bad("blocks must be positive");
        }
        let pos = |v: f64| v.is_finite() && v > 0.0;
        if !pos(self.street_width_m) || !pos(self.footprint_m) {
            return bad("street width and footprint must be positive");
        }
        if !pos(self.height_m.min) || !(self.height_m.max >= self.height_m.min) || !self.height_m.max.is_finite() {
            return bad("height range must satisfy 0 < min <= max");
        }
        if self.tiles.is_empty() {
            return bad("at least one tile is required");
        }
        let side = TileGrid::new(SourceCrs::boston()).side_m();
        let extent = self.pitch_m() * self.blocks[0].max(self.blocks[1]) as f64;
        if extent > side {
            return bad(&format!("city extent {extent} m exceeds the {side:.1} m tile"));
        }
        let mut ids = Vec::new();
        for t in &self.tiles {
            let id: TileId = t
                .parse()
                .map_err(|_| IngestError::Invalid(format!("synth spec: `{t}` is not a grid tile name")))?;
            if ids.contains(&id) {
                return bad(&format!("tile `{t}` listed twice"));
            }
            ids.push(id);
        }
        Ok(ids)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruthModel {
    pub model_id: String,
    pub tile: String,
    pub centroid: GeoCoord,
    /// Footprint center relative to the tile center, meters.
    pub center_local_m: [f64; 2],
    pub footprint_m: f64,
    pub height_m: f64,
    pub triangles: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruthAntenna {
    pub antenna_id: String,
    pub location: GeoCoord,
    pub pole_type: String,
    /// Tile whose (closed) square contains the antenna.
    pub tile: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruthTile {
    pub name: String,
    pub center: GeoCoord,
    pub side_m: f64,
    pub models: usize,
    pub antennas: usize,
    pub triangles: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthTruth {
    pub spec: SynthSpec,
    pub tiles: Vec<TruthTile>,
    pub models: Vec<TruthModel>,
    pub antennas: Vec<TruthAntenna>,
}

impl SynthTruth {
    pub fn tile(&self, name: &str) -> Option<&TruthTile> {
        self.tiles.iter().find(|t| t.name == name)
    }
}

pub struct SynthOutput {
    pub truth: SynthTruth,
    pub reports: Vec<ConversionReport>,
}

/// Source directory holding the OBJ files and CSV catalog of one tile.
pub fn source_dir(root: &Path, tile: &str) -> PathBuf {
    root.join("sources").join(tile)
}

pub fn truth_path(root: &Path) -> PathBuf {
    root.join("truth.json")
}

/// Closed box without a bottom face, corners given in source feet.
fn box_obj(name: &str, min: [f64; 3], max: [f64; 3]) -> RawObjMesh {
    let [x0, y0, z0] = min;
    let [x1, y1, z1] = max;
    RawObjMesh {
        name: name.into(),
        vertices: vec![
            [x0, y0, z0],
            [x1, y0, z0],
            [x1, y1, z0],
            [x0, y1, z0],
            [x0, y0, z1],
            [x1, y0, z1],
            [x1, y1, z1],
            [x0, y1, z1],
        ],
        faces: vec![
            vec![4, 5, 6, 7],
            vec![0, 1, 5, 4],
            vec![1, 2, 6, 5],
            vec![2, 3, 7, 6],
            vec![3, 0, 4, 7],
        ],
    }
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), IngestError> {
    if let Some(p) = path.parent() {
        std::fs::create_dir_all(p).map_err(|e| IngestError::io(p, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| IngestError::io(path, e))
}

/// Writes OBJ sources, converts them into the dataset layout under `root`,
/// writes the antenna collection and `truth.json`. Deterministic per seed.
pub fn generate(spec: &SynthSpec, root: &Path) -> Result<SynthOutput, IngestError> {
    let ids = spec.validate()?;
    let crs = SourceCrs::boston();
    let grid = TileGrid::new(crs.clone());
    let lcc = Lcc::new(&crs.lcc)?;
    let unit = crs.source_unit();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let pitch = spec.pitch_m();
    let half_fp = 0.5 * spec.footprint_m;
    let [rows, cols] = spec.blocks;

    let mut truth = SynthTruth {
        spec: spec.clone(),
        tiles: Vec::new(),
        models: Vec::new(),
        antennas: Vec::new(),
    };
    let mut antennas = Vec::new();
    let mut reports = Vec::new();
    for (name, id) in spec.tiles.iter().zip(&ids) {
        let (cx, cy) = grid.center_m(*id);
        let src = source_dir(root, name);
        let mut catalog = Vec::new();
        let mut tile_models = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                let lx = (c as f64 - 0.5 * (cols as f64 - 1.0)) * pitch;
                let ly = (r as f64 - 0.5 * (rows as f64 - 1.0)) * pitch;
                let h = rng.gen_range(spec.height_m.min..=spec.height_m.max);
                let model_id = format!("{name}-b{r:02}{c:02}");
                // source coordinates: US feet relative to the custom origin
                let to_src = |e_m: f64, n_m: f64| {
                    (
                        unit.from_meters(e_m) - crs.custom_origin.easting,
                        unit.from_meters(n_m) - crs.custom_origin.northing,
                    )
                };
                let (x0, y0) = to_src(cx + lx - half_fp, cy + ly - half_fp);
                let (x1, y1) = to_src(cx + lx + half_fp, cy + ly + half_fp);
                let obj = box_obj(&model_id, [x0, y0, 0.0], [x1, y1, unit.from_meters(h)]);
                let file = format!("{model_id}.obj");
                write(&src.join(&file), write_obj(&obj))?;
                catalog.push(CatalogRow {
                    model_id: model_id.clone(),
                    model_type: "Building".into(),
                    lod: "1".into(),
                    obj: file,
                });
                tile_models.push(TruthModel {
                    model_id,
                    tile: name.clone(),
                    centroid: lcc.inverse_m(cx + lx, cy + ly)?,
                    center_local_m: [lx, ly],
                    footprint_m: spec.footprint_m,
                    height_m: h,
                    triangles: 10,
                });

                let k = spec.antennas_per_block;
                for j in 0..k {
                    // along the street east of the block
                    let ax = lx + 0.5 * pitch + rng.gen_range(-0.125..=0.125) * spec.street_width_m;
                    let ay = ly - half_fp + (j as f64 + 0.5) * spec.footprint_m / k as f64;
                    let pole = POLE_TYPES[rng.gen_range(0..POLE_TYPES.len())];
                    antennas.push(AntennaRecord {
                        antenna_id: format!("{name}-a{r:02}{c:02}{j}"),
                        location: lcc.inverse_m(cx + ax, cy + ay)?,
                        pole_type: pole.into(),
                        source: AntennaSource::Post2017,
                        attributes: Map::new(),
                    });
                }
            }
        }
        write(&src.join("catalog.csv"), write_csv_catalog(&catalog))?;
        let layout = DatasetLayout::new(root);
        let report = convert_tile(&src, &catalog, &crs, name, &layout)?;
        if !report.skipped.is_empty() {
            return Err(IngestError::Invalid(format!(
                "synthetic tile {name}: {} models failed to convert",
                report.skipped.len()
            )));
        }
        truth.tiles.push(TruthTile {
            name: name.clone(),
            center: report.tile.center,
            side_m: report.tile.side_m,
            models: tile_models.len(),
            antennas: 0,
            triangles: report.triangles,
        });
        truth.models.extend(tile_models);
        reports.push(report);
    }

    let last = *ids.last().expect("validated non-empty");
    let (ex, ey) = grid.center_m(last);
    for i in 0..spec.outside_antennas {
        let x = ex + 0.5 * grid.side_m() + 25.0 + 10.0 * i as f64;
        antennas.push(AntennaRecord {
            antenna_id: format!("outside-{i}"),
            location: lcc.inverse_m(x, ey)?,
            pole_type: "wood".into(),
            source: AntennaSource::Pre2017,
            attributes: Map::new(),
        });
    }

    for a in &antennas {
        let (e, n) = lcc.forward_m(&a.location)?;
        let tile = spec.tiles.iter().zip(&ids).find(|(_, id)| {
            let [sw, _, ne, _] = grid.corners_m(**id);
            let eps = 1e-6;
            e >= sw.0 - eps && e <= ne.0 + eps && n >= sw.1 - eps && n <= ne.1 + eps
        });
        let tile = tile.map(|(n, _)| n.clone());
        if let Some(t) = tile.as_ref().and_then(|t| truth.tiles.iter_mut().find(|x| &x.name == t)) {
            t.antennas += 1;
        }
        truth.antennas.push(TruthAntenna {
            antenna_id: a.antenna_id.clone(),
            location: a.location,
            pole_type: a.pole_type.clone(),
            tile,
        });
    }
    let layout = DatasetLayout::new(root);
    write(&layout.antennas(), write_antennas(&antennas))?;
    let mut json = serde_json::to_vec_pretty(&truth)?;
    json.push(b'\n');
    write(&truth_path(root), json)?;
    Ok(SynthOutput { truth, reports })
}

pub fn read_truth(root: &Path) -> Result<SynthTruth, IngestError> {
    let p = truth_path(root);
    let bytes = std::fs::read(&p).map_err(|e| IngestError::io(&p, e))?;
    Ok(serde_json::from_slice(&bytes)?)
}
