//! Ray-tracing scenes: placed meshes with materials, ground, antennas and
//! radio devices in a local metric frame.

mod descriptor;
pub mod geometry;
mod heights;
mod load;
mod materials;

pub use descriptor::{load_scene_descriptor, parse_scene_descriptor, scene_descriptor_xml, write_scene_descriptor};
pub use heights::{antenna_height_from_pole_type, PoleHeightTable};
pub use load::{extract_scene, load_tile_scene};
pub use materials::{assign_material, Material, MaterialTable, BRICK, CONCRETE, EPSILON_0, MEDIUM_DRY_GROUND};

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geodesy::{GeoCoord, GeodesyError, LccSpec, LocalFrame};
use crate::ingest::{AntennaRecord, IngestError, ModelType};
use crate::math::vec3;
use crate::mesh::{build_bvh, shapes, Bvh, MeshInstance, TriangleMesh};
use crate::radio::Sector;

pub const DEFAULT_TX_HEIGHT_M: f64 = 10.0;
pub const DEFAULT_RX_HEIGHT_M: f64 = 1.5;
pub const DEFAULT_SECTORS: usize = 3;
/// Relative margin of the ground plane beyond the scene boundary.
pub const GROUND_MARGIN: f64 = 0.1;
pub const GROUND_ID: &str = "ground";

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("scene `{name}` not found; available: {}", if available.is_empty() { "none".to_string() } else { available.join(", ") })]
    NotFound { name: String, available: Vec<String> },
    #[error("empty scene: {0}")]
    EmptyScene(String),
    #[error("radius must be positive and finite, got {0}")]
    InvalidRadius(f64),
    #[error("device placement: {0}")]
    Placement(String),
    #[error("scene descriptor: {0}")]
    Descriptor(String),
    #[error("descriptor entry `{entry}` references missing mesh {}", path.display())]
    MissingMesh { entry: String, path: PathBuf },
    #[error("configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Geodesy(#[from] GeodesyError),
}

impl SceneError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        SceneError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Settings shared by scene construction.
#[derive(Clone, Debug, PartialEq)]
pub struct SceneConfig {
    pub lcc: LccSpec,
    pub pole_heights: PoleHeightTable,
    pub ground: bool,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            lcc: LccSpec::massachusetts_mainland(),
            pole_heights: PoleHeightTable::default(),
            ground: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlacedMesh {
    pub id: String,
    pub model_type: ModelType,
    /// Resolved mesh file; `None` for generated geometry such as the ground.
    pub mesh_path: Option<PathBuf>,
    pub mesh: Arc<TriangleMesh>,
    /// Local position of the mesh origin, meters.
    pub translation: [f64; 3],
    pub material: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeviceRole {
    Tx,
    Rx,
}

impl DeviceRole {
    pub fn as_str(self) -> &'static str {
        match self {
            DeviceRole::Tx => "tx",
            DeviceRole::Rx => "rx",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum DeviceSource {
    Custom,
    CatalogAntenna(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadioDevice {
    pub id: u32,
    pub name: String,
    pub position: [f64; 3],
    pub role: DeviceRole,
    /// Empty for receivers.
    pub sectors: Vec<Sector>,
    pub source: DeviceSource,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DeviceLocation {
    Geo(GeoCoord),
    /// Local (x, y) in meters.
    Local([f64; 2]),
}

/// Everything needed to add a device; unset fields take role defaults.
#[derive(Clone, Debug, PartialEq)]
pub struct DeviceRequest {
    pub location: DeviceLocation,
    pub role: DeviceRole,
    pub height_m: Option<f64>,
    pub sectors: Option<Vec<Sector>>,
    pub name: Option<String>,
    pub source: DeviceSource,
}

impl DeviceRequest {
    pub fn new(location: DeviceLocation, role: DeviceRole) -> Self {
        Self {
            location,
            role,
            height_m: None,
            sectors: None,
            name: None,
            source: DeviceSource::Custom,
        }
    }

    pub fn tx(location: DeviceLocation) -> Self {
        Self::new(location, DeviceRole::Tx)
    }

    pub fn rx(location: DeviceLocation) -> Self {
        Self::new(location, DeviceRole::Rx)
    }

    pub fn height(mut self, h: f64) -> Self {
        self.height_m = Some(h);
        self
    }
}

#[derive(Clone, Debug)]
pub struct Scene {
    pub name: String,
    pub frame: LocalFrame,
    /// Boundary polygon in local (x, y) meters, open ring.
    pub boundary: Vec<[f64; 2]>,
    pub meshes: Vec<PlacedMesh>,
    pub ground: Option<PlacedMesh>,
    pub antennas: Vec<AntennaRecord>,
    pub devices: Vec<RadioDevice>,
}

impl Scene {
    pub fn new(name: impl Into<String>, frame: LocalFrame, boundary: Vec<[f64; 2]>) -> Self {
        Self {
            name: name.into(),
            frame,
            boundary,
            meshes: Vec::new(),
            ground: None,
            antennas: Vec::new(),
            devices: Vec::new(),
        }
    }

    pub fn lcc(&self) -> &LccSpec {
        self.frame.projection().spec()
    }

    pub fn contains(&self, xy: [f64; 2]) -> bool {
        geometry::contains_point(&self.boundary, xy)
    }

    /// Placed meshes followed by the ground, if any.
    pub fn all_meshes(&self) -> impl Iterator<Item = &PlacedMesh> {
        self.meshes.iter().chain(self.ground.iter())
    }

    pub fn triangle_count(&self) -> usize {
        self.all_meshes().map(|m| m.mesh.triangle_count()).sum()
    }

    /// Sorted distinct material names; BVH material indices refer to this list.
    pub fn material_names(&self) -> Vec<String> {
        self.all_meshes()
            .map(|m| m.material.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    /// Acceleration structure over all meshes including the ground.
    /// Instance `i` is `all_meshes().nth(i)`.
    pub fn build_bvh(&self) -> Bvh {
        let names = self.material_names();
        let instances: Vec<MeshInstance> = self
            .all_meshes()
            .map(|m| MeshInstance {
                mesh: &m.mesh,
                translation: vec3(m.translation),
                material: names.binary_search(&m.material).expect("material listed") as u32,
            })
            .collect();
        build_bvh(&instances)
    }

    /// Adds (or replaces) a two-triangle ground rectangle at z = 0 covering
    /// the boundary's bounding box plus a 10% margin.
    pub fn add_ground_plane(&mut self) {
        let (lo, hi) = geometry::bounding_box(&self.boundary);
        let center = [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])];
        let half = [
            0.5 * (hi[0] - lo[0]) * (1.0 + GROUND_MARGIN),
            0.5 * (hi[1] - lo[1]) * (1.0 + GROUND_MARGIN),
        ];
        self.ground = Some(ground_mesh(center, half));
    }

    pub fn remove_ground_plane(&mut self) {
        self.ground = None;
    }

    pub fn next_device_id(&self) -> u32 {
        self.devices.iter().map(|d| d.id + 1).max().unwrap_or(0)
    }

    pub fn device(&self, id: u32) -> Option<&RadioDevice> {
        self.devices.iter().find(|d| d.id == id)
    }

    pub fn transmitters(&self) -> impl Iterator<Item = &RadioDevice> {
        self.devices.iter().filter(|d| d.role == DeviceRole::Tx)
    }

    /// Validates and appends a device, returning its id.
    pub fn place_device(&mut self, req: DeviceRequest) -> Result<u32, SceneError> {
        let xy = match req.location {
            DeviceLocation::Geo(g) => {
                let l = self.frame.to_local(&g)?;
                [l[0], l[1]]
            }
            DeviceLocation::Local(xy) => xy,
        };
        if !xy.iter().all(|v| v.is_finite()) {
            return Err(SceneError::Placement("non-finite location".into()));
        }
        if !self.contains(xy) {
            return Err(SceneError::Placement(format!(
                "({:.3}, {:.3}) lies outside the boundary of scene `{}`",
                xy[0], xy[1], self.name
            )));
        }
        let height = req.height_m.unwrap_or(match req.role {
            DeviceRole::Tx => DEFAULT_TX_HEIGHT_M,
            DeviceRole::Rx => DEFAULT_RX_HEIGHT_M,
        });
        if !(height.is_finite() && height >= 0.0) {
            return Err(SceneError::Placement(format!("height {height} must be finite and >= 0")));
        }
        let sectors = match req.role {
            DeviceRole::Tx => req.sectors.unwrap_or_else(|| Sector::evenly_spaced(DEFAULT_SECTORS)),
            DeviceRole::Rx => Vec::new(),
        };
        if req.role == DeviceRole::Tx && sectors.is_empty() {
            return Err(SceneError::Placement("a transmitter needs at least one sector".into()));
        }
        for s in &sectors {
            s.validate().map_err(|e| SceneError::Placement(e.to_string()))?;
        }
        let id = self.next_device_id();
        self.devices.push(RadioDevice {
            id,
            name: req.name.unwrap_or_else(|| format!("{}{id}", req.role.as_str())),
            position: [xy[0], xy[1], height],
            role: req.role,
            sectors,
            source: req.source,
        });
        Ok(id)
    }

    /// Places one transmitter per scene antenna, in antenna order, with the
    /// height looked up from its pole type. Returns the number placed.
    pub fn deploy_antennas(&mut self, heights: &PoleHeightTable) -> Result<usize, SceneError> {
        let antennas = self.antennas.clone();
        for a in &antennas {
            let mut req = DeviceRequest::tx(DeviceLocation::Geo(a.location));
            req.height_m = Some(heights.height_for(&a.pole_type));
            req.name = Some(a.antenna_id.clone());
            req.source = DeviceSource::CatalogAntenna(a.antenna_id.clone());
            self.place_device(req)?;
        }
        Ok(antennas.len())
    }
}

pub(crate) fn ground_mesh(center: [f64; 2], half: [f64; 2]) -> PlacedMesh {
    PlacedMesh {
        id: GROUND_ID.into(),
        model_type: ModelType::Ground,
        mesh_path: None,
        mesh: Arc::new(shapes::horizontal_rectangle(center, half, 0.0).with_material(MEDIUM_DRY_GROUND)),
        translation: [0.0; 3],
        material: MEDIUM_DRY_GROUND.into(),
    }
}

/// Free-function form of [`Scene::place_device`] with role defaults.
pub fn place_device(
    scene: &mut Scene,
    location: DeviceLocation,
    role: DeviceRole,
    height_m: Option<f64>,
) -> Result<u32, SceneError> {
    let mut req = DeviceRequest::new(location, role);
    req.height_m = height_m;
    scene.place_device(req)
}
