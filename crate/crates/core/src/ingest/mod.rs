//! Source-format readers and writers and the tile conversion pipeline.

mod antennas;
mod catalog_csv;
mod convert;
mod geojson;
mod layout;
mod obj;
mod ply;
mod triangulate;

pub use antennas::{merge_antenna_datasets, AntennaSource, ColumnMapping};
pub use catalog_csv::{parse_csv_catalog, parse_geojson_catalog, parse_source_catalog, write_csv_catalog, CatalogRow};
pub use convert::{convert_tile, ConversionReport, SkippedModel, TileSquare};
pub use geojson::{
    parse_antennas, parse_catalog, parse_tileinfo, write_antennas, write_catalog, write_tileinfo,
};
pub use layout::DatasetLayout;
pub use obj::{parse_obj, write_obj, RawObjMesh};
pub use ply::{read_ply, write_ply};
pub use triangulate::triangulate_polygon;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde_json::{Map, Value};
use thiserror::Error;

use crate::geodesy::{GeoCoord, GeodesyError};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("line {line}: {msg}")]
    Obj { line: usize, msg: String },
    #[error("PLY: {0}")]
    Ply(String),
    #[error("feature {feature}: {msg}")]
    Schema { feature: String, msg: String },
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Geodesy(#[from] GeodesyError),
    #[error("{0}")]
    Invalid(String),
}

impl IngestError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    fn schema(feature: impl fmt::Display, msg: impl Into<String>) -> Self {
        Self::Schema {
            feature: feature.to_string(),
            msg: msg.into(),
        }
    }
}

/// Model classification used for material assignment.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ModelType {
    Wall,
    Building,
    Ground,
    Other(String),
}

impl FromStr for ModelType {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "Wall" => Self::Wall,
            "Building" => Self::Building,
            "Ground" => Self::Ground,
            other => Self::Other(other.to_string()),
        })
    }
}

impl fmt::Display for ModelType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Wall => "Wall",
            Self::Building => "Building",
            Self::Ground => "Ground",
            Self::Other(s) => s,
        })
    }
}

/// citySchema level of detail.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LodCode {
    Lod0,
    Lod1,
    Lod1_5,
    Lod2,
    Lod3,
    Lod3_25,
    Lod3_5,
    Lod4,
    Lod4_5,
}

impl LodCode {
    pub const ALL: [LodCode; 9] = [
        Self::Lod0,
        Self::Lod1,
        Self::Lod1_5,
        Self::Lod2,
        Self::Lod3,
        Self::Lod3_25,
        Self::Lod3_5,
        Self::Lod4,
        Self::Lod4_5,
    ];

    pub fn code(self) -> f64 {
        match self {
            Self::Lod0 => 0.0,
            Self::Lod1 => 1.0,
            Self::Lod1_5 => 1.5,
            Self::Lod2 => 2.0,
            Self::Lod3 => 3.0,
            Self::Lod3_25 => 3.25,
            Self::Lod3_5 => 3.5,
            Self::Lod4 => 4.0,
            Self::Lod4_5 => 4.5,
        }
    }

    pub fn from_code(code: f64) -> Option<Self> {
        Self::ALL.into_iter().find(|l| l.code() == code)
    }

    pub fn description(self) -> &'static str {
        match self {
            Self::Lod0 => "Polygon footprint",
            Self::Lod1 => "Extruded polygon footprint",
            Self::Lod1_5 => "Massing model of extruded roof prints for parts of different height",
            Self::Lod2 => "Roof detail, extruded to the ground along the drip line",
            Self::Lod3 => "Undercuts where appropriate",
            Self::Lod3_25 => "Architectural details by materials or textures",
            Self::Lod3_5 => "Windows and entryways as 3D indentations",
            Self::Lod4 => "Divided horizontally into stories",
            Self::Lod4_5 => "Interior spaces divided into rooms or zones",
        }
    }
}

impl FromStr for LodCode {
    type Err = String;

    /// Accepts `2`, `1.5`, `LOD 1.5` or `LOD1.5`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let t = t
            .strip_prefix("LOD")
            .or_else(|| t.strip_prefix("lod"))
            .unwrap_or(t)
            .trim();
        t.parse::<f64>()
            .ok()
            .and_then(Self::from_code)
            .ok_or_else(|| format!("unknown LOD `{s}`"))
    }
}

impl fmt::Display for LodCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code())
    }
}

/// One model in a converted tile catalog.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelRecord {
    pub model_id: String,
    pub centroid: GeoCoord,
    pub model_type: ModelType,
    pub lod: LodCode,
    /// Mesh file path relative to the dataset's `boston3d` directory.
    pub mesh_path: String,
    pub triangle_count: usize,
    pub attributes: Map<String, Value>,
}

/// Georeference of a tile or custom scene.
#[derive(Clone, Debug, PartialEq)]
pub struct TileInfo {
    pub name: String,
    /// Open ring (first vertex not repeated), counter-clockwise.
    pub boundary: Vec<GeoCoord>,
    pub center: GeoCoord,
    pub side_m: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AntennaRecord {
    pub antenna_id: String,
    pub location: GeoCoord,
    pub pole_type: String,
    pub source: AntennaSource,
    pub attributes: Map<String, Value>,
}
