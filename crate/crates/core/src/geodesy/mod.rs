//! Coordinate machinery: WGS84 geographic positions, the state-plane source
//! CRS expressed in survey feet, and per-scene local metric frames.
//!
//! NAD83 and WGS84 are identified with each other; altitudes pass through
//! unchanged.

mod frame;
mod lcc;
mod tiles;
mod units;

pub use frame::{geo_to_local, local_to_geo, LocalFrame};
pub use lcc::{lcc_forward, lcc_inverse, Lcc, LccSpec};
pub use tiles::{TileGrid, TileId};
pub use units::{length_to_meters, Length, LengthUnit};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeodesyError {
    #[error("unknown length unit `{0}`")]
    UnknownUnit(String),
    #[error("non-finite {0}")]
    NonFinite(&'static str),
    #[error("coordinate out of range: {0}")]
    OutOfRange(String),
    #[error("projection domain error: {0}")]
    Domain(String),
    #[error("invalid projection constants: {0}")]
    InvalidSpec(String),
    #[error("unit mismatch: expected {expected}, found {found}")]
    UnitMismatch {
        expected: LengthUnit,
        found: LengthUnit,
    },
    #[error("invalid tile name `{0}`")]
    BadTileName(String),
}

/// Geographic position: degrees east/north on WGS84, altitude in meters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeoCoord {
    pub lon: f64,
    pub lat: f64,
    #[serde(default)]
    pub alt: f64,
}

impl GeoCoord {
    pub fn new(lon: f64, lat: f64) -> Result<Self, GeodesyError> {
        Self::with_alt(lon, lat, 0.0)
    }

    pub fn with_alt(lon: f64, lat: f64, alt: f64) -> Result<Self, GeodesyError> {
        let g = Self { lon, lat, alt };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), GeodesyError> {
        if !self.lon.is_finite() || !self.lat.is_finite() || !self.alt.is_finite() {
            return Err(GeodesyError::NonFinite("geographic coordinate"));
        }
        if !(-180.0..=180.0).contains(&self.lon) {
            return Err(GeodesyError::OutOfRange(format!("longitude {}", self.lon)));
        }
        if !(-90.0..=90.0).contains(&self.lat) {
            return Err(GeodesyError::OutOfRange(format!("latitude {}", self.lat)));
        }
        Ok(())
    }
}

/// Projected position; the unit tag is part of the value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectedCoord {
    pub easting: f64,
    pub northing: f64,
    pub unit: LengthUnit,
}

impl ProjectedCoord {
    pub fn new(easting: f64, northing: f64, unit: LengthUnit) -> Result<Self, GeodesyError> {
        if !easting.is_finite() || !northing.is_finite() {
            return Err(GeodesyError::NonFinite("projected coordinate"));
        }
        Ok(Self {
            easting,
            northing,
            unit,
        })
    }

    pub fn us_feet(easting: f64, northing: f64) -> Self {
        Self {
            easting,
            northing,
            unit: LengthUnit::UsSurveyFoot,
        }
    }

    pub fn meters(easting: f64, northing: f64) -> Self {
        Self {
            easting,
            northing,
            unit: LengthUnit::Meter,
        }
    }

    pub fn to_unit(self, unit: LengthUnit) -> Self {
        if unit == self.unit {
            return self;
        }
        Self {
            easting: unit.from_meters(self.unit.to_meters(self.easting)),
            northing: unit.from_meters(self.unit.to_meters(self.northing)),
            unit,
        }
    }

    /// (easting, northing) in meters.
    pub fn to_meters(self) -> (f64, f64) {
        (
            self.unit.to_meters(self.easting),
            self.unit.to_meters(self.northing),
        )
    }
}

/// The CRS the source meshes are authored in: state-plane coordinates
/// relative to a custom origin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceCrs {
    pub lcc: LccSpec,
    pub custom_origin: ProjectedCoord,
}

impl SourceCrs {
    pub fn new(lcc: LccSpec, custom_origin: ProjectedCoord) -> Result<Self, GeodesyError> {
        lcc.validate()?;
        if custom_origin.unit != lcc.unit {
            return Err(GeodesyError::UnitMismatch {
                expected: lcc.unit,
                found: custom_origin.unit,
            });
        }
        Ok(Self { lcc, custom_origin })
    }

    /// Massachusetts Mainland state plane with the origin at
    /// (731100, 2902900) US survey feet.
    pub fn boston() -> Self {
        Self {
            lcc: LccSpec::massachusetts_mainland(),
            custom_origin: ProjectedCoord::us_feet(731_100.0, 2_902_900.0),
        }
    }

    /// Source coordinates already metric and already absolute; useful for
    /// pipelines whose input needs no translation.
    pub fn identity_meters(lcc: LccSpec) -> Self {
        Self {
            lcc,
            custom_origin: ProjectedCoord::meters(0.0, 0.0),
        }
    }

    pub fn validate(&self) -> Result<(), GeodesyError> {
        self.lcc.validate()?;
        if self.custom_origin.unit != self.lcc.unit && !self.is_identity() {
            return Err(GeodesyError::UnitMismatch {
                expected: self.lcc.unit,
                found: self.custom_origin.unit,
            });
        }
        Ok(())
    }

    fn is_identity(&self) -> bool {
        self.custom_origin.easting == 0.0 && self.custom_origin.northing == 0.0
    }

    /// Unit of the source mesh coordinates.
    pub fn source_unit(&self) -> LengthUnit {
        self.custom_origin.unit
    }

    /// Absolute state-plane position in meters of a point given in source
    /// coordinates (custom-origin relative, source unit).
    pub fn source_to_projected_m(&self, x: f64, y: f64) -> (f64, f64) {
        let unit = self.source_unit();
        (
            unit.to_meters(self.custom_origin.easting + x),
            unit.to_meters(self.custom_origin.northing + y),
        )
    }
}
