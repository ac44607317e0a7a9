//! City-scale digital twin toolchain: converts georeferenced building tiles
//! into metric ray-tracing scenes, places transmitters from geolocated
//! antenna records and computes SNR / capacity coverage maps with a
//! deterministic RF ray tracer.

pub mod config;
pub mod geodesy;
pub mod ingest;
pub mod math;
pub mod mesh;
pub mod radio;
pub mod raytrace;
pub mod scene;
pub mod synth;

pub use geodesy::{GeoCoord, GeodesyError, LengthUnit, LocalFrame, ProjectedCoord, SourceCrs};
pub use mesh::{Bvh, RayHit, TriangleMesh};
