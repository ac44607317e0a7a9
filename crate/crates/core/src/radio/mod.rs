//! Antenna patterns, link budget, SNR / capacity and coverage maps.

mod coverage;
mod export;
mod link;
mod pattern;

pub use coverage::{coverage_map, coverage_map_in, threshold_map, CoverageCell, CoverageMap, GridSpec, MapMeta, TxSelection};
pub use export::{export_map, map_csv, map_pgm, parse_map_csv, threshold_csv, MapFormat, DEFAULT_PGM_RANGE_DB};
pub use link::{
    fspl_db, min_snr_for_rate, received_power, shannon_capacity, snr_db, RadioConfig, RateRequirement, Summation,
    THERMAL_NOISE_DBM_HZ,
};
pub use pattern::{array_gain_db, element_gain, tx_gain, ElementPattern, Sector};

use thiserror::Error;

use crate::raytrace::RtError;
use crate::scene::SceneError;

#[derive(Debug, Error)]
pub enum RadioError {
    #[error("radio configuration: {0}")]
    Config(String),
    #[error("map format: {0}")]
    Format(String),
    #[error(transparent)]
    Trace(#[from] RtError),
    #[error(transparent)]
    Scene(#[from] SceneError),
}
