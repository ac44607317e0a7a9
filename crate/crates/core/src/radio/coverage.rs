use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::link::{received_power, shannon_capacity, snr_db, RadioConfig, RateRequirement};
use super::{tx_gain, RadioError};
use crate::math::{vec3, Vec3};
use crate::raytrace::{discover_on_grid, paths_for_candidates, PropagationPath, ReceiverGrid, RtConfig, TraceScene};
use crate::scene::{geometry, MaterialTable, RadioDevice, Scene};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub cell_m: f64,
    pub rx_height_m: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            cell_m: 5.0,
            rx_height_m: 1.5,
        }
    }
}

impl GridSpec {
    /// The smallest grid of whole cells, anchored at the lower-left corner
    /// of the boundary's bounding box, that covers the boundary.
    pub fn covering(&self, boundary: &[[f64; 2]]) -> Result<ReceiverGrid, RadioError> {
        if !(self.cell_m.is_finite() && self.cell_m > 0.0) {
            return Err(RadioError::Config(format!("grid cell must be positive, got {}", self.cell_m)));
        }
        if !self.rx_height_m.is_finite() {
            return Err(RadioError::Config("receiver height must be finite".into()));
        }
        if boundary.len() < 3 {
            return Err(RadioError::Config("scene boundary has fewer than 3 points".into()));
        }
        let (lo, hi) = geometry::bounding_box(boundary);
        let count = |span: f64| ((span / self.cell_m) - 1e-9).ceil().max(1.0) as usize;
        Ok(ReceiverGrid {
            x0: lo[0],
            y0: lo[1],
            cell: self.cell_m,
            nx: count(hi[0] - lo[0]),
            ny: count(hi[1] - lo[1]),
            z: self.rx_height_m,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoverageCell {
    pub best_tx: Option<u32>,
    /// Negative infinity for outage and indoor cells.
    pub snr_db: f64,
    pub capacity_bps: f64,
    pub indoor: bool,
}

impl CoverageCell {
    pub const OUTAGE: Self = Self {
        best_tx: None,
        snr_db: f64::NEG_INFINITY,
        capacity_bps: 0.0,
        indoor: false,
    };

    pub fn is_outage(&self) -> bool {
        !self.indoor && self.best_tx.is_none()
    }

    pub fn flags(&self) -> &'static str {
        if self.indoor {
            "indoor"
        } else if self.best_tx.is_none() {
            "outage"
        } else {
            ""
        }
    }
}

/// Run metadata stored with every map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapMeta {
    pub scene: String,
    pub transmitters: Vec<u32>,
    pub radio: RadioConfig,
    pub rt: RtConfig,
    pub grid: ReceiverGrid,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoverageMap {
    pub meta: MapMeta,
    /// Row-major, rows along y.
    pub cells: Vec<CoverageCell>,
}

impl CoverageMap {
    pub fn grid(&self) -> &ReceiverGrid {
        &self.meta.grid
    }

    /// Cells with service: neither indoor nor outage.
    pub fn served(&self) -> impl Iterator<Item = (usize, &CoverageCell)> {
        self.cells.iter().enumerate().filter(|(_, c)| c.best_tx.is_some())
    }
}

/// Which transmitters take part in a coverage run.
#[derive(Clone, Debug, Default, PartialEq)]
pub enum TxSelection {
    #[default]
    All,
    Ids(Vec<u32>),
}

fn select<'a>(scene: &'a Scene, sel: &TxSelection) -> Result<Vec<&'a RadioDevice>, RadioError> {
    let mut txs: Vec<&RadioDevice> = match sel {
        TxSelection::All => scene.transmitters().collect(),
        TxSelection::Ids(ids) => ids
            .iter()
            .map(|id| {
                scene
                    .transmitters()
                    .find(|d| d.id == *id)
                    .ok_or_else(|| RadioError::Config(format!("no transmitter with id {id}")))
            })
            .collect::<Result<_, _>>()?,
    };
    txs.sort_by_key(|d| d.id);
    txs.dedup_by_key(|d| d.id);
    if txs.is_empty() {
        return Err(RadioError::Config("scene has no transmitter".into()));
    }
    for d in &txs {
        if d.sectors.is_empty() {
            return Err(RadioError::Config(format!("transmitter {} has no sectors", d.id)));
        }
    }
    Ok(txs)
}

fn departure(p: &PropagationPath) -> Vec3 {
    (vec3(p.vertices[1]) - vec3(p.vertices[0])).normalize()
}

/// Best-server SNR and capacity over the scene at receiver height.
pub fn coverage_map(
    scene: &Scene,
    materials: &MaterialTable,
    radio: &RadioConfig,
    rt: &RtConfig,
    grid: &GridSpec,
    txs: &TxSelection,
) -> Result<CoverageMap, RadioError> {
    radio.validate()?;
    let ts = TraceScene::new(scene, materials, radio.f_c)?;
    coverage_map_in(scene, &ts, radio, rt, grid, txs)
}

/// As [`coverage_map`], reusing a prepared trace scene built from `scene`.
pub fn coverage_map_in(
    scene: &Scene,
    ts: &TraceScene,
    radio: &RadioConfig,
    rt: &RtConfig,
    grid: &GridSpec,
    txs: &TxSelection,
) -> Result<CoverageMap, RadioError> {
    radio.validate()?;
    rt.validate()?;
    if (ts.frequency - radio.f_c).abs() > 1e-9 * radio.f_c {
        return Err(RadioError::Config("trace scene was prepared at a different frequency".into()));
    }
    let txs = select(scene, txs)?;
    let rg = grid.covering(&scene.boundary)?;
    let candidates: Vec<_> = txs
        .iter()
        .map(|d| discover_on_grid(ts, &vec3(d.position), &rg, rt))
        .collect();
    let cells = (0..rg.len())
        .into_par_iter()
        .map(|i| {
            let rx = rg.center(i);
            if ts.is_covered(&rx) {
                return CoverageCell {
                    indoor: true,
                    ..CoverageCell::OUTAGE
                };
            }
            let mut best = CoverageCell::OUTAGE;
            for (d, cands) in txs.iter().zip(&candidates) {
                let paths = paths_for_candidates(ts, &vec3(d.position), &rx, &cands[i], rt);
                if paths.is_empty() {
                    continue;
                }
                for s in &d.sectors {
                    let p = received_power(
                        &paths,
                        |p| tx_gain(&departure(p), s, &radio.pattern, radio.array),
                        |_| radio.rx_gain_dbi,
                        radio,
                    );
                    let snr = snr_db(p, radio);
                    if snr > best.snr_db {
                        best = CoverageCell {
                            best_tx: Some(d.id),
                            snr_db: snr,
                            capacity_bps: shannon_capacity(snr, radio.bandwidth),
                            indoor: false,
                        };
                    }
                }
            }
            best
        })
        .collect();
    Ok(CoverageMap {
        meta: MapMeta {
            scene: scene.name.clone(),
            transmitters: txs.iter().map(|d| d.id).collect(),
            radio: radio.clone(),
            rt: rt.clone(),
            grid: rg,
        },
        cells,
    })
}

/// Cells whose capacity meets the requirement.
pub fn threshold_map(cov: &CoverageMap, req: &RateRequirement) -> Vec<bool> {
    cov.cells.iter().map(|c| c.best_tx.is_some() && c.capacity_bps >= req.rate).collect()
}
