use std::io::Write;

use super::coverage::{CoverageCell, CoverageMap, MapMeta};
use super::RadioError;

pub const DEFAULT_PGM_RANGE_DB: (f64, f64) = (-10.0, 30.0);
const META_PREFIX: &str = "# meta ";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MapFormat {
    Csv,
    Pgm,
}

pub fn export_map(map: &CoverageMap, format: MapFormat) -> Vec<u8> {
    match format {
        MapFormat::Csv => map_csv(map),
        MapFormat::Pgm => map_pgm(map, DEFAULT_PGM_RANGE_DB),
    }
}

fn header(out: &mut Vec<u8>, meta: &MapMeta) {
    let g = &meta.grid;
    let r = &meta.radio;
    writeln!(out, "# rftwin coverage map, scene {}", meta.scene).unwrap();
    writeln!(
        out,
        "# grid x0={:?} y0={:?} cell={:?} nx={} ny={} rx_height={:?}",
        g.x0, g.y0, g.cell, g.nx, g.ny, g.z
    )
    .unwrap();
    writeln!(
        out,
        "# f_c={:?} bandwidth={:?} tx_power_dbm={:?} noise_figure_db={:?} noise_floor_dbm={:?}",
        r.f_c,
        r.bandwidth,
        r.tx_power_dbm,
        r.noise_figure_db,
        r.noise_floor_dbm()
    )
    .unwrap();
    writeln!(out, "{META_PREFIX}{}", serde_json::to_string(meta).expect("metadata serializes")).unwrap();
}

/// One row per cell in row-major order: x, y, best_tx, snr_db,
/// capacity_bps, flags. Comment lines carry the run metadata.
pub fn map_csv(map: &CoverageMap) -> Vec<u8> {
    let mut out = Vec::new();
    header(&mut out, &map.meta);
    writeln!(out, "x,y,best_tx,snr_db,capacity_bps,flags").unwrap();
    for (i, c) in map.cells.iter().enumerate() {
        let p = map.grid().center(i);
        let tx = c.best_tx.map(|t| t.to_string()).unwrap_or_default();
        writeln!(out, "{:?},{:?},{},{:?},{:?},{}", p.x, p.y, tx, c.snr_db, c.capacity_bps, c.flags()).unwrap();
    }
    out
}

/// Parses a map written by [`map_csv`].
pub fn parse_map_csv(data: &[u8]) -> Result<CoverageMap, RadioError> {
    let text = std::str::from_utf8(data).map_err(|e| RadioError::Format(format!("not UTF-8: {e}")))?;
    let mut meta: Option<MapMeta> = None;
    let mut cells = Vec::new();
    let mut seen_header = false;
    for (n, line) in text.lines().enumerate() {
        let bad = |what: &str| RadioError::Format(format!("line {}: {what}", n + 1));
        if let Some(json) = line.strip_prefix(META_PREFIX) {
            meta = Some(serde_json::from_str(json).map_err(|e| bad(&e.to_string()))?);
            continue;
        }
        if line.starts_with('#') || line.is_empty() {
            continue;
        }
        if !seen_header {
            if line != "x,y,best_tx,snr_db,capacity_bps,flags" {
                return Err(bad("unexpected column header"));
            }
            seen_header = true;
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            return Err(bad("expected 6 fields"));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad(&format!("bad number `{s}`")));
        let best_tx = if f[2].is_empty() {
            None
        } else {
            Some(f[2].parse::<u32>().map_err(|_| bad("bad transmitter id"))?)
        };
        let cell = CoverageCell {
            best_tx,
            snr_db: num(f[3])?,
            capacity_bps: num(f[4])?,
            indoor: f[5] == "indoor",
        };
        if cell.flags() != f[5] {
            return Err(bad("flags disagree with the cell values"));
        }
        cells.push(cell);
    }
    let meta = meta.ok_or_else(|| RadioError::Format("missing metadata line".into()))?;
    if cells.len() != meta.grid.len() {
        return Err(RadioError::Format(format!("{} cells for a {}×{} grid", cells.len(), meta.grid.nx, meta.grid.ny)));
    }
    Ok(CoverageMap { meta, cells })
}

/// 16-bit binary PGM, north row first. Served cells map SNR linearly from
/// `range` onto 1..=65535 (clamped); indoor and outage cells are 0.
pub fn map_pgm(map: &CoverageMap, range: (f64, f64)) -> Vec<u8> {
    let g = map.grid();
    let mut out = Vec::new();
    write!(
        out,
        "P5\n# snr_db_range {:?} {:?}; 0 = outage or indoor\n{} {}\n65535\n",
        range.0, range.1, g.nx, g.ny
    )
    .unwrap();
    for row in (0..g.ny).rev() {
        for col in 0..g.nx {
            let c = &map.cells[row * g.nx + col];
            let v = if c.best_tx.is_some() {
                let t = ((c.snr_db - range.0) / (range.1 - range.0)).clamp(0.0, 1.0);
                1 + (t * 65534.0).round() as u16
            } else {
                0
            };
            out.extend_from_slice(&v.to_be_bytes());
        }
    }
    out
}

/// Pass/fail grid as CSV rows x, y, pass (0/1).
pub fn threshold_csv(map: &CoverageMap, pass: &[bool], label: &str) -> Vec<u8> {
    let mut out = Vec::new();
    header(&mut out, &map.meta);
    writeln!(out, "# requirement {label}").unwrap();
    writeln!(out, "x,y,pass").unwrap();
    for (i, ok) in pass.iter().enumerate() {
        let p = map.grid().center(i);
        writeln!(out, "{:?},{:?},{}", p.x, p.y, u8::from(*ok)).unwrap();
    }
    out
}
