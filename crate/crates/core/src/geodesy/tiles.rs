//! Tile naming grid of the source dataset.
//!
//! Tiles are 5000 ft squares aligned with the state-plane axes. Columns are
//! lettered west to east, rows numbered north to south; tile `<L>_<N>` spans
//! `[(col + 1) * 5000, (col + 2) * 5000)` east and `[(14 - N) * 5000,
//! (15 - N) * 5000)` north of the custom origin, with `col` the zero-based
//! letter index.

use std::fmt;
use std::str::FromStr;

use super::{GeoCoord, GeodesyError, Lcc, LengthUnit, SourceCrs};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TileId {
    pub column: char,
    pub row: u32,
}

impl FromStr for TileId {
    type Err = GeodesyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || GeodesyError::BadTileName(s.to_string());
        let rest = s.strip_prefix("BOS_").ok_or_else(bad)?;
        let (col, row) = rest.split_once('_').ok_or_else(bad)?;
        let mut chars = col.chars();
        let column = chars.next().ok_or_else(bad)?;
        if chars.next().is_some() || !('A'..='O').contains(&column) {
            return Err(bad());
        }
        let row: u32 = row.parse().map_err(|_| bad())?;
        if !(1..=13).contains(&row) {
            return Err(bad());
        }
        Ok(Self { column, row })
    }
}

impl fmt::Display for TileId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BOS_{}_{}", self.column, self.row)
    }
}

/// Maps tile names to their state-plane squares.
#[derive(Clone, Debug)]
pub struct TileGrid {
    crs: SourceCrs,
    side: f64,
}

impl TileGrid {
    pub fn new(crs: SourceCrs) -> Self {
        let side = LengthUnit::UsSurveyFoot.to_meters(5000.0);
        Self {
            side: crs.lcc.unit.from_meters(side),
            crs,
        }
    }

    pub fn crs(&self) -> &SourceCrs {
        &self.crs
    }

    /// Tile side in meters.
    pub fn side_m(&self) -> f64 {
        self.crs.lcc.unit.to_meters(self.side)
    }

    /// South-west corner in absolute projected meters.
    pub fn south_west_m(&self, tile: TileId) -> (f64, f64) {
        let col = (tile.column as u32 - 'A' as u32) as f64;
        let row = tile.row as f64;
        let x = self.crs.custom_origin.easting + (col + 1.0) * self.side;
        let y = self.crs.custom_origin.northing + (14.0 - row) * self.side;
        let unit = self.crs.custom_origin.unit;
        (unit.to_meters(x), unit.to_meters(y))
    }

    /// Tile center in absolute projected meters.
    pub fn center_m(&self, tile: TileId) -> (f64, f64) {
        let (x, y) = self.south_west_m(tile);
        let h = 0.5 * self.side_m();
        (x + h, y + h)
    }

    pub fn center_geo(&self, tile: TileId) -> Result<GeoCoord, GeodesyError> {
        let (x, y) = self.center_m(tile);
        Lcc::new(&self.crs.lcc)?.inverse_m(x, y)
    }

    /// Corners (SW, SE, NE, NW) in absolute projected meters.
    pub fn corners_m(&self, tile: TileId) -> [(f64, f64); 4] {
        let (x, y) = self.south_west_m(tile);
        let s = self.side_m();
        [(x, y), (x + s, y), (x + s, y + s), (x, y + s)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_tile_names() {
        let t: TileId = "BOS_F_4".parse().unwrap();
        assert_eq!(t, TileId { column: 'F', row: 4 });
        assert_eq!(t.to_string(), "BOS_F_4");
        for bad in ["BOS_F", "BOS_Z_1", "BOS_F_0", "BOS_F_14", "XYZ_F_4", "BOS_FF_4"] {
            assert!(bad.parse::<TileId>().is_err(), "{bad}");
        }
    }

    #[test]
    fn centers_match_published_table() {
        let grid = TileGrid::new(SourceCrs::boston());
        // (tile, lon, lat) from the published tile table.
        let table = [
            ("BOS_F_4", -71.1025189571, 42.3570902827),
            ("BOS_G_4", -71.0840202471, 42.3570248589),
            ("BOS_H_3", -71.0654273276, 42.3706765403),
            ("BOS_I_9", -71.0475136132, 42.2882841434),
            ("BOS_J_7", -71.028830914, 42.3156503367),
        ];
        for (name, lon, lat) in table {
            let c = grid.center_geo(name.parse().unwrap()).unwrap();
            assert!((c.lon - lon).abs() < 2e-4, "{name} lon {}", c.lon);
            assert!((c.lat - lat).abs() < 2e-4, "{name} lat {}", c.lat);
        }
    }

    #[test]
    fn side_is_five_thousand_survey_feet() {
        let grid = TileGrid::new(SourceCrs::boston());
        assert!((grid.side_m() - 1524.003_048).abs() < 1e-6);
    }
}
