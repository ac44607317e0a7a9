use super::{GeoCoord, GeodesyError, Lcc, LccSpec};

/// East/north/up metric frame centered on a geographic origin.
///
/// Positions are differences of projected coordinates, so a mesh placed
/// with a catalog translation lands exactly where the source CRS put it.
#[derive(Clone, Debug)]
pub struct LocalFrame {
    origin: GeoCoord,
    projection: Lcc,
    origin_m: (f64, f64),
}

impl LocalFrame {
    pub fn new(origin: GeoCoord, lcc: &LccSpec) -> Result<Self, GeodesyError> {
        origin.validate()?;
        let projection = Lcc::new(lcc)?;
        let origin_m = projection.forward_m(&origin)?;
        Ok(Self {
            origin,
            projection,
            origin_m,
        })
    }

    pub fn origin(&self) -> GeoCoord {
        self.origin
    }

    pub fn projection(&self) -> &Lcc {
        &self.projection
    }

    /// Projected (easting, northing) of the origin in meters.
    pub fn origin_projected_m(&self) -> (f64, f64) {
        self.origin_m
    }

    pub fn to_local(&self, geo: &GeoCoord) -> Result<[f64; 3], GeodesyError> {
        let (e, n) = self.projection.forward_m(geo)?;
        Ok([e - self.origin_m.0, n - self.origin_m.1, geo.alt - self.origin.alt])
    }

    pub fn to_geo(&self, xyz: [f64; 3]) -> Result<GeoCoord, GeodesyError> {
        if xyz.iter().any(|v| !v.is_finite()) {
            return Err(GeodesyError::NonFinite("local coordinate"));
        }
        let mut g = self
            .projection
            .inverse_m(self.origin_m.0 + xyz[0], self.origin_m.1 + xyz[1])?;
        g.alt = self.origin.alt + xyz[2];
        Ok(g)
    }

    /// Local (x, y) of an absolute projected position in meters.
    pub fn projected_m_to_local(&self, easting_m: f64, northing_m: f64) -> [f64; 2] {
        [easting_m - self.origin_m.0, northing_m - self.origin_m.1]
    }
}

pub fn geo_to_local(geo: &GeoCoord, frame: &LocalFrame) -> Result<[f64; 3], GeodesyError> {
    frame.to_local(geo)
}

pub fn local_to_geo(xyz: [f64; 3], frame: &LocalFrame) -> Result<GeoCoord, GeodesyError> {
    frame.to_geo(xyz)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame_at(lon: f64, lat: f64) -> LocalFrame {
        LocalFrame::new(GeoCoord::new(lon, lat).unwrap(), &LccSpec::massachusetts_mainland()).unwrap()
    }

    #[test]
    fn origin_is_zero() {
        let f = frame_at(-71.06, 42.36);
        let p = f.to_local(&f.origin()).unwrap();
        assert_eq!(p, [0.0, 0.0, 0.0]);
        let g = f.to_geo([0.0, 0.0, 0.0]).unwrap();
        assert!((g.lon - f.origin().lon).abs() < 1e-12);
        assert!((g.lat - f.origin().lat).abs() < 1e-12);
    }

    #[test]
    fn north_is_plus_y() {
        // 1 km due north along the meridian (PROJ geod, GRS80: 42.36 -> 42.3690024910)
        let f = frame_at(-71.06, 42.36);
        let north = GeoCoord::new(-71.06, 42.369_002_491_008_7).unwrap();
        let p = f.to_local(&north).unwrap();
        assert!((p[1] - 1000.0).abs() < 0.5, "y = {}", p[1]);
        // grid convergence tilts the meridian by ~0.3 degrees here
        assert!(p[0].abs() < 10.0);
    }

    #[test]
    fn altitude_passes_through() {
        let f = frame_at(-71.06, 42.36);
        let g = GeoCoord::with_alt(-71.05, 42.37, 12.5).unwrap();
        let p = f.to_local(&g).unwrap();
        assert_eq!(p[2], 12.5);
        let back = f.to_geo(p).unwrap();
        assert!((back.lon - g.lon).abs() < 1e-9);
        assert!((back.lat - g.lat).abs() < 1e-9);
        assert_eq!(back.alt, 12.5);
    }
}
