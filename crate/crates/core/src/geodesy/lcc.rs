//! Lambert Conformal Conic (two standard parallels) on an ellipsoid.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use serde::{Deserialize, Serialize};

use super::{GeoCoord, GeodesyError, LengthUnit, ProjectedCoord};

const POLE_EPS: f64 = 1e-10;

/// Projection constants of a conic conformal projection.
///
/// Angles are in degrees, false origin offsets in `unit`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LccSpec {
    pub semi_major_m: f64,
    pub inv_flattening: f64,
    pub lat_1: f64,
    pub lat_2: f64,
    pub lat_0: f64,
    pub lon_0: f64,
    pub false_easting: f64,
    pub false_northing: f64,
    pub unit: LengthUnit,
}

impl LccSpec {
    /// NAD83 / Massachusetts Mainland (EPSG:2249), GRS80, US survey feet.
    pub fn massachusetts_mainland() -> Self {
        Self {
            semi_major_m: 6_378_137.0,
            inv_flattening: 298.257_222_101,
            lat_1: 42.0 + 41.0 / 60.0,
            lat_2: 41.0 + 43.0 / 60.0,
            lat_0: 41.0,
            lon_0: -71.5,
            false_easting: 656_166.667,
            false_northing: 2_460_625.0,
            unit: LengthUnit::UsSurveyFoot,
        }
    }

    pub fn validate(&self) -> Result<(), GeodesyError> {
        let finite = [
            self.semi_major_m,
            self.inv_flattening,
            self.lat_1,
            self.lat_2,
            self.lat_0,
            self.lon_0,
            self.false_easting,
            self.false_northing,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(GeodesyError::InvalidSpec("non-finite constant".into()));
        }
        if self.semi_major_m <= 0.0 {
            return Err(GeodesyError::InvalidSpec("semi-major axis must be positive".into()));
        }
        if self.inv_flattening <= 1.0 {
            return Err(GeodesyError::InvalidSpec("inverse flattening must exceed 1".into()));
        }
        for (name, lat) in [("lat_1", self.lat_1), ("lat_2", self.lat_2)] {
            if lat.abs() >= 90.0 - POLE_EPS {
                return Err(GeodesyError::InvalidSpec(format!("{name} must be strictly between the poles")));
            }
        }
        if self.lat_0.abs() > 90.0 || self.lon_0.abs() > 180.0 {
            return Err(GeodesyError::InvalidSpec("origin out of range".into()));
        }
        if (self.lat_1 + self.lat_2).abs() < POLE_EPS {
            return Err(GeodesyError::InvalidSpec(
                "standard parallels symmetric about the equator".into(),
            ));
        }
        Ok(())
    }
}

/// A prepared projection: the constants derived once from an [`LccSpec`].
#[derive(Clone, Debug)]
pub struct Lcc {
    spec: LccSpec,
    a: f64,
    e: f64,
    n: f64,
    af: f64,
    rho_0: f64,
    lon_0: f64,
}

fn m_of(phi: f64, e: f64) -> f64 {
    let s = phi.sin();
    phi.cos() / (1.0 - e * e * s * s).sqrt()
}

fn t_of(phi: f64, e: f64) -> f64 {
    let s = phi.sin();
    (FRAC_PI_4 - 0.5 * phi).tan() / ((1.0 - e * s) / (1.0 + e * s)).powf(0.5 * e)
}

impl Lcc {
    pub fn new(spec: &LccSpec) -> Result<Self, GeodesyError> {
        spec.validate()?;
        let a = spec.semi_major_m;
        let f = 1.0 / spec.inv_flattening;
        let e = (2.0 * f - f * f).sqrt();
        let phi_1 = spec.lat_1.to_radians();
        let phi_2 = spec.lat_2.to_radians();
        let phi_0 = spec.lat_0.to_radians();

        let (m1, t1) = (m_of(phi_1, e), t_of(phi_1, e));
        let n = if (phi_1 - phi_2).abs() < 1e-12 {
            phi_1.sin()
        } else {
            let (m2, t2) = (m_of(phi_2, e), t_of(phi_2, e));
            (m1.ln() - m2.ln()) / (t1.ln() - t2.ln())
        };
        let big_f = m1 / (n * t1.powf(n));
        let af = a * big_f;
        let rho_0 = if (phi_0.abs() - FRAC_PI_2).abs() < POLE_EPS {
            0.0
        } else {
            af * t_of(phi_0, e).powf(n)
        };
        Ok(Self {
            spec: spec.clone(),
            a,
            e,
            n,
            af,
            rho_0,
            lon_0: spec.lon_0.to_radians(),
        })
    }

    pub fn spec(&self) -> &LccSpec {
        &self.spec
    }

    pub fn cone_constant(&self) -> f64 {
        self.n
    }

    pub fn semi_major_m(&self) -> f64 {
        self.a
    }

    pub fn eccentricity(&self) -> f64 {
        self.e
    }

    /// Projects to easting/northing in meters, false origin included.
    pub fn forward_m(&self, geo: &GeoCoord) -> Result<(f64, f64), GeodesyError> {
        if !geo.lon.is_finite() || !geo.lat.is_finite() {
            return Err(GeodesyError::NonFinite("geographic coordinate"));
        }
        if geo.lat.abs() >= 90.0 - POLE_EPS {
            return Err(GeodesyError::Domain(format!("latitude {} is at a pole", geo.lat)));
        }
        let phi = geo.lat.to_radians();
        let rho = self.af * t_of(phi, self.e).powf(self.n);
        let theta = self.n * wrap_pi(geo.lon.to_radians() - self.lon_0);
        let dx = rho * theta.sin();
        let dy = self.rho_0 - rho * theta.cos();
        Ok((
            self.spec.unit.to_meters(self.spec.false_easting) + dx,
            self.spec.unit.to_meters(self.spec.false_northing) + dy,
        ))
    }

    pub fn forward(&self, geo: &GeoCoord) -> Result<ProjectedCoord, GeodesyError> {
        let (dx, dy) = self.offset_from_false_origin_m(geo)?;
        let unit = self.spec.unit;
        Ok(ProjectedCoord {
            easting: self.spec.false_easting + unit.from_meters(dx),
            northing: self.spec.false_northing + unit.from_meters(dy),
            unit,
        })
    }

    fn offset_from_false_origin_m(&self, geo: &GeoCoord) -> Result<(f64, f64), GeodesyError> {
        let (e, n) = self.forward_m(geo)?;
        Ok((
            e - self.spec.unit.to_meters(self.spec.false_easting),
            n - self.spec.unit.to_meters(self.spec.false_northing),
        ))
    }

    /// Inverse from easting/northing in meters (false origin included).
    pub fn inverse_m(&self, easting_m: f64, northing_m: f64) -> Result<GeoCoord, GeodesyError> {
        let dx = easting_m - self.spec.unit.to_meters(self.spec.false_easting);
        let dy = northing_m - self.spec.unit.to_meters(self.spec.false_northing);
        self.inverse_offset(dx, dy)
    }

    pub fn inverse(&self, p: &ProjectedCoord) -> Result<GeoCoord, GeodesyError> {
        if p.unit != self.spec.unit {
            return Err(GeodesyError::UnitMismatch {
                expected: self.spec.unit,
                found: p.unit,
            });
        }
        if !p.easting.is_finite() || !p.northing.is_finite() {
            return Err(GeodesyError::NonFinite("projected coordinate"));
        }
        let unit = self.spec.unit;
        let dx = unit.to_meters(p.easting - self.spec.false_easting);
        let dy = unit.to_meters(p.northing - self.spec.false_northing);
        self.inverse_offset(dx, dy)
    }

    fn inverse_offset(&self, dx: f64, dy: f64) -> Result<GeoCoord, GeodesyError> {
        if !dx.is_finite() || !dy.is_finite() {
            return Err(GeodesyError::NonFinite("projected coordinate"));
        }
        let n = self.n;
        let (mut x, mut y) = (dx, self.rho_0 - dy);
        let mut rho = x.hypot(y);
        if rho <= 0.0 {
            return Err(GeodesyError::Domain("radius from the cone apex is zero".into()));
        }
        if n < 0.0 {
            rho = -rho;
            x = -x;
            y = -y;
        }
        let t = (rho / self.af).powf(1.0 / n);
        let theta = x.atan2(y);
        let e = self.e;
        let mut phi = FRAC_PI_2 - 2.0 * t.atan();
        let mut converged = false;
        for _ in 0..50 {
            let s = phi.sin();
            let next = FRAC_PI_2 - 2.0 * (t * ((1.0 - e * s) / (1.0 + e * s)).powf(0.5 * e)).atan();
            let delta = (next - phi).abs();
            phi = next;
            if delta < 1e-15 {
                converged = true;
                break;
            }
        }
        if !converged || !phi.is_finite() {
            return Err(GeodesyError::Domain("latitude iteration did not converge".into()));
        }
        let lon = (theta / n + self.lon_0).to_degrees();
        Ok(GeoCoord {
            lon: wrap_deg(lon),
            lat: phi.to_degrees(),
            alt: 0.0,
        })
    }

    /// Point scale factor, from the closed-form expression `n * rho / (a * m)`.
    pub fn scale_factor(&self, lat_deg: f64) -> f64 {
        let phi = lat_deg.to_radians();
        let rho = self.af * t_of(phi, self.e).powf(self.n);
        self.n * rho / (self.a * m_of(phi, self.e))
    }
}

fn wrap_pi(mut a: f64) -> f64 {
    use std::f64::consts::PI;
    while a > PI {
        a -= 2.0 * PI;
    }
    while a < -PI {
        a += 2.0 * PI;
    }
    a
}

fn wrap_deg(mut a: f64) -> f64 {
    while a > 180.0 {
        a -= 360.0;
    }
    while a < -180.0 {
        a += 360.0;
    }
    a
}

/// Forward projection of `geo` with the constants of `spec`.
pub fn lcc_forward(geo: &GeoCoord, spec: &LccSpec) -> Result<ProjectedCoord, GeodesyError> {
    Lcc::new(spec)?.forward(geo)
}

/// Inverse projection of `p`, which must be expressed in `spec.unit`.
pub fn lcc_inverse(p: &ProjectedCoord, spec: &LccSpec) -> Result<GeoCoord, GeodesyError> {
    Lcc::new(spec)?.inverse(p)
}
