//! Heuristic UTD wedge diffraction coefficients for lossy wedges.

use num_complex::Complex64;
use std::f64::consts::{FRAC_PI_4, PI, TAU};

use super::fresnel::{fresnel_coefficients, transition_function};

/// Below this distance from a shadow or reflection boundary the cot·F
/// product switches to its boundary expansion.
const BOUNDARY_EPS: f64 = 1e-6;

/// Wedge and observation geometry for one diffraction point.
#[derive(Clone, Copy, Debug)]
pub struct WedgeGeometry {
    /// Wedge parameter (exterior angle / pi), in (1, 2].
    pub n: f64,
    /// Incidence angle from face 0, in [0, n pi].
    pub phi_i: f64,
    /// Observation angle from face 0, in [0, n pi].
    pub phi_d: f64,
    /// Angle between the incident ray and the edge.
    pub beta0: f64,
    /// Distance source to edge.
    pub s_i: f64,
    /// Distance edge to observer.
    pub s_d: f64,
}

impl WedgeGeometry {
    pub fn distance_parameter(&self) -> f64 {
        let s = self.beta0.sin();
        self.s_i * self.s_d * s * s / (self.s_i + self.s_d)
    }
}

/// cot((pi + sign*beta)/(2n)) F(k L a^sign(beta)), stable at the boundaries.
fn cot_f(sign: f64, beta: f64, n: f64, kl: f64) -> Complex64 {
    let x = PI + sign * beta;
    let m = (x / (TAU * n)).round();
    let eps = x - TAU * n * m;
    if eps.abs() < BOUNDARY_EPS {
        // boundary expansion; eps <= 0 is the shadowed side
        let sgn = if eps > 0.0 { 1.0 } else { -1.0 };
        let j4 = Complex64::from_polar(1.0, FRAC_PI_4);
        return n * (sgn * (TAU * kl).sqrt() - 2.0 * kl * eps * j4) * j4;
    }
    let a = 2.0 * (0.5 * eps).sin().powi(2);
    let cot = 1.0 / (eps / (2.0 * n)).tan();
    cot * transition_function(kl * a)
}

/// Soft and hard diffraction coefficients (D_s, D_h) of a wedge whose
/// faces have relative permittivity `eta`, at wavenumber `k`.
pub fn diffraction_coefficients(g: &WedgeGeometry, k: f64, eta: Complex64) -> (Complex64, Complex64) {
    let n = g.n;
    let kl = k * g.distance_parameter();
    let (phi, phip) = (g.phi_d, g.phi_i);
    let t1 = cot_f(1.0, phi - phip, n, kl);
    let t2 = cot_f(-1.0, phi - phip, n, kl);
    let t3 = cot_f(-1.0, phi + phip, n, kl);
    let t4 = cot_f(1.0, phi + phip, n, kl);
    // grazing angles on each face, symmetric in source and observer
    let psi0 = phi.min(phip);
    let psin = (n * PI - phi).min(n * PI - phip);
    let (te0, tm0) = fresnel_coefficients(psi0.sin().abs(), eta);
    let (ten, tmn) = fresnel_coefficients(psin.sin().abs(), eta);
    let pre = -Complex64::from_polar(1.0, -FRAC_PI_4) / (2.0 * n * (TAU * k).sqrt() * g.beta0.sin());
    let ds = pre * (t1 + t2 + te0 * t3 + ten * t4);
    let dh = pre * (t1 + t2 + tm0 * t3 + tmn * t4);
    (ds, dh)
}
