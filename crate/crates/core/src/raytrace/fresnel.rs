//! Plane-wave reflection coefficients and the UTD transition function.

use num_complex::Complex64;
use std::f64::consts::{FRAC_PI_4, PI};

/// Reflection coefficients (TE, TM) for incidence with `cos_theta_i` in
/// [0, 1] on a half-space of complex relative permittivity `eta`.
pub fn fresnel_coefficients(cos_theta_i: f64, eta: Complex64) -> (Complex64, Complex64) {
    let c = cos_theta_i.clamp(0.0, 1.0);
    let root = (eta - (1.0 - c * c)).sqrt();
    // a vacuum half-space (eta = 1) at grazing is 0/0; no interface, no reflection
    let ratio = |num: Complex64, den: Complex64| if den.norm() == 0.0 { Complex64::new(0.0, 0.0) } else { num / den };
    (ratio(c - root, c + root), ratio(eta * c - root, eta * c + root))
}

fn erf_series(z: Complex64) -> Complex64 {
    // erf z = 2/sqrt(pi) sum (-1)^n z^(2n+1) / (n! (2n+1))
    let z2 = z * z;
    let mut p = z;
    let mut sum = Complex64::new(0.0, 0.0);
    for n in 0..200 {
        let t = p / (2 * n + 1) as f64;
        sum += t;
        if n > 4 && t.norm() <= 1e-17 * sum.norm() {
            break;
        }
        p = -p * z2 / (n + 1) as f64;
    }
    sum * (2.0 / PI.sqrt())
}

/// sqrt(pi) e^{z^2} erfc(z) by its continued fraction, for large |z| with
/// Re z > 0.
fn scaled_erfc_cf(z: Complex64) -> Complex64 {
    let mut t = z;
    for k in (1..=200).rev() {
        t = z + (k as f64 * 0.5) / t;
    }
    1.0 / t
}

/// UTD transition function F(x) = 2j sqrt(x) e^{jx} int_{sqrt x}^inf e^{-j t^2} dt
/// for x >= 0. F(0) = 0 and F(x) -> 1 as x grows.
pub fn transition_function(x: f64) -> Complex64 {
    if x <= 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let j = Complex64::i();
    let rot = Complex64::from_polar(1.0, -FRAC_PI_4);
    let z = Complex64::from_polar(x.sqrt(), FRAC_PI_4);
    if x < 4.0 {
        let erfc = 1.0 - erf_series(z);
        j * (PI * x).sqrt() * Complex64::from_polar(1.0, x) * rot * erfc
    } else {
        j * x.sqrt() * rot * scaled_erfc_cf(z)
    }
}
