use nalgebra::Matrix3;
use num_complex::Complex64;

use super::fresnel::fresnel_coefficients;
use crate::math::{any_orthogonal, spherical_basis, Vec3};

/// 2×2 complex field transfer, `[receive][transmit]` over (theta, phi).
pub type PolarizationMatrix = [[Complex64; 2]; 2];

pub(crate) type Dyadic = Matrix3<Complex64>;

fn cvec(v: &Vec3) -> nalgebra::Vector3<Complex64> {
    v.map(|x| Complex64::new(x, 0.0))
}

fn outer(a: &Vec3, b: &Vec3) -> Dyadic {
    cvec(a) * cvec(b).transpose()
}

/// Specular reflection dyadic for unit propagation directions `k_in`,
/// `k_out` at a surface with unit normal `n` (either orientation).
pub fn reflection_matrix(k_in: &Vec3, k_out: &Vec3, n: &Vec3, eta: Complex64) -> Dyadic {
    let cos_i = k_in.dot(n).abs();
    let (te, tm) = fresnel_coefficients(cos_i, eta);
    let c = k_in.cross(n);
    let perp = if c.norm() > 1e-12 { c.normalize() } else { any_orthogonal(k_in) };
    let par_in = perp.cross(k_in);
    let par_out = perp.cross(k_out);
    outer(&perp, &perp) * te + outer(&par_out, &par_in) * tm
}

/// Edge-fixed diffraction dyadic for incident direction `s_in`, diffracted
/// direction `s_out` and unit edge direction `e`.
pub fn diffraction_matrix(s_in: &Vec3, s_out: &Vec3, e: &Vec3, ds: Complex64, dh: Complex64) -> Dyadic {
    let phi_in = -e.cross(s_in).normalize();
    let beta_in = phi_in.cross(s_in);
    let phi_out = e.cross(s_out).normalize();
    let beta_out = phi_out.cross(s_out);
    -(outer(&beta_out, &beta_in) * ds) - outer(&phi_out, &phi_in) * dh
}

/// Projects a dyadic onto the transmit basis of `k_dep` and the receive
/// basis facing `-k_arr`.
pub(crate) fn project(m: &Dyadic, k_dep: &Vec3, k_arr: &Vec3, scale: f64) -> PolarizationMatrix {
    let (tt, tp) = spherical_basis(k_dep);
    let (rt, rp) = spherical_basis(&-k_arr);
    let tx = [cvec(&tt), cvec(&tp)];
    let rx = [cvec(&rt), cvec(&rp)];
    let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
    for (r, row) in rx.iter().zip(out.iter_mut()) {
        for (t, cell) in tx.iter().zip(row.iter_mut()) {
            *cell = (r.transpose() * m * t)[0] * scale;
        }
    }
    out
}
