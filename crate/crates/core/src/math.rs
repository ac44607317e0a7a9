//! Small vector helpers shared by the geometry and tracing code.

pub type Vec3 = nalgebra::Vector3<f64>;

pub fn vec3(v: [f64; 3]) -> Vec3 {
    Vec3::new(v[0], v[1], v[2])
}

pub fn vec3_f32(v: [f32; 3]) -> Vec3 {
    Vec3::new(v[0] as f64, v[1] as f64, v[2] as f64)
}

/// Unit vector orthogonal to `v` (which need not be normalized).
pub fn any_orthogonal(v: &Vec3) -> Vec3 {
    let helper = if v.x.abs() < 0.9 {
        Vec3::x()
    } else {
        Vec3::y()
    };
    v.cross(&helper).normalize()
}

/// Component of `v` orthogonal to the unit vector `axis`.
pub fn reject(v: &Vec3, axis: &Vec3) -> Vec3 {
    v - axis * v.dot(axis)
}

/// Spherical angles (theta from +z, phi from +x) of a direction.
pub fn direction_angles(d: &Vec3) -> (f64, f64) {
    let n = d.norm();
    let theta = (d.z / n).clamp(-1.0, 1.0).acos();
    let phi = d.y.atan2(d.x);
    (theta, phi)
}

/// Local spherical basis (theta-hat, phi-hat) for a propagation direction.
pub fn spherical_basis(d: &Vec3) -> (Vec3, Vec3) {
    let (theta, phi) = direction_angles(d);
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    (
        Vec3::new(ct * cp, ct * sp, -st),
        Vec3::new(-sp, cp, 0.0),
    )
}
