use crate::math::Vec3;

/// `n` directions on the golden-angle spiral: z_i = 1 - (2i+1)/n, azimuth
/// advancing by pi(3 - sqrt 5) per point.
pub fn fibonacci_directions(n: usize) -> Vec<Vec3> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2 * i + 1) as f64 / n as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let (s, c) = (golden * i as f64).sin_cos();
            Vec3::new(r * c, r * s, z)
        })
        .collect()
}
