//! Planar polygon predicates in local scene coordinates.

const ON_EDGE_EPS: f64 = 1e-9;

fn segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    ((a[0] + t * dx - p[0]).powi(2) + (a[1] + t * dy - p[1]).powi(2)).sqrt()
}

fn edges(poly: &[[f64; 2]]) -> impl Iterator<Item = ([f64; 2], [f64; 2])> + '_ {
    (0..poly.len()).map(move |i| (poly[i], poly[(i + 1) % poly.len()]))
}

/// Smallest distance from `p` to the polygon outline.
pub fn distance_to_outline(p: [f64; 2], poly: &[[f64; 2]]) -> f64 {
    edges(poly)
        .map(|(a, b)| segment_distance(p, a, b))
        .fold(f64::INFINITY, f64::min)
}

/// Closed point-in-polygon test: points on the outline count as inside.
pub fn contains_point(poly: &[[f64; 2]], p: [f64; 2]) -> bool {
    if poly.len() < 3 {
        return false;
    }
    let scale = poly
        .iter()
        .map(|q| q[0].abs().max(q[1].abs()))
        .fold(1.0, f64::max);
    if distance_to_outline(p, poly) <= ON_EDGE_EPS * scale {
        return true;
    }
    let mut inside = false;
    for (a, b) in edges(poly) {
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
            if p[0] < x {
                inside = !inside;
            }
        }
    }
    inside
}

/// Whether the closed disc of `radius` around `center` meets the polygon.
pub fn disc_intersects(poly: &[[f64; 2]], center: [f64; 2], radius: f64) -> bool {
    contains_point(poly, center) || distance_to_outline(center, poly) <= radius
}

/// Vertex mean of the polygon.
pub fn vertex_mean(poly: &[[f64; 2]]) -> [f64; 2] {
    let n = poly.len().max(1) as f64;
    let s = poly.iter().fold([0.0, 0.0], |a, p| [a[0] + p[0], a[1] + p[1]]);
    [s[0] / n, s[1] / n]
}

/// (min, max) corners of the polygon's bounding box.
pub fn bounding_box(poly: &[[f64; 2]]) -> ([f64; 2], [f64; 2]) {
    poly.iter().fold(
        ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]),
        |(lo, hi), p| ([lo[0].min(p[0]), lo[1].min(p[1])], [hi[0].max(p[0]), hi[1].max(p[1])]),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQ: [[f64; 2]; 4] = [[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]];

    #[test]
    fn closed_membership() {
        assert!(contains_point(&SQ, [0.0, 0.0]));
        assert!(contains_point(&SQ, [1.0, 0.3]));
        assert!(contains_point(&SQ, [-1.0, -1.0]));
        assert!(!contains_point(&SQ, [1.0 + 1e-6, 0.0]));
        let tri = [[0.0, 0.0], [4.0, 0.0], [0.0, 4.0]];
        assert!(contains_point(&tri, [1.0, 1.0]));
        assert!(!contains_point(&tri, [3.0, 3.0]));
    }

    #[test]
    fn disc_tests() {
        assert!(disc_intersects(&SQ, [3.0, 0.0], 2.0));
        assert!(!disc_intersects(&SQ, [3.0, 0.0], 1.99));
        assert!(disc_intersects(&SQ, [0.2, 0.1], 1e-3));
        assert_eq!(bounding_box(&SQ), ([-1.0, -1.0], [1.0, 1.0]));
        assert_eq!(vertex_mean(&SQ), [0.0, 0.0]);
    }
}
