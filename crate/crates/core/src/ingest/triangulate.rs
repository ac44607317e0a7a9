use crate::math::{vec3, Vec3};

fn newell_normal(pts: &[Vec3]) -> Vec3 {
    let mut n = Vec3::zeros();
    for i in 0..pts.len() {
        let a = pts[i];
        let b = pts[(i + 1) % pts.len()];
        n.x += (a.y - b.y) * (a.z + b.z);
        n.y += (a.z - b.z) * (a.x + b.x);
        n.z += (a.x - b.x) * (a.y + b.y);
    }
    n
}

/// Splits a planar polygon face into triangles with the face's winding.
///
/// A fan from the first vertex is used when every fan triangle agrees with
/// the polygon normal; otherwise (concave faces) ear clipping is applied.
pub fn triangulate_polygon(vertices: &[[f64; 3]], face: &[u32]) -> Vec<[u32; 3]> {
    if face.len() < 3 {
        return Vec::new();
    }
    if face.len() == 3 {
        return vec![[face[0], face[1], face[2]]];
    }
    let pts: Vec<Vec3> = face.iter().map(|&i| vec3(vertices[i as usize])).collect();
    let normal = newell_normal(&pts);
    let fan = || -> Vec<[u32; 3]> {
        (1..face.len() - 1)
            .map(|k| [face[0], face[k], face[k + 1]])
            .collect()
    };
    if normal.norm() == 0.0 {
        return fan();
    }
    let fan_ok = (1..pts.len() - 1).all(|k| {
        let c = (pts[k] - pts[0]).cross(&(pts[k + 1] - pts[0]));
        c.dot(&normal) > 0.0
    });
    if fan_ok {
        return fan();
    }
    ear_clip(face, &pts, &normal).unwrap_or_else(fan)
}

fn ear_clip(face: &[u32], pts: &[Vec3], normal: &Vec3) -> Option<Vec<[u32; 3]>> {
    // project onto the plane most orthogonal to the normal, keeping CCW order
    let axis = normal.iamax();
    let (u, v) = match axis {
        0 => (1, 2),
        1 => (2, 0),
        _ => (0, 1),
    };
    let p2: Vec<[f64; 2]> = pts.iter().map(|p| [p[u], p[v]]).collect();
    let cross = |a: [f64; 2], b: [f64; 2], c: [f64; 2]| (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
    let flip = normal[axis] < 0.0;
    let orient = |a, b, c| if flip { -cross(a, b, c) } else { cross(a, b, c) };
    let mut idx: Vec<usize> = (0..pts.len()).collect();
    let mut out = Vec::with_capacity(pts.len() - 2);
    while idx.len() > 3 {
        let n = idx.len();
        let mut clipped = false;
        for k in 0..n {
            let (ia, ib, ic) = (idx[(k + n - 1) % n], idx[k], idx[(k + 1) % n]);
            let (a, b, c) = (p2[ia], p2[ib], p2[ic]);
            if orient(a, b, c) <= 0.0 {
                continue;
            }
            let inside = idx.iter().any(|&j| {
                j != ia && j != ib && j != ic && {
                    let p = p2[j];
                    orient(a, b, p) >= 0.0 && orient(b, c, p) >= 0.0 && orient(c, a, p) >= 0.0
                }
            });
            if inside {
                continue;
            }
            out.push([face[ia], face[ib], face[ic]]);
            idx.remove(k);
            clipped = true;
            break;
        }
        if !clipped {
            return None;
        }
    }
    out.push([face[idx[0]], face[idx[1]], face[idx[2]]]);
    Some(out)
}
