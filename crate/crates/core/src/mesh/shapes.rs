//! Procedural meshes used by the synthetic city, ground planes and tests.

use std::collections::HashMap;

use super::TriangleMesh;

/// Unit icosphere: an icosahedron subdivided `subdivisions` times
/// (20 * 4^subdivisions triangles), outward winding.
pub fn icosphere(subdivisions: u32) -> TriangleMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<[f64; 3]> = vec![
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ];
    for v in verts.iter_mut() {
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        v.iter_mut().for_each(|c| *c /= n);
    }
    let mut faces: Vec<[u32; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut cache: HashMap<(u32, u32), u32> = HashMap::new();
        let mut midpoint = |a: u32, b: u32, verts: &mut Vec<[f64; 3]>| -> u32 {
            let key = (a.min(b), a.max(b));
            if let Some(&i) = cache.get(&key) {
                return i;
            }
            let (pa, pb) = (verts[a as usize], verts[b as usize]);
            let mut m = [
                0.5 * (pa[0] + pb[0]),
                0.5 * (pa[1] + pb[1]),
                0.5 * (pa[2] + pb[2]),
            ];
            let n = (m[0] * m[0] + m[1] * m[1] + m[2] * m[2]).sqrt();
            m.iter_mut().for_each(|c| *c /= n);
            verts.push(m);
            let i = (verts.len() - 1) as u32;
            cache.insert(key, i);
            i
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = midpoint(a, b, &mut verts);
            let bc = midpoint(b, c, &mut verts);
            let ca = midpoint(c, a, &mut verts);
            next.push([a, ab, ca]);
            next.push([b, bc, ab]);
            next.push([c, ca, bc]);
            next.push([ab, bc, ca]);
        }
        faces = next;
    }
    TriangleMesh::new(
        verts
            .into_iter()
            .map(|v| [v[0] as f32, v[1] as f32, v[2] as f32])
            .collect(),
        faces,
    )
}

/// Axis-aligned box with outward winding: 12 triangles, or 10 when the
/// bottom face is omitted (typical of extruded building footprints).
pub fn axis_box(min: [f64; 3], max: [f64; 3], with_bottom: bool) -> TriangleMesh {
    let [x0, y0, z0] = min;
    let [x1, y1, z1] = max;
    let v = |x: f64, y: f64, z: f64| [x as f32, y as f32, z as f32];
    let vertices = vec![
        v(x0, y0, z0),
        v(x1, y0, z0),
        v(x1, y1, z0),
        v(x0, y1, z0),
        v(x0, y0, z1),
        v(x1, y0, z1),
        v(x1, y1, z1),
        v(x0, y1, z1),
    ];
    let mut triangles = vec![
        // top
        [4, 5, 6],
        [4, 6, 7],
        // south (-y)
        [0, 1, 5],
        [0, 5, 4],
        // east (+x)
        [1, 2, 6],
        [1, 6, 5],
        // north (+y)
        [2, 3, 7],
        [2, 7, 6],
        // west (-x)
        [3, 0, 4],
        [3, 4, 7],
    ];
    if with_bottom {
        triangles.push([0, 2, 1]);
        triangles.push([0, 3, 2]);
    }
    TriangleMesh::new(vertices, triangles)
}

/// Horizontal rectangle at height `z`, two triangles facing +z.
pub fn horizontal_rectangle(center: [f64; 2], half_extent: [f64; 2], z: f64) -> TriangleMesh {
    let (cx, cy) = (center[0], center[1]);
    let (hx, hy) = (half_extent[0], half_extent[1]);
    let v = |x: f64, y: f64| [x as f32, y as f32, z as f32];
    TriangleMesh::new(
        vec![
            v(cx - hx, cy - hy),
            v(cx + hx, cy - hy),
            v(cx + hx, cy + hy),
            v(cx - hx, cy + hy),
        ],
        vec![[0, 1, 2], [0, 2, 3]],
    )
}

/// Planar quad through four corners given in order, split along 0-2.
pub fn quad(corners: [[f64; 3]; 4]) -> TriangleMesh {
    TriangleMesh::new(
        corners
            .iter()
            .map(|c| [c[0] as f32, c[1] as f32, c[2] as f32])
            .collect(),
        vec![[0, 1, 2], [0, 2, 3]],
    )
}
