use std::collections::BTreeMap;

use num_complex::Complex64;

use super::{RtError, SPEED_OF_LIGHT};
use crate::math::Vec3;
use crate::mesh::{Bvh, WorldTriangle};
use crate::scene::{MaterialTable, Scene};

const PLANE_COS_TOL: f64 = 1e-6;
const PLANE_DIST_TOL: f64 = 1e-4;
/// Edges with both endpoints at or below this height rest on the ground.
const GROUND_EDGE_Z: f64 = 1e-3;

/// Maximal set of coplanar triangles of one instance.
#[derive(Clone, Debug)]
pub struct Plane {
    pub normal: Vec3,
    /// Offset along `normal`: points p on the plane satisfy n·p = d.
    pub d: f64,
    pub instance: u32,
    pub material: u32,
    /// Member triangle ids, ascending.
    pub triangles: Vec<u32>,
}

impl Plane {
    pub fn mirror(&self, p: &Vec3) -> Vec3 {
        p - self.normal * (2.0 * (self.normal.dot(p) - self.d))
    }

    pub fn signed_distance(&self, p: &Vec3) -> f64 {
        self.normal.dot(p) - self.d
    }
}

/// A convex wedge edge (or the free edge of a sheet) eligible for diffraction.
#[derive(Clone, Debug)]
pub struct Edge {
    pub a: Vec3,
    pub b: Vec3,
    /// Face 0 and face n triangle ids; equal for a half-plane.
    pub faces: [u32; 2],
    /// Outward unit normals of face 0 and face n.
    pub normals: [Vec3; 2],
    /// Unit vector in face 0, perpendicular to the edge, pointing into the face.
    pub t0: Vec3,
    /// Wedge parameter: exterior angle / pi.
    pub n: f64,
    pub material: u32,
    pub instance: u32,
}

impl Edge {
    pub fn length(&self) -> f64 {
        (self.b - self.a).norm()
    }

    pub fn direction(&self) -> Vec3 {
        (self.b - self.a).normalize()
    }

    /// Angle of `p` around the edge, measured from face 0 through the
    /// exterior, in [0, 2pi).
    pub fn angle_of(&self, p: &Vec3) -> f64 {
        let v = p - self.a;
        let a = v.dot(&self.normals[0]).atan2(v.dot(&self.t0));
        if a < 0.0 {
            a + std::f64::consts::TAU
        } else {
            a
        }
    }

    /// True if either face's plane separates `p` from the other face's side.
    pub fn is_silhouette_for(&self, p: &Vec3) -> bool {
        if self.faces[0] == self.faces[1] {
            return true;
        }
        let s0 = (p - self.a).dot(&self.normals[0]);
        let s1 = (p - self.a).dot(&self.normals[1]);
        (s0 > 0.0) != (s1 > 0.0)
    }
}

/// Immutable tracing state derived from a scene at one carrier frequency.
#[derive(Clone, Debug)]
pub struct TraceScene {
    pub bvh: Bvh,
    pub planes: Vec<Plane>,
    /// Plane id of every triangle.
    pub plane_of: Vec<u32>,
    pub edges: Vec<Edge>,
    /// Complex relative permittivity per material index.
    pub eta: Vec<Complex64>,
    pub material_names: Vec<String>,
    pub ground_instance: Option<u32>,
    pub frequency: f64,
}

impl TraceScene {
    pub fn new(scene: &Scene, materials: &MaterialTable, frequency: f64) -> Result<Self, RtError> {
        if !(frequency.is_finite() && frequency > 0.0) {
            return Err(RtError::Config(format!("carrier frequency must be positive, got {frequency}")));
        }
        let names = scene.material_names();
        let eta = names
            .iter()
            .map(|n| Ok(materials.at_frequency(n, frequency)?.complex_permittivity(frequency)))
            .collect::<Result<Vec<_>, RtError>>()?;
        let bvh = scene.build_bvh();
        let ground_instance = scene.ground.as_ref().map(|_| scene.meshes.len() as u32);
        let (planes, plane_of) = group_planes(bvh.triangles());
        let edges = find_edges(bvh.triangles(), ground_instance);
        log::debug!(
            "trace scene: {} triangles, {} planes, {} diffraction edges",
            bvh.len(),
            planes.len(),
            edges.len()
        );
        Ok(Self {
            bvh,
            planes,
            plane_of,
            edges,
            eta,
            material_names: names,
            ground_instance,
            frequency,
        })
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.frequency
    }

    pub fn wavenumber(&self) -> f64 {
        std::f64::consts::TAU / self.wavelength()
    }

    pub fn plane(&self, triangle: u32) -> &Plane {
        &self.planes[self.plane_of[triangle as usize] as usize]
    }

    /// True if an upward ray from `p` meets any non-ground geometry.
    pub fn is_covered(&self, p: &Vec3) -> bool {
        let up = Vec3::z();
        let mut origin = *p;
        let mut remaining = f64::INFINITY;
        while let Ok(Some(hit)) = self.bvh.nearest(&origin, &up, 0.0, remaining) {
            if Some(hit.instance) != self.ground_instance {
                return true;
            }
            origin += up * hit.t;
            remaining -= hit.t;
            origin.z += crate::mesh::SELF_INTERSECTION_EPS;
        }
        false
    }
}

fn group_planes(tris: &[WorldTriangle]) -> (Vec<Plane>, Vec<u32>) {
    let mut planes: Vec<Plane> = Vec::new();
    let mut by_instance: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    let mut plane_of = Vec::with_capacity(tris.len());
    for (id, t) in tris.iter().enumerate() {
        let d = t.normal.dot(&t.v[0]);
        let list = by_instance.entry(t.instance).or_default();
        let found = list.iter().copied().find(|&p| {
            let pl = &planes[p as usize];
            pl.normal.dot(&t.normal) > 1.0 - PLANE_COS_TOL
                && pl.material == t.material
                && t.v.iter().all(|v| pl.signed_distance(v).abs() < PLANE_DIST_TOL)
        });
        let p = match found {
            Some(p) => p,
            None => {
                planes.push(Plane {
                    normal: t.normal,
                    d,
                    instance: t.instance,
                    material: t.material,
                    triangles: Vec::new(),
                });
                let p = (planes.len() - 1) as u32;
                list.push(p);
                p
            }
        };
        planes[p as usize].triangles.push(id as u32);
        plane_of.push(p);
    }
    (planes, plane_of)
}

fn vertex_key(v: &Vec3) -> [u64; 3] {
    // world positions come from f32 data plus a common translation, so
    // shared corners are bit-identical
    [v.x.to_bits(), v.y.to_bits(), v.z.to_bits()]
}

fn find_edges(tris: &[WorldTriangle], ground: Option<u32>) -> Vec<Edge> {
    let mut by_instance: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    for (id, t) in tris.iter().enumerate() {
        if Some(t.instance) != ground {
            by_instance.entry(t.instance).or_default().push(id as u32);
        }
    }
    let mut edges = Vec::new();
    for (instance, ids) in by_instance {
        let mut index: BTreeMap<[u64; 3], u32> = BTreeMap::new();
        let mut pos: Vec<Vec3> = Vec::new();
        let mut weld = |v: &Vec3| -> u32 {
            *index.entry(vertex_key(v)).or_insert_with(|| {
                pos.push(*v);
                (pos.len() - 1) as u32
            })
        };
        let mut adjacency: BTreeMap<(u32, u32), Vec<u32>> = BTreeMap::new();
        for &id in &ids {
            let t = &tris[id as usize];
            let w = [weld(&t.v[0]), weld(&t.v[1]), weld(&t.v[2])];
            for k in 0..3 {
                let (i, j) = (w[k], w[(k + 1) % 3]);
                if i != j {
                    adjacency.entry((i.min(j), i.max(j))).or_default().push(id);
                }
            }
        }
        for ((i, j), faces) in adjacency {
            let (a, b) = (pos[i as usize], pos[j as usize]);
            if a.z <= GROUND_EDGE_Z && b.z <= GROUND_EDGE_Z {
                continue;
            }
            if let Some(e) = make_edge(tris, a, b, &faces, instance) {
                edges.push(e);
            }
        }
    }
    edges
}

fn inward(t: &WorldTriangle, a: &Vec3, e: &Vec3) -> Option<Vec3> {
    // the corner opposite the edge, projected perpendicular to the edge
    let c = t.centroid() - a;
    let perp = c - e * c.dot(e);
    let n = perp.norm();
    (n > 1e-12).then(|| perp / n)
}

fn make_edge(tris: &[WorldTriangle], a: Vec3, b: Vec3, faces: &[u32], instance: u32) -> Option<Edge> {
    let e = (b - a).normalize();
    match faces {
        [f] => {
            let t = &tris[*f as usize];
            Some(Edge {
                a,
                b,
                faces: [*f, *f],
                normals: [t.normal, -t.normal],
                t0: inward(t, &a, &e)?,
                n: 2.0,
                material: t.material,
                instance,
            })
        }
        [f0, f1] => {
            let (f0, f1) = (*f0.min(f1), *f0.max(f1));
            let (t0, t1) = (&tris[f0 as usize], &tris[f1 as usize]);
            if t0.normal.dot(&t1.normal) > 1.0 - PLANE_COS_TOL {
                return None;
            }
            let d0 = inward(t0, &a, &e)?;
            let d1 = inward(t1, &a, &e)?;
            // convex when face 1 lies behind face 0's plane
            if d1.dot(&t0.normal) >= -1e-9 {
                return None;
            }
            let mut ext = d1.dot(&t0.normal).atan2(d1.dot(&d0));
            if ext < 0.0 {
                ext += std::f64::consts::TAU;
            }
            let n = ext / std::f64::consts::PI;
            if n <= 1.0 + 1e-9 {
                return None;
            }
            Some(Edge {
                a,
                b,
                faces: [f0, f1],
                normals: [t0.normal, t1.normal],
                t0: d0,
                n,
                material: t0.material,
                instance,
            })
        }
        _ => None,
    }
}
