//! Quadric-error-metric edge collapse.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashMap};

use nalgebra::{Matrix3, Matrix4, Vector4};

use super::validate::{remove_degenerate, validate};
use super::{MeshError, TriangleMesh};
use crate::math::{vec3_f32, Vec3};

/// Smallest target accepted (a tetrahedron).
pub const MIN_TARGET: usize = 4;

const BOUNDARY_WEIGHT: f64 = 100.0;
const MIN_NORMAL_DOT: f64 = 0.2;
const MIN_AREA: f64 = 1e-9;

#[derive(Clone, Copy, Debug)]
struct Candidate {
    cost: f64,
    a: u32,
    b: u32,
    stamp_a: u32,
    stamp_b: u32,
    target: [f64; 3],
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Candidate {}
impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cost
            .total_cmp(&other.cost)
            .then(self.a.cmp(&other.a))
            .then(self.b.cmp(&other.b))
    }
}

struct Decimator {
    pos: Vec<Vec3>,
    out: Vec<[f32; 3]>,
    quadric: Vec<Matrix4<f64>>,
    stamp: Vec<u32>,
    removed: Vec<bool>,
    tris: Vec<[u32; 3]>,
    alive: Vec<bool>,
    live: usize,
    incident: Vec<Vec<usize>>,
}

fn plane_quadric(n: &Vec3, p: &Vec3, weight: f64) -> Matrix4<f64> {
    let q = Vector4::new(n.x, n.y, n.z, -n.dot(p));
    q * q.transpose() * weight
}

fn quadric_cost(q: &Matrix4<f64>, p: &Vec3) -> f64 {
    let v = Vector4::new(p.x, p.y, p.z, 1.0);
    (v.transpose() * q * v)[0].max(0.0)
}

impl Decimator {
    fn new(mesh: &TriangleMesh) -> Self {
        // weld bit-identical positions so that seams do not read as boundaries
        let mut remap = HashMap::new();
        let mut out = Vec::new();
        let mut index = Vec::with_capacity(mesh.vertices.len());
        for v in &mesh.vertices {
            let key = v.map(f32::to_bits);
            let i = *remap.entry(key).or_insert_with(|| {
                out.push(*v);
                out.len() as u32 - 1
            });
            index.push(i);
        }
        let tris: Vec<[u32; 3]> = mesh
            .triangles
            .iter()
            .map(|t| t.map(|i| index[i as usize]))
            .collect();
        // work relative to the centroid for conditioning
        let c = out.iter().fold(Vec3::zeros(), |s, v| s + vec3_f32(*v)) / out.len().max(1) as f64;
        let pos: Vec<Vec3> = out.iter().map(|v| vec3_f32(*v) - c).collect();
        let nv = out.len();
        let mut incident = vec![Vec::new(); nv];
        for (t, tri) in tris.iter().enumerate() {
            for &i in tri {
                incident[i as usize].push(t);
            }
        }
        let mut quadric = vec![Matrix4::zeros(); nv];
        let mut edge_faces: HashMap<(u32, u32), Vec<usize>> = HashMap::new();
        for (t, tri) in tris.iter().enumerate() {
            let [a, b, c] = tri.map(|i| pos[i as usize]);
            let cross = (b - a).cross(&(c - a));
            let area2 = cross.norm();
            if area2 > 0.0 {
                let q = plane_quadric(&(cross / area2), &a, 0.5 * area2);
                for &i in tri {
                    quadric[i as usize] += q;
                }
            }
            for k in 0..3 {
                let (u, v) = (tri[k], tri[(k + 1) % 3]);
                edge_faces.entry((u.min(v), u.max(v))).or_default().push(t);
            }
        }
        let mut boundary: Vec<_> = edge_faces
            .iter()
            .filter(|(_, f)| f.len() == 1)
            .map(|(e, f)| (*e, f[0]))
            .collect();
        boundary.sort_unstable();
        for ((u, v), t) in boundary {
            let [a, b, c] = tris[t].map(|i| pos[i as usize]);
            let n = (b - a).cross(&(c - a));
            let e = pos[v as usize] - pos[u as usize];
            let m = e.cross(&n);
            if m.norm() > 0.0 {
                let q = plane_quadric(&m.normalize(), &pos[u as usize], BOUNDARY_WEIGHT * e.norm_squared());
                quadric[u as usize] += q;
                quadric[v as usize] += q;
            }
        }
        let live = tris.len();
        Self {
            pos,
            out,
            quadric,
            stamp: vec![0; nv],
            removed: vec![false; nv],
            alive: vec![true; tris.len()],
            tris,
            live,
            incident,
        }
    }

    fn neighbours(&self, v: u32) -> Vec<u32> {
        let mut n: Vec<u32> = self.incident[v as usize]
            .iter()
            .filter(|&&t| self.alive[t])
            .flat_map(|&t| self.tris[t])
            .filter(|&u| u != v)
            .collect();
        n.sort_unstable();
        n.dedup();
        n
    }

    fn shared_faces(&self, a: u32, b: u32) -> Vec<usize> {
        self.incident[a as usize]
            .iter()
            .copied()
            .filter(|&t| self.alive[t] && self.tris[t].contains(&b))
            .collect()
    }

    fn is_boundary_vertex(&self, v: u32) -> bool {
        self.neighbours(v)
            .into_iter()
            .any(|u| self.shared_faces(v, u).len() == 1)
    }

    fn candidate(&self, a: u32, b: u32) -> Candidate {
        let (a, b) = (a.min(b), a.max(b));
        let q = self.quadric[a as usize] + self.quadric[b as usize];
        let pa = self.pos[a as usize];
        let pb = self.pos[b as usize];
        let mid = (pa + pb) * 0.5;
        let mut best = (quadric_cost(&q, &pa), pa);
        for p in [pb, mid] {
            let c = quadric_cost(&q, &p);
            if c < best.0 {
                best = (c, p);
            }
        }
        let m: Matrix3<f64> = q.fixed_view::<3, 3>(0, 0).into();
        let rhs = -Vec3::new(q[(0, 3)], q[(1, 3)], q[(2, 3)]);
        if let Some(inv) = m.try_inverse() {
            let p = inv * rhs;
            let reach = 2.0 * (pb - pa).norm();
            if p.iter().all(|c| c.is_finite()) && (p - mid).norm() <= reach {
                let c = quadric_cost(&q, &p);
                if c < best.0 {
                    best = (c, p);
                }
            }
        }
        Candidate {
            cost: best.0,
            a,
            b,
            stamp_a: self.stamp[a as usize],
            stamp_b: self.stamp[b as usize],
            target: [best.1.x, best.1.y, best.1.z],
        }
    }

    fn acceptable(&self, c: &Candidate) -> bool {
        let (a, b) = (c.a, c.b);
        let shared = self.shared_faces(a, b);
        if shared.is_empty() || shared.len() > 2 {
            return false;
        }
        // link condition: the only common neighbours are the apexes of the shared faces
        let na = self.neighbours(a);
        let nb = self.neighbours(b);
        let common = na.iter().filter(|v| nb.binary_search(v).is_ok()).count();
        if common != shared.len() {
            return false;
        }
        if shared.len() == 2 && self.is_boundary_vertex(a) && self.is_boundary_vertex(b) {
            return false;
        }
        let p = Vec3::new(c.target[0], c.target[1], c.target[2]);
        for v in [a, b] {
            for &t in &self.incident[v as usize] {
                if !self.alive[t] || shared.contains(&t) {
                    continue;
                }
                let tri = self.tris[t];
                let old = tri.map(|i| self.pos[i as usize]);
                let new = tri.map(|i| if i == a || i == b { p } else { self.pos[i as usize] });
                let n_old = (old[1] - old[0]).cross(&(old[2] - old[0]));
                let n_new = (new[1] - new[0]).cross(&(new[2] - new[0]));
                let area = 0.5 * n_new.norm();
                if area < MIN_AREA {
                    return false;
                }
                if n_old.norm() > 0.0 && n_old.normalize().dot(&n_new.normalize()) < MIN_NORMAL_DOT {
                    return false;
                }
            }
        }
        true
    }

    fn collapse(&mut self, c: &Candidate, origin: &Vec3) {
        let (a, b) = (c.a, c.b);
        for t in self.shared_faces(a, b) {
            self.alive[t] = false;
            self.live -= 1;
        }
        let moved: Vec<usize> = self.incident[b as usize]
            .iter()
            .copied()
            .filter(|&t| self.alive[t])
            .collect();
        for t in moved {
            for i in self.tris[t].iter_mut() {
                if *i == b {
                    *i = a;
                }
            }
            self.incident[a as usize].push(t);
        }
        self.incident[b as usize].clear();
        self.removed[b as usize] = true;
        let p = Vec3::new(c.target[0], c.target[1], c.target[2]);
        self.pos[a as usize] = p;
        let abs = p + origin;
        self.out[a as usize] = [abs.x as f32, abs.y as f32, abs.z as f32];
        let qb = self.quadric[b as usize];
        self.quadric[a as usize] += qb;
        self.stamp[a as usize] += 1;
        let alive = &self.alive;
        self.incident[a as usize].retain(|&t| alive[t]);
        self.incident[a as usize].sort_unstable();
        self.incident[a as usize].dedup();
    }

    fn is_current(&self, c: &Candidate) -> bool {
        !self.removed[c.a as usize]
            && !self.removed[c.b as usize]
            && self.stamp[c.a as usize] == c.stamp_a
            && self.stamp[c.b as usize] == c.stamp_b
    }

    fn finish(self, material: Option<String>) -> TriangleMesh {
        let mut map = vec![u32::MAX; self.out.len()];
        let mut vertices = Vec::new();
        let tris: Vec<[u32; 3]> = self
            .tris
            .iter()
            .zip(&self.alive)
            .filter(|(_, &a)| a)
            .map(|(t, _)| *t)
            .collect();
        let mut used = vec![false; self.out.len()];
        for t in &tris {
            for &i in t {
                used[i as usize] = true;
            }
        }
        for (i, u) in used.iter().enumerate() {
            if *u {
                map[i] = vertices.len() as u32;
                vertices.push(self.out[i]);
            }
        }
        TriangleMesh {
            vertices,
            triangles: tris.iter().map(|t| t.map(|i| map[i as usize])).collect(),
            material,
        }
    }
}

/// Decimates `mesh` to at most `target` triangles by greedy quadric-error
/// edge collapse. Returns the mesh unchanged when it is already small enough.
pub fn simplify(mesh: &TriangleMesh, target: usize) -> Result<TriangleMesh, MeshError> {
    if target < MIN_TARGET {
        return Err(MeshError::TargetTooSmall(target));
    }
    if target >= mesh.triangle_count() {
        return Ok(mesh.clone());
    }
    let report = validate(mesh);
    if report.has_fatal() {
        return Err(MeshError::Invalid(format!(
            "{} fatal defects",
            report.count(|_| true)
        )));
    }
    let mut clean = mesh.clone();
    remove_degenerate(&mut clean);
    if target >= clean.triangle_count() {
        return Ok(clean);
    }
    let mut dec = Decimator::new(&clean);
    // the centroid used by the decimator is that of the welded vertices
    let welded_origin = {
        let n = dec.out.len().max(1) as f64;
        dec.out.iter().fold(Vec3::zeros(), |s, v| s + vec3_f32(*v)) / n
    };
    let mut heap = BinaryHeap::new();
    let mut edges: Vec<(u32, u32)> = dec
        .tris
        .iter()
        .flat_map(|t| [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])])
        .map(|(u, v)| (u.min(v), u.max(v)))
        .collect();
    edges.sort_unstable();
    edges.dedup();
    for (u, v) in edges {
        heap.push(Reverse(dec.candidate(u, v)));
    }
    while dec.live > target {
        let Some(Reverse(c)) = heap.pop() else {
            return Err(MeshError::SimplifyStalled {
                reached: dec.live,
                target,
            });
        };
        if !dec.is_current(&c) || !dec.acceptable(&c) {
            continue;
        }
        dec.collapse(&c, &welded_origin);
        let a = c.a;
        for n in dec.neighbours(a) {
            heap.push(Reverse(dec.candidate(a, n)));
        }
    }
    Ok(dec.finish(clean.material.clone()))
}
