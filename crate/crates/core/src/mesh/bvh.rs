//! Binned-SAH bounding volume hierarchy over world-space triangles.

use super::{MeshError, TriangleMesh};
use crate::math::Vec3;

/// Minimum ray parameter accepted as a hit (m), guarding against re-hitting
/// the surface a ray was launched from.
pub const SELF_INTERSECTION_EPS: f64 = 1e-4;

const LEAF_SIZE: usize = 4;
const SAH_BINS: usize = 16;
const BOX_PAD: f64 = 1e-7;
const UNIT_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn empty() -> Self {
        Self {
            min: Vec3::repeat(f64::INFINITY),
            max: Vec3::repeat(f64::NEG_INFINITY),
        }
    }

    pub fn point(p: Vec3) -> Self {
        Self { min: p, max: p }
    }

    pub fn grow(&mut self, p: &Vec3) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }

    pub fn union(&self, o: &Aabb) -> Aabb {
        Aabb {
            min: self.min.inf(&o.min),
            max: self.max.sup(&o.max),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.min.x > self.max.x
    }

    pub fn extent(&self) -> Vec3 {
        self.max - self.min
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    pub fn surface_area(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let e = self.extent();
        2.0 * (e.x * e.y + e.y * e.z + e.z * e.x)
    }

    pub fn contains(&self, o: &Aabb) -> bool {
        (0..3).all(|k| self.min[k] <= o.min[k] && o.max[k] <= self.max[k])
    }

    fn padded(mut self) -> Self {
        self.min -= Vec3::repeat(BOX_PAD);
        self.max += Vec3::repeat(BOX_PAD);
        self
    }

    /// Slab test; returns the entry parameter when the ray overlaps
    /// `[t_min, t_max]` inside the box.
    fn hit(&self, origin: &Vec3, inv_dir: &Vec3, t_min: f64, t_max: f64) -> Option<f64> {
        let mut t0 = t_min;
        let mut t1 = t_max;
        for k in 0..3 {
            let a = (self.min[k] - origin[k]) * inv_dir[k];
            let b = (self.max[k] - origin[k]) * inv_dir[k];
            // f64::min/max discard a NaN operand (0 * inf on a slab face)
            t0 = t0.max(a.min(b));
            t1 = t1.min(a.max(b));
        }
        (t0 <= t1).then_some(t0)
    }
}

/// A mesh placed in the world by translation, carrying a material index.
#[derive(Clone, Copy, Debug)]
pub struct MeshInstance<'a> {
    pub mesh: &'a TriangleMesh,
    pub translation: Vec3,
    pub material: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WorldTriangle {
    pub v: [Vec3; 3],
    /// Unit normal from the winding order.
    pub normal: Vec3,
    pub material: u32,
    pub instance: u32,
    /// Index of the triangle within its instance mesh.
    pub local: u32,
}

impl WorldTriangle {
    pub fn centroid(&self) -> Vec3 {
        (self.v[0] + self.v[1] + self.v[2]) / 3.0
    }

    pub fn area(&self) -> f64 {
        0.5 * (self.v[1] - self.v[0]).cross(&(self.v[2] - self.v[0])).norm()
    }

    /// Möller–Trumbore, two-sided. Returns (t, u, v).
    pub fn intersect(&self, origin: &Vec3, dir: &Vec3) -> Option<(f64, f64, f64)> {
        let e1 = self.v[1] - self.v[0];
        let e2 = self.v[2] - self.v[0];
        let p = dir.cross(&e2);
        let det = e1.dot(&p);
        if det.abs() <= 1e-14 * e1.norm() * e2.norm() {
            return None;
        }
        let inv = 1.0 / det;
        let s = origin - self.v[0];
        let u = s.dot(&p) * inv;
        if !(0.0..=1.0).contains(&u) {
            return None;
        }
        let q = s.cross(&e1);
        let v = dir.dot(&q) * inv;
        if v < 0.0 || u + v > 1.0 {
            return None;
        }
        Some((e2.dot(&q) * inv, u, v))
    }

    fn bounds(&self) -> Aabb {
        let mut b = Aabb::point(self.v[0]);
        b.grow(&self.v[1]);
        b.grow(&self.v[2]);
        b
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RayHit {
    pub t: f64,
    pub triangle: u32,
    /// Geometric unit normal, oriented against the incoming ray.
    pub normal: Vec3,
    /// True when the ray struck the side the winding normal points to.
    pub front_face: bool,
    pub material: u32,
    pub instance: u32,
    /// Barycentric coordinates of the hit point for vertices 1 and 2.
    pub barycentric: [f64; 2],
}

#[derive(Clone, Debug, PartialEq)]
enum Node {
    Leaf { bounds: Aabb, start: u32, count: u32 },
    Inner { bounds: Aabb, left: u32, right: u32 },
}

impl Node {
    fn bounds(&self) -> &Aabb {
        match self {
            Node::Leaf { bounds, .. } | Node::Inner { bounds, .. } => bounds,
        }
    }
}

/// Immutable acceleration structure. Triangle ids are positions in the
/// instance-major input order and do not depend on the tree layout.
#[derive(Clone, Debug, Default)]
pub struct Bvh {
    triangles: Vec<WorldTriangle>,
    nodes: Vec<Node>,
    order: Vec<u32>,
}

pub fn build_bvh(instances: &[MeshInstance<'_>]) -> Bvh {
    let mut triangles = Vec::new();
    for (k, inst) in instances.iter().enumerate() {
        for t in 0..inst.mesh.triangle_count() {
            let v = inst.mesh.corners(t).map(|p| p + inst.translation);
            let n = (v[1] - v[0]).cross(&(v[2] - v[0]));
            let normal = if n.norm() > 0.0 { n.normalize() } else { Vec3::z() };
            triangles.push(WorldTriangle {
                v,
                normal,
                material: inst.material,
                instance: k as u32,
                local: t as u32,
            });
        }
    }
    Bvh::from_triangles(triangles)
}

struct Builder<'a> {
    bounds: Vec<Aabb>,
    centroids: Vec<Vec3>,
    nodes: &'a mut Vec<Node>,
}

impl Builder<'_> {
    fn range_bounds(&self, ids: &[u32]) -> (Aabb, Aabb) {
        let mut b = Aabb::empty();
        let mut c = Aabb::empty();
        for &i in ids {
            b = b.union(&self.bounds[i as usize]);
            c.grow(&self.centroids[i as usize]);
        }
        (b.padded(), c)
    }

    /// Returns the number of ids that go left after partitioning in place.
    fn split(&self, ids: &mut [u32], cb: &Aabb) -> usize {
        let ext = cb.extent();
        let mut best: Option<(f64, usize, usize)> = None;
        for axis in 0..3 {
            if ext[axis] <= 0.0 {
                continue;
            }
            let mut bin_box = [Aabb::empty(); SAH_BINS];
            let mut bin_n = [0usize; SAH_BINS];
            for &i in ids.iter() {
                let b = self.bin(i, axis, cb);
                bin_box[b] = bin_box[b].union(&self.bounds[i as usize]);
                bin_n[b] += 1;
            }
            let mut right_area = [0.0; SAH_BINS];
            let mut right_n = [0usize; SAH_BINS];
            let mut acc = Aabb::empty();
            let mut n = 0;
            for k in (1..SAH_BINS).rev() {
                acc = acc.union(&bin_box[k]);
                n += bin_n[k];
                right_area[k] = acc.surface_area();
                right_n[k] = n;
            }
            let mut acc = Aabb::empty();
            let mut n = 0;
            for k in 1..SAH_BINS {
                acc = acc.union(&bin_box[k - 1]);
                n += bin_n[k - 1];
                if n == 0 || right_n[k] == 0 {
                    continue;
                }
                let cost = acc.surface_area() * n as f64 + right_area[k] * right_n[k] as f64;
                if best.map_or(true, |(c, _, _)| cost < c) {
                    best = Some((cost, axis, k));
                }
            }
        }
        if let Some((_, axis, k)) = best {
            let mut left = 0;
            for j in 0..ids.len() {
                if self.bin(ids[j], axis, cb) < k {
                    ids.swap(left, j);
                    left += 1;
                }
            }
            // stable within halves for determinism
            ids[..left].sort_unstable();
            ids[left..].sort_unstable();
            return left;
        }
        // all centroids coincide on every axis: split by id
        ids.sort_unstable();
        ids.len() / 2
    }

    fn bin(&self, i: u32, axis: usize, cb: &Aabb) -> usize {
        let ext = cb.extent()[axis];
        let f = (self.centroids[i as usize][axis] - cb.min[axis]) / ext;
        ((f * SAH_BINS as f64) as usize).min(SAH_BINS - 1)
    }

    fn build(&mut self, ids: &mut [u32], offset: usize) -> u32 {
        let (bounds, cb) = self.range_bounds(ids);
        let index = self.nodes.len() as u32;
        if ids.len() <= LEAF_SIZE {
            self.nodes.push(Node::Leaf {
                bounds,
                start: offset as u32,
                count: ids.len() as u32,
            });
            return index;
        }
        self.nodes.push(Node::Leaf {
            bounds,
            start: 0,
            count: 0,
        });
        let mid = self.split(ids, &cb);
        let (l, r) = ids.split_at_mut(mid);
        let left = self.build(l, offset);
        let right = self.build(r, offset + mid);
        self.nodes[index as usize] = Node::Inner {
            bounds,
            left,
            right,
        };
        index
    }
}

impl Bvh {
    pub fn from_triangles(triangles: Vec<WorldTriangle>) -> Self {
        let mut order: Vec<u32> = (0..triangles.len() as u32).collect();
        let mut nodes = Vec::new();
        if !triangles.is_empty() {
            let mut b = Builder {
                bounds: triangles.iter().map(WorldTriangle::bounds).collect(),
                centroids: triangles.iter().map(WorldTriangle::centroid).collect(),
                nodes: &mut nodes,
            };
            b.build(&mut order, 0);
        }
        Self {
            triangles,
            nodes,
            order,
        }
    }

    pub fn len(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn triangles(&self) -> &[WorldTriangle] {
        &self.triangles
    }

    pub fn triangle(&self, id: u32) -> &WorldTriangle {
        &self.triangles[id as usize]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }

    pub fn bounds(&self) -> Option<Aabb> {
        self.nodes.first().map(|n| *n.bounds())
    }

    /// Checks the structural invariants: child boxes lie inside their
    /// parent, every triangle sits in exactly one leaf, leaves hold at most
    /// four triangles and contain their triangles' boxes.
    pub fn check_invariants(&self) -> bool {
        if self.nodes.is_empty() {
            return self.triangles.is_empty();
        }
        let mut seen = vec![0u32; self.triangles.len()];
        let mut stack = vec![0u32];
        while let Some(i) = stack.pop() {
            match &self.nodes[i as usize] {
                Node::Inner {
                    bounds,
                    left,
                    right,
                } => {
                    for c in [left, right] {
                        if !bounds.contains(self.nodes[*c as usize].bounds()) {
                            return false;
                        }
                        stack.push(*c);
                    }
                }
                Node::Leaf {
                    bounds,
                    start,
                    count,
                } => {
                    if *count as usize > LEAF_SIZE {
                        return false;
                    }
                    for &id in &self.order[*start as usize..(*start + *count) as usize] {
                        if !bounds.contains(&self.triangles[id as usize].bounds()) {
                            return false;
                        }
                        seen[id as usize] += 1;
                    }
                }
            }
        }
        seen.iter().all(|&s| s == 1)
    }

    fn check_dir(dir: &Vec3) -> Result<(), MeshError> {
        let n = dir.norm();
        if (n - 1.0).abs() > UNIT_TOLERANCE || !n.is_finite() {
            return Err(MeshError::NonUnitDirection(n));
        }
        Ok(())
    }

    /// Nearest hit with t in (SELF_INTERSECTION_EPS, t_max).
    pub fn intersect(&self, origin: &Vec3, dir: &Vec3, t_max: f64) -> Result<Option<RayHit>, MeshError> {
        self.nearest(origin, dir, SELF_INTERSECTION_EPS, t_max)
    }

    /// Nearest hit with t in (t_min, t_max); equal distances resolve to the
    /// smaller triangle id.
    pub fn nearest(
        &self,
        origin: &Vec3,
        dir: &Vec3,
        t_min: f64,
        t_max: f64,
    ) -> Result<Option<RayHit>, MeshError> {
        Self::check_dir(dir)?;
        if self.nodes.is_empty() {
            return Ok(None);
        }
        let inv = dir.map(|c| 1.0 / c);
        let mut best: Option<(f64, u32, f64, f64)> = None;
        let mut stack = vec![0u32];
        while let Some(i) = stack.pop() {
            let limit = best.map_or(t_max, |b| b.0);
            match &self.nodes[i as usize] {
                Node::Leaf {
                    bounds,
                    start,
                    count,
                } => {
                    if bounds.hit(origin, &inv, t_min, limit).is_none() {
                        continue;
                    }
                    for &id in &self.order[*start as usize..(*start + *count) as usize] {
                        if let Some((t, u, v)) = self.triangles[id as usize].intersect(origin, dir) {
                            if t > t_min && t < t_max && better(t, id, best) {
                                best = Some((t, id, u, v));
                            }
                        }
                    }
                }
                Node::Inner { bounds, left, right } => {
                    if bounds.hit(origin, &inv, t_min, limit).is_none() {
                        continue;
                    }
                    let tl = self.nodes[*left as usize].bounds().hit(origin, &inv, t_min, limit);
                    let tr = self.nodes[*right as usize].bounds().hit(origin, &inv, t_min, limit);
                    match (tl, tr) {
                        (Some(a), Some(b)) => {
                            // push the farther child first
                            if a <= b {
                                stack.push(*right);
                                stack.push(*left);
                            } else {
                                stack.push(*left);
                                stack.push(*right);
                            }
                        }
                        (Some(_), None) => stack.push(*left),
                        (None, Some(_)) => stack.push(*right),
                        (None, None) => {}
                    }
                }
            }
        }
        Ok(best.map(|(t, id, u, v)| self.make_hit(t, id, u, v, dir)))
    }

    /// True if any triangle not listed in `skip` is hit with t in (t_min, t_max).
    pub fn occluded(
        &self,
        origin: &Vec3,
        dir: &Vec3,
        t_min: f64,
        t_max: f64,
        skip: &[u32],
    ) -> Result<bool, MeshError> {
        Self::check_dir(dir)?;
        if self.nodes.is_empty() {
            return Ok(false);
        }
        let inv = dir.map(|c| 1.0 / c);
        let mut stack = vec![0u32];
        while let Some(i) = stack.pop() {
            let node = &self.nodes[i as usize];
            if node.bounds().hit(origin, &inv, t_min, t_max).is_none() {
                continue;
            }
            match node {
                Node::Leaf { start, count, .. } => {
                    for &id in &self.order[*start as usize..(*start + *count) as usize] {
                        if skip.contains(&id) {
                            continue;
                        }
                        if let Some((t, _, _)) = self.triangles[id as usize].intersect(origin, dir) {
                            if t > t_min && t < t_max {
                                return Ok(true);
                            }
                        }
                    }
                }
                Node::Inner { left, right, .. } => {
                    stack.push(*right);
                    stack.push(*left);
                }
            }
        }
        Ok(false)
    }

    /// Linear scan over all triangles; the reference for `nearest`.
    pub fn nearest_brute_force(
        &self,
        origin: &Vec3,
        dir: &Vec3,
        t_min: f64,
        t_max: f64,
    ) -> Result<Option<RayHit>, MeshError> {
        Self::check_dir(dir)?;
        let mut best = None;
        for (id, tri) in self.triangles.iter().enumerate() {
            if let Some((t, u, v)) = tri.intersect(origin, dir) {
                if t > t_min && t < t_max && better(t, id as u32, best) {
                    best = Some((t, id as u32, u, v));
                }
            }
        }
        Ok(best.map(|(t, id, u, v)| self.make_hit(t, id, u, v, dir)))
    }

    fn make_hit(&self, t: f64, id: u32, u: f64, v: f64, dir: &Vec3) -> RayHit {
        let tri = &self.triangles[id as usize];
        let front = tri.normal.dot(dir) < 0.0;
        RayHit {
            t,
            triangle: id,
            normal: if front { tri.normal } else { -tri.normal },
            front_face: front,
            material: tri.material,
            instance: tri.instance,
            barycentric: [u, v],
        }
    }
}

fn better(t: f64, id: u32, best: Option<(f64, u32, f64, f64)>) -> bool {
    match best {
        None => true,
        Some((bt, bid, _, _)) => t < bt || (t == bt && id < bid),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::shapes::horizontal_rectangle;

    fn single(mesh: &TriangleMesh) -> Bvh {
        build_bvh(&[MeshInstance {
            mesh,
            translation: Vec3::zeros(),
            material: 0,
        }])
    }

    #[test]
    fn ray_down_onto_square() {
        let sq = horizontal_rectangle([0.0, 0.0], [0.5, 0.5], 0.0);
        let bvh = single(&sq);
        let hit = bvh
            .intersect(&Vec3::new(0.0, 0.0, 10.0), &Vec3::new(0.0, 0.0, -1.0), f64::INFINITY)
            .unwrap()
            .unwrap();
        assert_eq!(hit.t, 10.0);
        assert_eq!(hit.normal, Vec3::z());
        assert!(hit.front_face);
    }

    #[test]
    fn parallel_ray_misses() {
        let sq = horizontal_rectangle([0.0, 0.0], [0.5, 0.5], 0.0);
        let bvh = single(&sq);
        let hit = bvh
            .intersect(&Vec3::new(-5.0, 0.0, 1.0), &Vec3::x(), f64::INFINITY)
            .unwrap();
        assert!(hit.is_none());
    }

    #[test]
    fn empty_bvh_misses() {
        let bvh = build_bvh(&[]);
        assert!(bvh.is_empty());
        assert!(bvh
            .intersect(&Vec3::zeros(), &Vec3::z(), f64::INFINITY)
            .unwrap()
            .is_none());
        assert!(bvh.check_invariants());
    }

    #[test]
    fn single_triangle_single_leaf() {
        let m = TriangleMesh::new(vec![[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]], vec![[0, 1, 2]]);
        let bvh = single(&m);
        assert_eq!(bvh.node_count(), 1);
        assert_eq!(bvh.leaf_count(), 1);
    }

    #[test]
    fn non_unit_direction_rejected() {
        let bvh = build_bvh(&[]);
        assert!(matches!(
            bvh.intersect(&Vec3::zeros(), &Vec3::new(0.0, 0.0, 2.0), 1.0),
            Err(MeshError::NonUnitDirection(_))
        ));
    }

    #[test]
    fn back_face_normal_flipped() {
        let sq = horizontal_rectangle([0.0, 0.0], [0.5, 0.5], 0.0);
        let bvh = single(&sq);
        let hit = bvh
            .intersect(&Vec3::new(0.1, 0.1, -3.0), &Vec3::z(), f64::INFINITY)
            .unwrap()
            .unwrap();
        assert_eq!(hit.normal, -Vec3::z());
        assert!(!hit.front_face);
    }

    #[test]
    fn t_window_is_open() {
        let sq = horizontal_rectangle([0.0, 0.0], [0.5, 0.5], 0.0);
        let bvh = single(&sq);
        let o = Vec3::new(0.0, 0.0, 10.0);
        let d = -Vec3::z();
        assert!(bvh.intersect(&o, &d, 10.0).unwrap().is_none());
        assert!(bvh.occluded(&o, &d, 1e-4, 10.0 + 1e-9, &[]).unwrap());
        assert!(!bvh.occluded(&o, &d, 1e-4, 20.0, &[0, 1]).unwrap());
    }
}
