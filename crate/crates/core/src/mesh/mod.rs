//! Triangle meshes, validation, quadric simplification and BVH ray queries.

mod bvh;
pub mod shapes;
mod simplify;
mod validate;

pub use bvh::{build_bvh, Aabb, Bvh, MeshInstance, RayHit, WorldTriangle, SELF_INTERSECTION_EPS};
pub use simplify::simplify;
pub use validate::{remove_degenerate, validate, Defect, ValidationReport, DEGENERATE_AREA};

use thiserror::Error;

use crate::math::{vec3_f32, Vec3};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("simplification target {0} is below the 4-triangle minimum")]
    TargetTooSmall(usize),
    #[error("mesh is invalid: {0}")]
    Invalid(String),
    #[error("simplification stalled at {reached} triangles (target {target})")]
    SimplifyStalled { reached: usize, target: usize },
    #[error("ray direction is not unit length (norm {0})")]
    NonUnitDirection(f64),
}

/// Metric triangle geometry with a single surface material.
///
/// Positions are stored as `f32`, matching the on-disk representation;
/// geometric computations promote to `f64`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<[f32; 3]>,
    pub triangles: Vec<[u32; 3]>,
    pub material: Option<String>,
}

impl TriangleMesh {
    pub fn new(vertices: Vec<[f32; 3]>, triangles: Vec<[u32; 3]>) -> Self {
        Self {
            vertices,
            triangles,
            material: None,
        }
    }

    pub fn with_material(mut self, material: impl Into<String>) -> Self {
        self.material = Some(material.into());
        self
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn vertex(&self, i: u32) -> Vec3 {
        vec3_f32(self.vertices[i as usize])
    }

    pub fn corners(&self, t: usize) -> [Vec3; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertex(a), self.vertex(b), self.vertex(c)]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.corners(t);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    pub fn bounds(&self) -> Option<Aabb> {
        let mut it = self.vertices.iter().map(|v| vec3_f32(*v));
        let first = it.next()?;
        let mut b = Aabb::point(first);
        for p in it {
            b.grow(&p);
        }
        Some(b)
    }

    /// Mean of all vertex positions.
    pub fn vertex_centroid(&self) -> Option<Vec3> {
        if self.vertices.is_empty() {
            return None;
        }
        let sum = self
            .vertices
            .iter()
            .fold(Vec3::zeros(), |acc, v| acc + vec3_f32(*v));
        Some(sum / self.vertices.len() as f64)
    }
}
