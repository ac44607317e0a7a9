use std::collections::HashMap;

use super::TriangleMesh;

/// Triangles with area below this (m²) are degenerate.
pub const DEGENERATE_AREA: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub enum Defect {
    IndexOutOfRange { triangle: usize },
    NonFiniteVertex { vertex: usize },
    Degenerate { triangle: usize, area: f64 },
    Duplicate { triangle: usize, first: usize },
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub defects: Vec<Defect>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.defects.is_empty()
    }

    /// True when the mesh cannot be used at all (bad indices or coordinates);
    /// degenerate and duplicate triangles are recoverable.
    pub fn has_fatal(&self) -> bool {
        self.defects.iter().any(|d| {
            matches!(
                d,
                Defect::IndexOutOfRange { .. } | Defect::NonFiniteVertex { .. }
            )
        })
    }

    pub fn count(&self, pred: impl Fn(&Defect) -> bool) -> usize {
        self.defects.iter().filter(|d| pred(d)).count()
    }
}

/// Flags every defect exactly once. A triangle with an out-of-range index or
/// touching a non-finite vertex is not additionally checked for area or
/// duplication.
pub fn validate(mesh: &TriangleMesh) -> ValidationReport {
    let mut defects = Vec::new();
    let n = mesh.vertices.len();
    let finite: Vec<bool> = mesh
        .vertices
        .iter()
        .map(|v| v.iter().all(|c| c.is_finite()))
        .collect();
    for (i, ok) in finite.iter().enumerate() {
        if !ok {
            defects.push(Defect::NonFiniteVertex { vertex: i });
        }
    }
    let mut seen: HashMap<[u32; 3], usize> = HashMap::new();
    for (t, tri) in mesh.triangles.iter().enumerate() {
        if tri.iter().any(|&i| i as usize >= n) {
            defects.push(Defect::IndexOutOfRange { triangle: t });
            continue;
        }
        if tri.iter().any(|&i| !finite[i as usize]) {
            continue;
        }
        let area = mesh.triangle_area(t);
        if area < DEGENERATE_AREA {
            defects.push(Defect::Degenerate { triangle: t, area });
            continue;
        }
        let mut key = *tri;
        key.sort_unstable();
        if let Some(&first) = seen.get(&key) {
            defects.push(Defect::Duplicate { triangle: t, first });
        } else {
            seen.insert(key, t);
        }
    }
    ValidationReport { defects }
}

/// Drops degenerate and duplicate triangles; returns how many were removed.
pub fn remove_degenerate(mesh: &mut TriangleMesh) -> usize {
    let report = validate(mesh);
    let mut drop = vec![false; mesh.triangles.len()];
    for d in &report.defects {
        match d {
            Defect::Degenerate { triangle, .. } | Defect::Duplicate { triangle, .. } => {
                drop[*triangle] = true
            }
            _ => {}
        }
    }
    let before = mesh.triangles.len();
    let mut idx = 0;
    mesh.triangles.retain(|_| {
        let keep = !drop[idx];
        idx += 1;
        keep
    });
    before - mesh.triangles.len()
}
