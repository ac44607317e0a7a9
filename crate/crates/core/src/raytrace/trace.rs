use std::collections::BTreeSet;

use rayon::prelude::*;

use super::amplitude::{diffraction_matrix, project, reflection_matrix, Dyadic};
use super::fibonacci::fibonacci_directions;
use super::geometry::TraceScene;
use super::utd::{diffraction_coefficients, WedgeGeometry};
use super::{Interaction, PropagationPath, RtConfig, RtError, SPEED_OF_LIGHT};
use crate::math::{direction_angles, vec3, Vec3};
use crate::mesh::SELF_INTERSECTION_EPS;
use crate::scene::RadioDevice;

/// Candidate reflection sequences, as plane ids in propagation order.
pub type CandidateSet = BTreeSet<Vec<u32>>;

const BARY_TOL: f64 = 1e-9;

pub(crate) fn reflect(d: &Vec3, n: &Vec3) -> Vec3 {
    (d - n * (2.0 * d.dot(n))).normalize()
}

/// Follows one launched ray through up to `max_reflections` bounces,
/// calling `visit(origin, dir, seg_len, unfolded_before, sequence)` for
/// every segment after the first reflection. `seg_len` is infinite for a
/// ray leaving the scene.
pub(crate) fn shoot(
    ts: &TraceScene,
    source: &Vec3,
    dir: Vec3,
    max_reflections: u32,
    mut visit: impl FnMut(&Vec3, &Vec3, f64, f64, &[u32]),
) {
    let mut origin = *source;
    let mut dir = dir;
    let mut unfolded = 0.0;
    let mut seq: Vec<u32> = Vec::new();
    loop {
        let hit = ts
            .bvh
            .nearest(&origin, &dir, SELF_INTERSECTION_EPS, f64::INFINITY)
            .ok()
            .flatten();
        let seg = hit.as_ref().map_or(f64::INFINITY, |h| h.t);
        if !seq.is_empty() {
            visit(&origin, &dir, seg, unfolded, &seq);
        }
        let Some(hit) = hit else { break };
        if seq.len() as u32 >= max_reflections {
            break;
        }
        seq.push(ts.plane_of[hit.triangle as usize]);
        origin += dir * hit.t;
        unfolded += hit.t;
        dir = reflect(&dir, &hit.normal);
    }
}

/// Reflection sequences whose ray tubes, launched from `source`, pass
/// within the capture radius of `target`.
pub fn discover_sequences(ts: &TraceScene, source: &Vec3, target: &Vec3, cfg: &RtConfig) -> CandidateSet {
    if cfg.max_reflections == 0 || ts.bvh.is_empty() {
        return CandidateSet::new();
    }
    let dirs = fibonacci_directions(cfg.n_launch_rays);
    dirs.par_iter()
        .fold(CandidateSet::new, |mut set, d| {
            shoot(ts, source, *d, cfg.max_reflections, |o, dir, seg, unfolded, seq| {
                let w = target - o;
                let tau = w.dot(dir).clamp(0.0, seg);
                if (w - dir * tau).norm() <= cfg.capture_at(unfolded + tau) {
                    set.insert(seq.to_vec());
                }
            });
            set
        })
        .reduce(CandidateSet::new, |mut a, b| {
            a.extend(b);
            a
        })
}

/// All paths between `a` and `b`: line of sight, specular paths found by
/// shooting from both ends, and single-edge diffraction.
pub fn trace_between(ts: &TraceScene, a: [f64; 3], b: [f64; 3], cfg: &RtConfig) -> Result<Vec<PropagationPath>, RtError> {
    cfg.validate()?;
    let (pa, pb) = (vec3(a), vec3(b));
    let mut seqs = discover_sequences(ts, &pa, &pb, cfg);
    for mut s in discover_sequences(ts, &pb, &pa, cfg) {
        s.reverse();
        seqs.insert(s);
    }
    Ok(paths_for_candidates(ts, &pa, &pb, &seqs, cfg))
}

/// Paths from a transmitter to a receive point.
pub fn trace_paths(ts: &TraceScene, tx: &RadioDevice, rx: [f64; 3], cfg: &RtConfig) -> Result<Vec<PropagationPath>, RtError> {
    trace_between(ts, tx.position, rx, cfg)
}

/// Solves and validates every candidate sequence, adds line of sight and
/// diffraction, and returns the paths in canonical order.
pub fn paths_for_candidates(
    ts: &TraceScene,
    source: &Vec3,
    target: &Vec3,
    candidates: &CandidateSet,
    cfg: &RtConfig,
) -> Vec<PropagationPath> {
    let mut out = Vec::new();
    if let Some(p) = line_of_sight(ts, source, target) {
        out.push(p);
    }
    for seq in candidates {
        if seq.len() as u32 <= cfg.max_reflections {
            if let Some(p) = solve_reflections(ts, source, target, seq) {
                out.push(p);
            }
        }
    }
    if cfg.enable_diffraction {
        for e in 0..ts.edges.len() {
            if let Some(p) = diffraction_path(ts, source, target, e as u32) {
                out.push(p);
            }
        }
    }
    out.sort_by(PropagationPath::order);
    out
}

fn segment_clear(ts: &TraceScene, a: &Vec3, b: &Vec3, skip: &[u32]) -> bool {
    let d = b - a;
    let len = d.norm();
    if len <= 2.0 * SELF_INTERSECTION_EPS {
        return true;
    }
    let dir = d / len;
    !ts.bvh
        .occluded(a, &dir, SELF_INTERSECTION_EPS, len - SELF_INTERSECTION_EPS, skip)
        .unwrap_or(true)
}

fn build_path(
    interactions: Vec<Interaction>,
    points: Vec<Vec3>,
    m: Dyadic,
    spreading: f64,
) -> PropagationPath {
    let length: f64 = points.windows(2).map(|w| (w[1] - w[0]).norm()).sum();
    let n = points.len();
    let k_dep = (points[1] - points[0]).normalize();
    let k_arr = (points[n - 1] - points[n - 2]).normalize();
    PropagationPath {
        interactions,
        vertices: points.iter().map(|p| [p.x, p.y, p.z]).collect(),
        length,
        delay_s: length / SPEED_OF_LIGHT,
        amplitude: project(&m, &k_dep, &k_arr, spreading),
        departure: direction_angles(&k_dep),
        arrival: direction_angles(&-k_arr),
    }
}

fn line_of_sight(ts: &TraceScene, a: &Vec3, b: &Vec3) -> Option<PropagationPath> {
    let d = (b - a).norm();
    if d <= 0.0 || !segment_clear(ts, a, b, &[]) {
        return None;
    }
    let spreading = ts.wavelength() / (4.0 * std::f64::consts::PI * d);
    Some(build_path(Vec::new(), vec![*a, *b], Dyadic::identity(), spreading))
}

/// Lowest-id triangle of the plane containing `q`.
fn containing_triangle(ts: &TraceScene, plane: u32, q: &Vec3) -> Option<u32> {
    ts.planes[plane as usize].triangles.iter().copied().find(|&id| {
        let t = ts.bvh.triangle(id);
        let (e1, e2, w) = (t.v[1] - t.v[0], t.v[2] - t.v[0], q - t.v[0]);
        let (d11, d12, d22) = (e1.dot(&e1), e1.dot(&e2), e2.dot(&e2));
        let (w1, w2) = (w.dot(&e1), w.dot(&e2));
        let den = d11 * d22 - d12 * d12;
        if den <= 0.0 {
            return false;
        }
        let u = (d22 * w1 - d12 * w2) / den;
        let v = (d11 * w2 - d12 * w1) / den;
        u >= -BARY_TOL && v >= -BARY_TOL && u + v <= 1.0 + BARY_TOL
    })
}

/// Image-method solution of a reflection sequence, validated for
/// containment and occlusion.
fn solve_reflections(ts: &TraceScene, source: &Vec3, target: &Vec3, seq: &[u32]) -> Option<PropagationPath> {
    if seq.is_empty() || seq.windows(2).any(|w| w[0] == w[1]) {
        return None;
    }
    let k = seq.len();
    let mut images = Vec::with_capacity(k + 1);
    images.push(*source);
    for &p in seq {
        let img = ts.planes[p as usize].mirror(images.last().unwrap());
        images.push(img);
    }
    let mut points = vec![Vec3::zeros(); k + 2];
    points[0] = *source;
    points[k + 1] = *target;
    let mut tris = vec![0u32; k];
    let mut next = *target;
    for i in (0..k).rev() {
        let plane = &ts.planes[seq[i] as usize];
        let img = images[i + 1];
        let (dn, di) = (plane.signed_distance(&next), plane.signed_distance(&img));
        if !(dn * di < 0.0) {
            return None;
        }
        let q = next + (img - next) * (dn / (dn - di));
        tris[i] = containing_triangle(ts, seq[i], &q)?;
        points[i + 1] = q;
        next = q;
    }
    if (points[1] - points[0]).norm() < SELF_INTERSECTION_EPS {
        return None;
    }
    if !points.windows(2).all(|w| segment_clear(ts, &w[0], &w[1], &[])) {
        return None;
    }
    let mut m = Dyadic::identity();
    for i in 0..k {
        let plane = &ts.planes[seq[i] as usize];
        let k_in = (points[i + 1] - points[i]).normalize();
        let k_out = (points[i + 2] - points[i + 1]).normalize();
        let r = reflection_matrix(&k_in, &k_out, &plane.normal, ts.eta[plane.material as usize]);
        m = r * m;
    }
    let unfolded = (images[k] - target).norm();
    let spreading = ts.wavelength() / (4.0 * std::f64::consts::PI * unfolded);
    let interactions = seq
        .iter()
        .zip(&tris)
        .map(|(&plane, &triangle)| Interaction::Reflection { triangle, plane })
        .collect();
    Some(build_path(interactions, points, m, spreading))
}

fn diffraction_path(ts: &TraceScene, source: &Vec3, target: &Vec3, edge: u32) -> Option<PropagationPath> {
    let e = &ts.edges[edge as usize];
    if !(e.is_silhouette_for(source) || e.is_silhouette_for(target)) {
        return None;
    }
    let len = e.length();
    let ed = e.direction();
    let (ws, wt) = (source - e.a, target - e.a);
    let (t1, t2) = (ws.dot(&ed), wt.dot(&ed));
    let (r1, r2) = ((ws - ed * t1).norm(), (wt - ed * t2).norm());
    if r1 + r2 <= 1e-12 {
        return None;
    }
    let t = t1 + (t2 - t1) * r1 / (r1 + r2);
    let tol = 1e-9 * len.max(1.0);
    if !(t > tol && t < len - tol) {
        return None;
    }
    let q = e.a + ed * t;
    let wedge = e.n * std::f64::consts::PI;
    let (phi_i, phi_d) = (e.angle_of(source), e.angle_of(target));
    let inside = |phi: f64| !(phi > 1e-12 && phi < wedge - 1e-12);
    if inside(phi_i) || inside(phi_d) {
        return None;
    }
    if !segment_clear(ts, source, &q, &e.faces) || !segment_clear(ts, &q, target, &e.faces) {
        return None;
    }
    let (s_i, s_d) = ((q - source).norm(), (target - q).norm());
    if s_i < SELF_INTERSECTION_EPS || s_d < SELF_INTERSECTION_EPS {
        return None;
    }
    let (k_in, k_out) = ((q - source) / s_i, (target - q) / s_d);
    let beta0 = k_in.dot(&ed).clamp(-1.0, 1.0).acos();
    let g = WedgeGeometry {
        n: e.n,
        phi_i,
        phi_d,
        beta0,
        s_i,
        s_d,
    };
    let (ds, dh) = diffraction_coefficients(&g, ts.wavenumber(), ts.eta[e.material as usize]);
    let m = diffraction_matrix(&k_in, &k_out, &ed, ds, dh);
    let spreading = ts.wavelength() / (4.0 * std::f64::consts::PI * (s_i * s_d * (s_i + s_d)).sqrt());
    Some(build_path(vec![Interaction::Diffraction { edge }], vec![*source, q, *target], m, spreading))
}
