use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fibonacci::fibonacci_directions;
use super::geometry::TraceScene;
use super::trace::{shoot, CandidateSet};
use super::RtConfig;
use crate::math::Vec3;

/// Horizontal grid of receive points; cell (ix, iy) is centered at
/// (x0 + (ix + 1/2) cell, y0 + (iy + 1/2) cell, z). Cells are row-major
/// with `iy` as the row.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReceiverGrid {
    pub x0: f64,
    pub y0: f64,
    pub cell: f64,
    pub nx: usize,
    pub ny: usize,
    pub z: f64,
}

impl ReceiverGrid {
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn center(&self, index: usize) -> Vec3 {
        let (ix, iy) = (index % self.nx, index / self.nx);
        Vec3::new(
            self.x0 + (ix as f64 + 0.5) * self.cell,
            self.y0 + (iy as f64 + 0.5) * self.cell,
            self.z,
        )
    }

    fn corners(&self) -> [Vec3; 4] {
        let (x1, y1) = (self.x0 + self.nx as f64 * self.cell, self.y0 + self.ny as f64 * self.cell);
        [
            Vec3::new(self.x0, self.y0, self.z),
            Vec3::new(x1, self.y0, self.z),
            Vec3::new(x1, y1, self.z),
            Vec3::new(self.x0, y1, self.z),
        ]
    }

    /// Index range of cell centers whose coordinate lies in [lo, hi].
    fn span(lo: f64, hi: f64, origin: f64, cell: f64, n: usize) -> Option<(usize, usize)> {
        let a = ((lo - origin) / cell - 0.5).ceil().max(0.0);
        let b = ((hi - origin) / cell - 0.5).floor().min(n as f64 - 1.0);
        (a <= b).then(|| (a as usize, b as usize))
    }
}

/// Parameter interval of `o + t d` inside the slab [lo, hi] on one axis.
fn slab(o: f64, d: f64, lo: f64, hi: f64, range: (f64, f64)) -> Option<(f64, f64)> {
    let (mut a, mut b) = range;
    if d.abs() < 1e-15 {
        return (o >= lo && o <= hi).then_some(range);
    }
    let (t1, t2) = ((lo - o) / d, (hi - o) / d);
    a = a.max(t1.min(t2));
    b = b.min(t1.max(t2));
    (a <= b).then_some((a, b))
}

/// Shoots the launch fan once from `source` and assigns each captured
/// reflection sequence to every grid cell its ray tubes reach.
pub fn discover_on_grid(ts: &TraceScene, source: &Vec3, grid: &ReceiverGrid, cfg: &RtConfig) -> Vec<CandidateSet> {
    let mut sets = vec![CandidateSet::new(); grid.len()];
    if cfg.max_reflections == 0 || ts.bvh.is_empty() || grid.is_empty() {
        return sets;
    }
    let corners = grid.corners();
    let dirs = fibonacci_directions(cfg.n_launch_rays);
    let mut hits: Vec<(usize, Vec<u32>)> = dirs
        .par_iter()
        .fold(Vec::new, |mut acc, d| {
            shoot(ts, source, *d, cfg.max_reflections, |o, dir, seg, unfolded, seq| {
                let far = corners.iter().map(|c| (c - o).norm()).fold(0.0, f64::max);
                let cap = seg.min(far);
                let r = cfg.capture_at(unfolded + cap);
                let x1 = grid.x0 + grid.nx as f64 * grid.cell;
                let y1 = grid.y0 + grid.ny as f64 * grid.cell;
                let range = Some((0.0, cap))
                    .and_then(|rg| slab(o.x, dir.x, grid.x0 - r, x1 + r, rg))
                    .and_then(|rg| slab(o.y, dir.y, grid.y0 - r, y1 + r, rg))
                    .and_then(|rg| slab(o.z, dir.z, grid.z - r, grid.z + r, rg));
                let Some((ta, tb)) = range else { return };
                let (pa, pb) = (o + dir * ta, o + dir * tb);
                let Some((cx0, cx1)) = ReceiverGrid::span(pa.x.min(pb.x) - r, pa.x.max(pb.x) + r, grid.x0, grid.cell, grid.nx) else {
                    return;
                };
                for ix in cx0..=cx1 {
                    let xc = grid.x0 + (ix as f64 + 0.5) * grid.cell;
                    // part of the clipped segment within r of this column
                    let Some((sa, sb)) = slab(o.x, dir.x, xc - r, xc + r, (ta, tb)) else { continue };
                    let (ya, yb) = (o.y + dir.y * sa, o.y + dir.y * sb);
                    let Some((cy0, cy1)) = ReceiverGrid::span(ya.min(yb) - r, ya.max(yb) + r, grid.y0, grid.cell, grid.ny) else {
                        continue;
                    };
                    for iy in cy0..=cy1 {
                        let idx = iy * grid.nx + ix;
                        let c = grid.center(idx);
                        let w = c - o;
                        let tau = w.dot(dir).clamp(0.0, seg);
                        if (w - dir * tau).norm() <= cfg.capture_at(unfolded + tau) {
                            acc.push((idx, seq.to_vec()));
                        }
                    }
                }
            });
            acc
        })
        .reduce(Vec::new, |mut a, mut b| {
            a.append(&mut b);
            a
        });
    hits.sort_unstable();
    hits.dedup();
    for (idx, seq) in hits {
        sets[idx].insert(seq);
    }
    sets
}
