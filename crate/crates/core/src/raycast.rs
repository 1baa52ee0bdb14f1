//! Ray–triangle intersection and a 2D bin index for bundles of parallel rays.
//!
//! All rays cast by this crate are orthographic: they share one direction per
//! query batch. [`ParallelRayIndex`] projects the mesh onto the plane
//! orthogonal to that direction and buckets triangles into a uniform 2D grid,
//! so a ray only visits the triangles of one bucket.

use crate::mesh::TriangleMesh;
use crate::{Point3, Vec3};

/// Rays with `|dir · n̂| <` this are treated as grazing and never hit.
pub const GRAZING_EPS: f64 = 1e-9;
/// Slack on barycentric bounds so shared edges never leak rays.
const BARYCENTRIC_EPS: f64 = 1e-10;

/// Möller–Trumbore test. Returns the ray parameter `t` of the hit (which may
/// be negative); `dir` must be unit length. Grazing and degenerate triangles
/// miss.
pub fn intersect_triangle(origin: &Point3, dir: &Vec3, a: &Point3, b: &Point3, c: &Point3) -> Option<f64> {
    let e1 = b - a;
    let e2 = c - a;
    let n = e1.cross(&e2);
    let n_len = n.norm();
    if n_len == 0.0 || (dir.dot(&n) / n_len).abs() < GRAZING_EPS {
        return None;
    }
    let pvec = dir.cross(&e2);
    let det = e1.dot(&pvec);
    let inv = 1.0 / det;
    let tvec = origin - a;
    let u = tvec.dot(&pvec) * inv;
    if !(-BARYCENTRIC_EPS..=1.0 + BARYCENTRIC_EPS).contains(&u) {
        return None;
    }
    let qvec = tvec.cross(&e1);
    let v = dir.dot(&qvec) * inv;
    if v < -BARYCENTRIC_EPS || u + v > 1.0 + BARYCENTRIC_EPS {
        return None;
    }
    Some(e2.dot(&qvec) * inv)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub t: f64,
    pub triangle: usize,
}

/// Uniform 2D bucket grid over a mesh projected along one ray direction.
pub struct ParallelRayIndex<'m> {
    mesh: &'m TriangleMesh,
    dir: Vec3,
    axis_a: Vec3,
    axis_b: Vec3,
    min: [f64; 2],
    cell: [f64; 2],
    dims: [usize; 2],
    buckets: Vec<Vec<usize>>,
}

impl<'m> ParallelRayIndex<'m> {
    /// `dir` must be unit length; `axis_a`, `axis_b` complete an orthonormal frame.
    pub fn with_frame(mesh: &'m TriangleMesh, dir: Vec3, axis_a: Vec3, axis_b: Vec3) -> Self {
        let proj = |p: &Point3| [p.dot(&axis_a), p.dot(&axis_b)];
        let mut min = [f64::INFINITY; 2];
        let mut max = [f64::NEG_INFINITY; 2];
        for p in &mesh.vertices {
            let q = proj(p);
            for k in 0..2 {
                min[k] = min[k].min(q[k]);
                max[k] = max[k].max(q[k]);
            }
        }
        if mesh.vertices.is_empty() {
            min = [0.0; 2];
            max = [0.0; 2];
        }
        let side = ((mesh.triangles.len() as f64).sqrt() * 1.5).ceil().clamp(1.0, 512.0) as usize;
        let dims = [side, side];
        let mut cell = [0.0; 2];
        for k in 0..2 {
            // Pad so points on the max border still land inside.
            let span = (max[k] - min[k]).max(1e-12) * (1.0 + 1e-9);
            cell[k] = span / dims[k] as f64;
        }
        let mut index = Self {
            mesh,
            dir,
            axis_a,
            axis_b,
            min,
            cell,
            dims,
            buckets: vec![Vec::new(); dims[0] * dims[1]],
        };
        for t in 0..mesh.triangles.len() {
            let corners = mesh.corners(t).map(|p| proj(&p));
            let mut lo = [f64::INFINITY; 2];
            let mut hi = [f64::NEG_INFINITY; 2];
            for q in corners {
                for k in 0..2 {
                    lo[k] = lo[k].min(q[k]);
                    hi[k] = hi[k].max(q[k]);
                }
            }
            let pad = 1e-9;
            let (Some(a0), Some(b0)) = (index.cell_of(lo[0] - pad, 0), index.cell_of(lo[1] - pad, 1)) else {
                continue;
            };
            let (Some(a1), Some(b1)) = (index.cell_of(hi[0] + pad, 0), index.cell_of(hi[1] + pad, 1)) else {
                continue;
            };
            for bi in b0..=b1 {
                for ai in a0..=a1 {
                    index.buckets[bi * dims[0] + ai].push(t);
                }
            }
        }
        index
    }

    /// Index for rays along `dir` with an arbitrary perpendicular frame.
    pub fn new(mesh: &'m TriangleMesh, dir: Vec3) -> Self {
        let dir = dir.normalize();
        let helper = if dir.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
        let axis_a = dir.cross(&helper).normalize();
        let axis_b = dir.cross(&axis_a);
        Self::with_frame(mesh, dir, axis_a, axis_b)
    }

    pub fn direction(&self) -> Vec3 {
        self.dir
    }

    /// Cell coordinate along axis `k`, clamped into the grid; `None` when the
    /// coordinate is outside the projected bounding box by more than slack.
    fn cell_of(&self, x: f64, k: usize) -> Option<usize> {
        let rel = (x - self.min[k]) / self.cell[k];
        if !rel.is_finite() || rel < -1e-6 || rel > self.dims[k] as f64 + 1e-6 {
            return None;
        }
        Some((rel.floor().max(0.0) as usize).min(self.dims[k] - 1))
    }

    fn bucket_for(&self, origin: &Point3) -> Option<&[usize]> {
        let a = self.cell_of(origin.dot(&self.axis_a), 0)?;
        let b = self.cell_of(origin.dot(&self.axis_b), 1)?;
        Some(&self.buckets[b * self.dims[0] + a])
    }

    /// Nearest hit with `t_min < t <= t_max`, skipping `exclude`. Ties go to
    /// the smaller triangle index.
    pub fn first_hit(&self, origin: &Point3, t_min: f64, t_max: f64, exclude: Option<usize>) -> Option<Hit> {
        let bucket = self.bucket_for(origin)?;
        let mut best: Option<Hit> = None;
        for &tri in bucket {
            if Some(tri) == exclude {
                continue;
            }
            let [a, b, c] = self.mesh.corners(tri);
            if let Some(t) = intersect_triangle(origin, &self.dir, &a, &b, &c) {
                if t > t_min && t <= t_max && best.is_none_or(|h| t < h.t) {
                    best = Some(Hit { t, triangle: tri });
                }
            }
        }
        best
    }

    /// True when any triangle other than `exclude` is hit with `t > t_min`.
    pub fn occluded(&self, origin: &Point3, t_min: f64, exclude: Option<usize>) -> bool {
        let Some(bucket) = self.bucket_for(origin) else {
            return false;
        };
        bucket.iter().any(|&tri| {
            if Some(tri) == exclude {
                return false;
            }
            let [a, b, c] = self.mesh.corners(tri);
            matches!(intersect_triangle(origin, &self.dir, &a, &b, &c), Some(t) if t > t_min)
        })
    }
}
