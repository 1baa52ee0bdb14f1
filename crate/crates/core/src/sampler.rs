//! Ground-truth MVPC generation by orthographic ray casting, and overlap
//! masks between pairs of ground-truth views.

use rayon::prelude::*;

use crate::camera::{ViewCamera, ViewRig};
use crate::error::{Error, Result};
use crate::grid::{Mvpc, PointGridMap};
use crate::mesh::{triangulate, TriangleMesh};
use crate::raster::rasterize_depth;
use crate::raycast::ParallelRayIndex;
use crate::{Point3, Vec3};

/// Ray-casts one camera: nearest hit per pixel center, far point otherwise.
pub fn sample_view(mesh: &TriangleMesh, camera: &ViewCamera) -> PointGridMap {
    let index = ParallelRayIndex::with_frame(mesh, camera.view_dir(), camera.right(), camera.up());
    let (h, w) = (camera.height(), camera.width());
    let t_max = camera.far_depth() - camera.near_depth();
    let mut points = Vec::with_capacity(h * w);
    let mut visibility = Vec::with_capacity(h * w);
    for row in 0..h {
        for col in 0..w {
            let origin = camera.ray_origin(row, col);
            match index.first_hit(&origin, -1e-12, t_max, None) {
                Some(hit) => {
                    points.push(origin + camera.view_dir() * hit.t);
                    visibility.push(1.0);
                }
                None => {
                    points.push(camera.far_point_unchecked(row, col));
                    visibility.push(0.0);
                }
            }
        }
    }
    PointGridMap {
        camera: camera.clone(),
        points,
        visibility,
    }
}

/// Samples a ground-truth MVPC of `mesh` with every camera of `rig`.
/// The mesh is expected to be normalized to the unit bounding sphere.
pub fn sample_mvpc(mesh: &TriangleMesh, rig: &ViewRig) -> Result<Mvpc> {
    if mesh.is_empty() {
        return Err(Error::EmptyMesh);
    }
    mesh.validate()?;
    let half = rig.camera(0).ortho_half_width();
    if mesh.vertices.iter().any(|v| v.norm() > half * (1.0 + 1e-9)) {
        log::warn!("mesh extends beyond the orthographic window; outer parts are clipped");
    }
    let views = rig.cameras().par_iter().map(|cam| sample_view(mesh, cam)).collect();
    Mvpc::new(rig.clone(), views)
}

/// Center and radius of the axis-aligned bounding box's circumscribing
/// sphere, shrunk to the farthest vertex.
pub fn bounding_sphere(mesh: &TriangleMesh) -> Result<(Point3, f64)> {
    if mesh.is_empty() {
        return Err(Error::EmptyMesh);
    }
    let mut lo = Vec3::repeat(f64::INFINITY);
    let mut hi = Vec3::repeat(f64::NEG_INFINITY);
    for tri in &mesh.triangles {
        for &i in tri {
            lo = lo.inf(&mesh.vertices[i]);
            hi = hi.sup(&mesh.vertices[i]);
        }
    }
    let center = (lo + hi) * 0.5;
    let radius = mesh
        .triangles
        .iter()
        .flatten()
        .map(|&i| (mesh.vertices[i] - center).norm())
        .fold(0.0, f64::max);
    Ok((center, radius))
}

/// Translates the bounding-sphere center to the origin and scales the radius to one.
pub fn normalize_mesh(mesh: &TriangleMesh) -> Result<TriangleMesh> {
    mesh.validate()?;
    let (center, radius) = bounding_sphere(mesh)?;
    if !(radius > 1e-12) {
        return Err(Error::DegenerateMesh);
    }
    let mut out = mesh.clone();
    for v in &mut out.vertices {
        *v = (*v - center) / radius;
    }
    Ok(out)
}

/// Pixels of views `i` and `j` that see the same physical surface.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapMask {
    pub view_i: usize,
    pub view_j: usize,
    /// Pixels of view `i` inside the overlap, row-major.
    pub mask_i_on_i: Vec<bool>,
    /// Pixels of view `j` inside the overlap, row-major.
    pub mask_j_on_j: Vec<bool>,
}

impl OverlapMask {
    /// The same overlap with the roles of the two views exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            view_i: self.view_j,
            view_j: self.view_i,
            mask_i_on_i: self.mask_j_on_j.clone(),
            mask_j_on_j: self.mask_i_on_i.clone(),
        }
    }

    pub fn count_i(&self) -> usize {
        self.mask_i_on_i.iter().filter(|&&b| b).count()
    }

    pub fn count_j(&self) -> usize {
        self.mask_j_on_j.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.count_i() == 0 && self.count_j() == 0
    }
}

/// Default depth tolerance: four pixel pitches.
pub fn default_depth_tol(m: &Mvpc) -> f64 {
    4.0 * m.rig.camera(0).pixel_pitch()
}

/// Pixels of `target` whose own surface coincides with `source`'s
/// visibility-filtered mesh rendered into `target`.
fn project_overlap(source: &PointGridMap, target: &PointGridMap, depth_tol: f64) -> Result<Vec<bool>> {
    let mesh = triangulate(source, true)?;
    let buffer = rasterize_depth(&mesh, &target.camera);
    let own = target.depths();
    Ok((0..target.points.len())
        .map(|idx| {
            target.is_visible(idx)
                && buffer.depth[idx].is_some_and(|d| (d - own[idx]).abs() <= depth_tol)
        })
        .collect())
}

/// Overlap masks of ground-truth views `i` and `j`.
pub fn overlap_masks(gt: &Mvpc, i: usize, j: usize, depth_tol: f64) -> Result<OverlapMask> {
    let n = gt.view_count();
    for index in [i, j] {
        if index >= n {
            return Err(Error::ViewIndexOutOfRange { index, count: n });
        }
    }
    if i == j {
        return Err(Error::SameView(i));
    }
    Ok(OverlapMask {
        view_i: i,
        view_j: j,
        mask_i_on_i: project_overlap(&gt.views[j], &gt.views[i], depth_tol)?,
        mask_j_on_j: project_overlap(&gt.views[i], &gt.views[j], depth_tol)?,
    })
}

/// Masks for every ordered pair `i != j`, ordered by `(i, j)`.
pub fn all_overlap_masks(gt: &Mvpc, depth_tol: f64) -> Result<Vec<OverlapMask>> {
    let n = gt.view_count();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let unordered = pairs
        .par_iter()
        .map(|&(i, j)| overlap_masks(gt, i, j, depth_tol))
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::with_capacity(n * (n - 1));
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let (a, b) = (i.min(j), i.max(j));
            let k = pairs.iter().position(|&p| p == (a, b)).expect("pair present");
            out.push(if i < j { unordered[k].clone() } else { unordered[k].swapped() });
        }
    }
    Ok(out)
}
