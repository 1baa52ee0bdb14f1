//! Evaluation metrics: voxel IoU, Chamfer distance and viewpoint coverage.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::camera::ViewRig;
use crate::error::{Error, Result};
use crate::grid::Mvpc;
use crate::kdtree::KdTree;
use crate::mesh::TriangleMesh;
use crate::raycast::{ParallelRayIndex, GRAZING_EPS};
use crate::Point3;

/// Default voxel resolution for IoU.
pub const DEFAULT_VOXEL_RESOLUTION: usize = 32;
/// Offset of coverage ray origins along the ray, in world units.
pub const COVERAGE_RAY_OFFSET: f64 = 1e-6;

/// Occupancy over `[-1, 1]³`; cell `(i, j, k)` is the half-open box starting
/// at `-1 + 2i/R` on each axis. Storage is x-fastest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoxelGrid {
    resolution: usize,
    occupancy: Vec<bool>,
}

impl VoxelGrid {
    pub fn empty(resolution: usize) -> Self {
        Self {
            resolution,
            occupancy: vec![false; resolution.pow(3)],
        }
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn occupancy(&self) -> &[bool] {
        &self.occupancy
    }

    pub fn is_occupied(&self, i: usize, j: usize, k: usize) -> bool {
        self.occupancy[i + self.resolution * (j + self.resolution * k)]
    }

    pub fn occupied_count(&self) -> usize {
        self.occupancy.iter().filter(|&&b| b).count()
    }

    /// Cell containing `p`, or `None` outside the domain.
    pub fn cell_of(&self, p: &Point3) -> Option<(usize, usize, usize)> {
        let r = self.resolution as f64;
        let mut idx = [0usize; 3];
        for axis in 0..3 {
            let c = p[axis];
            if !(-1.0..1.0).contains(&c) {
                return None;
            }
            let cell = ((c + 1.0) * 0.5 * r).floor();
            // Rounding can push values just below 1 onto R.
            idx[axis] = (cell as usize).min(self.resolution - 1);
        }
        Some((idx[0], idx[1], idx[2]))
    }

    pub fn insert(&mut self, p: &Point3) -> bool {
        match self.cell_of(p) {
            Some((i, j, k)) => {
                let r = self.resolution;
                self.occupancy[i + r * (j + r * k)] = true;
                true
            }
            None => false,
        }
    }
}

/// Marks every cell containing at least one point; points outside the
/// domain are ignored. `resolution` is raised to at least one.
pub fn voxelize(points: &[Point3], resolution: usize) -> VoxelGrid {
    let mut grid = VoxelGrid::empty(resolution.max(1));
    for p in points {
        grid.insert(p);
    }
    grid
}

/// `|a ∧ b| / |a ∨ b|`, with two empty grids scoring 1.
pub fn voxel_iou(a: &VoxelGrid, b: &VoxelGrid) -> Result<f64> {
    if a.resolution != b.resolution {
        return Err(Error::ResolutionMismatch(a.resolution, b.resolution));
    }
    let (mut inter, mut union) = (0usize, 0usize);
    for (&x, &y) in a.occupancy.iter().zip(&b.occupancy) {
        inter += (x && y) as usize;
        union += (x || y) as usize;
    }
    if union == 0 {
        return Ok(1.0);
    }
    Ok(inter as f64 / union as f64)
}

fn mean_nearest_distance(from: &[Point3], to: &[Point3]) -> f64 {
    let tree = KdTree::new(to);
    let dists: Vec<f64> = from
        .par_iter()
        .map(|p| tree.nearest(p).map(|(_, d2)| d2.sqrt()).unwrap_or(f64::INFINITY))
        .collect();
    dists.iter().sum::<f64>() / from.len() as f64
}

/// Symmetric Chamfer distance with per-point means:
/// `mean_p min_q |p - q| + mean_q min_p |p - q|`.
pub fn chamfer(p: &[Point3], q: &[Point3]) -> Result<f64> {
    if p.is_empty() || q.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    Ok(mean_nearest_distance(p, q) + mean_nearest_distance(q, p))
}

/// Points whose visibility reaches `vis_threshold`, view by view.
pub fn mvpc_to_points(m: &Mvpc, vis_threshold: f64) -> Vec<Point3> {
    m.views
        .iter()
        .flat_map(|v| {
            v.points
                .iter()
                .zip(&v.visibility)
                .filter(move |(_, &vis)| vis >= vis_threshold)
                .map(|(p, _)| *p)
        })
        .collect()
}

/// A surface sample and the triangle it lies on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceSample {
    pub point: Point3,
    pub triangle: usize,
}

/// Area-weighted uniform samples on the mesh surface.
pub fn sample_surface(mesh: &TriangleMesh, count: usize, seed: u64) -> Result<Vec<SurfaceSample>> {
    if mesh.is_empty() {
        return Err(Error::EmptyMesh);
    }
    let mut cdf = Vec::with_capacity(mesh.triangles.len());
    let mut total = 0.0;
    for t in 0..mesh.triangles.len() {
        total += mesh.area(t);
        cdf.push(total);
    }
    if !(total > 0.0) {
        return Err(Error::DegenerateMesh);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let target = rng.random::<f64>() * total;
        let t = cdf.partition_point(|&c| c <= target).min(cdf.len() - 1);
        let (r1, r2): (f64, f64) = (rng.random(), rng.random());
        let s = r1.sqrt();
        let [a, b, c] = mesh.corners(t);
        let point = a * (1.0 - s) + b * (s * (1.0 - r2)) + c * (s * r2);
        out.push(SurfaceSample { point, triangle: t });
    }
    Ok(out)
}

/// Fraction of surface samples visible from at least one rig camera. A
/// sample is visible from a camera when the ray toward that camera leaves
/// the mesh without hitting another triangle and its own triangle is not
/// seen edge-on.
pub fn coverage(mesh: &TriangleMesh, rig: &ViewRig, samples: usize, seed: u64) -> Result<f64> {
    let points = sample_surface(mesh, samples, seed)?;
    Ok(coverage_of_samples(mesh, rig, &points))
}

pub fn coverage_of_samples(mesh: &TriangleMesh, rig: &ViewRig, samples: &[SurfaceSample]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let indices: Vec<ParallelRayIndex> = rig
        .cameras()
        .iter()
        .map(|c| ParallelRayIndex::new(mesh, -c.view_dir()))
        .collect();
    let covered: Vec<bool> = samples
        .par_iter()
        .map(|s| {
            let n = mesh.area_normal(s.triangle).normalize();
            indices.iter().any(|index| {
                let dir = index.direction();
                if n.dot(&dir).abs() < GRAZING_EPS {
                    return false;
                }
                let origin = s.point + dir * COVERAGE_RAY_OFFSET;
                !index.occluded(&origin, 0.0, Some(s.triangle))
            })
        })
        .collect();
    covered.iter().filter(|&&c| c).count() as f64 / samples.len() as f64
}
