//! Triangle meshes, grid triangulation and area-weighted normal maps.
//!
//! Every 2x2 block of pixels is split along the top-left/bottom-right
//! diagonal into `(TL, BL, BR)` and `(TL, BR, TR)`. With the camera pixel
//! convention this winding yields normals that face the generating camera
//! whenever the stored points project onto their own pixel centers.

use crate::error::{Error, Result};
use crate::grid::{Mvpc, PointGridMap};
use crate::{Point3, Vec3};

/// Where a mesh vertex came from on the view grids.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VertexTag {
    pub view: usize,
    pub row: usize,
    pub col: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<Point3>,
    pub triangles: Vec<[usize; 3]>,
    pub tags: Option<Vec<VertexTag>>,
}

impl TriangleMesh {
    pub fn new(vertices: Vec<Point3>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let mesh = Self {
            vertices,
            triangles,
            tags: None,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    /// Checks index ranges, repeated corners, tag length and finiteness.
    pub fn validate(&self) -> Result<()> {
        let n = self.vertices.len();
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&i| i >= n) {
                return Err(Error::InvalidMesh(format!("triangle {t} references a missing vertex")));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::InvalidMesh(format!("triangle {t} repeats a vertex")));
            }
        }
        if let Some(tags) = &self.tags {
            if tags.len() != n {
                return Err(Error::InvalidMesh("tag count differs from vertex count".into()));
            }
        }
        if self.vertices.iter().any(|v| v.iter().any(|c| !c.is_finite())) {
            return Err(Error::InvalidMesh("non-finite vertex".into()));
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn corners(&self, t: usize) -> [Point3; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Right-hand-rule normal scaled by the triangle area.
    pub fn area_normal(&self, t: usize) -> Vec3 {
        let [a, b, c] = self.corners(t);
        0.5 * (b - a).cross(&(c - a))
    }

    pub fn area(&self, t: usize) -> f64 {
        self.area_normal(t).norm()
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.area(t)).sum()
    }

    /// Appends `other`, offsetting its indices. Tags are kept only when both
    /// sides carry them.
    pub fn append(&mut self, other: &TriangleMesh) {
        let offset = self.vertices.len();
        let had_vertices = offset > 0 || !self.triangles.is_empty();
        self.tags = match (self.tags.take(), &other.tags) {
            (Some(mut mine), Some(theirs)) => {
                mine.extend_from_slice(theirs);
                Some(mine)
            }
            (None, Some(theirs)) if !had_vertices => Some(theirs.clone()),
            _ => None,
        };
        self.vertices.extend_from_slice(&other.vertices);
        self.triangles
            .extend(other.triangles.iter().map(|t| [t[0] + offset, t[1] + offset, t[2] + offset]));
    }
}

/// Per-pixel area-weighted normals of one view, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalMap {
    pub height: usize,
    pub width: usize,
    pub normals: Vec<Vec3>,
}

impl NormalMap {
    pub fn get(&self, row: usize, col: usize) -> Vec3 {
        self.normals[row * self.width + col]
    }
}

/// Pixel triples of the two triangles of the quad whose top-left is `(row, col)`.
pub fn quad_triangles(row: usize, col: usize) -> [[(usize, usize); 3]; 2] {
    let tl = (row, col);
    let tr = (row, col + 1);
    let bl = (row + 1, col);
    let br = (row + 1, col + 1);
    [[tl, bl, br], [tl, br, tr]]
}

fn check_grid_size(grid: &PointGridMap) -> Result<()> {
    if grid.height() < 2 || grid.width() < 2 {
        return Err(Error::GridTooSmall {
            height: grid.height(),
            width: grid.width(),
        });
    }
    Ok(())
}

/// Triangulates one view grid.
///
/// With `respect_visibility` a triangle is kept only if all three corners are
/// visible, and only referenced pixels become vertices. Without it every
/// pixel is a vertex (far-plane points included) and every triangle is kept.
/// Vertex tags carry view index 0; [`merge_mvpc_to_mesh`] rewrites them.
pub fn triangulate(grid: &PointGridMap, respect_visibility: bool) -> Result<TriangleMesh> {
    check_grid_size(grid)?;
    let (h, w) = (grid.height(), grid.width());
    let mut remap: Vec<Option<usize>> = vec![None; h * w];
    let mut vertices = Vec::new();
    let mut tags = Vec::new();
    let mut triangles = Vec::new();

    if !respect_visibility {
        for row in 0..h {
            for col in 0..w {
                let idx = grid.index(row, col);
                remap[idx] = Some(vertices.len());
                vertices.push(grid.points[idx]);
                tags.push(VertexTag { view: 0, row, col });
            }
        }
    }

    for row in 0..h - 1 {
        for col in 0..w - 1 {
            for tri in quad_triangles(row, col) {
                let ids = tri.map(|(r, c)| grid.index(r, c));
                if respect_visibility && !ids.iter().all(|&i| grid.is_visible(i)) {
                    continue;
                }
                let mut out = [0usize; 3];
                for (k, (&idx, &(r, c))) in ids.iter().zip(tri.iter()).enumerate() {
                    out[k] = *remap[idx].get_or_insert_with(|| {
                        vertices.push(grid.points[idx]);
                        tags.push(VertexTag { view: 0, row: r, col: c });
                        vertices.len() - 1
                    });
                }
                triangles.push(out);
            }
        }
    }

    Ok(TriangleMesh {
        vertices,
        triangles,
        tags: Some(tags),
    })
}

/// Area-weighted normal map over the full-grid mesh, fake edges included.
/// Each incident triangle contributes `|Δ| n(Δ)` with `n` turned toward the
/// camera; degenerate triangles contribute zero.
pub fn area_weighted_normals(grid: &PointGridMap) -> Result<NormalMap> {
    check_grid_size(grid)?;
    let (h, w) = (grid.height(), grid.width());
    let toward_camera = -grid.camera.view_dir();
    let mut normals = vec![Vec3::zeros(); h * w];
    for row in 0..h - 1 {
        for col in 0..w - 1 {
            for tri in quad_triangles(row, col) {
                let ids = tri.map(|(r, c)| grid.index(r, c));
                let [a, b, c] = ids.map(|i| grid.points[i]);
                let mut n = 0.5 * (b - a).cross(&(c - a));
                if n.dot(&toward_camera) < 0.0 {
                    n = -n;
                }
                for i in ids {
                    normals[i] += n;
                }
            }
        }
    }
    Ok(NormalMap {
        height: h,
        width: w,
        normals,
    })
}

/// Concatenates the visibility-filtered mesh of every view without welding.
pub fn merge_mvpc_to_mesh(m: &Mvpc) -> Result<TriangleMesh> {
    let mut merged = TriangleMesh {
        tags: Some(Vec::new()),
        ..Default::default()
    };
    for (view_idx, grid) in m.views.iter().enumerate() {
        let mut part = triangulate(grid, true)?;
        if let Some(tags) = part.tags.as_mut() {
            for tag in tags.iter_mut() {
                tag.view = view_idx;
            }
        }
        merged.append(&part);
    }
    Ok(merged)
}
