//! Software z-buffer rasterizer for orthographic cameras.
//!
//! Triangles are projected into pixel space and sampled at pixel centers with
//! edge functions; depth is interpolated linearly, which is exact under
//! orthographic projection. No back-face culling.

use crate::camera::ViewCamera;
use crate::mesh::TriangleMesh;

/// Relative slack on edge functions so shared edges cover every center.
const EDGE_EPS: f64 = 1e-9;

/// Nearest depth per pixel, row-major; `None` where nothing was drawn.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthBuffer {
    pub height: usize,
    pub width: usize,
    pub depth: Vec<Option<f64>>,
}

impl DepthBuffer {
    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        self.depth[row * self.width + col]
    }

    pub fn covered(&self) -> usize {
        self.depth.iter().filter(|d| d.is_some()).count()
    }
}

fn edge(ax: f64, ay: f64, bx: f64, by: f64, px: f64, py: f64) -> f64 {
    (bx - ax) * (py - ay) - (by - ay) * (px - ax)
}

/// Renders `mesh` into `camera` with a depth test keeping the nearest
/// surface. Fragments outside the clipping slab are dropped.
pub fn rasterize_depth(mesh: &TriangleMesh, camera: &ViewCamera) -> DepthBuffer {
    let (h, w) = (camera.height(), camera.width());
    let mut depth: Vec<Option<f64>> = vec![None; h * w];
    let projected: Vec<_> = mesh.vertices.iter().map(|p| camera.project(p)).collect();
    let (near, far) = (camera.near_depth(), camera.far_depth());

    for tri in &mesh.triangles {
        let [a, b, c] = tri.map(|i| projected[i]);
        let area = edge(a.u, a.v, b.u, b.v, c.u, c.v);
        if area.abs() < 1e-14 {
            continue;
        }
        let slack = EDGE_EPS * area.abs().max(1.0);
        let umin = a.u.min(b.u).min(c.u);
        let umax = a.u.max(b.u).max(c.u);
        let vmin = a.v.min(b.v).min(c.v);
        let vmax = a.v.max(b.v).max(c.v);
        // Pixel centers k + 0.5 inside [min, max].
        let col0 = ((umin - 0.5 - 1e-9).ceil().max(0.0)) as usize;
        let row0 = ((vmin - 0.5 - 1e-9).ceil().max(0.0)) as usize;
        let col1 = (umax - 0.5 + 1e-9).floor();
        let row1 = (vmax - 0.5 + 1e-9).floor();
        if col1 < 0.0 || row1 < 0.0 {
            continue;
        }
        let col1 = (col1 as usize).min(w.saturating_sub(1));
        let row1 = (row1 as usize).min(h.saturating_sub(1));
        for row in row0..=row1 {
            for col in col0..=col1 {
                let (pu, pv) = ViewCamera::pixel_center(row, col);
                let mut w0 = edge(b.u, b.v, c.u, c.v, pu, pv);
                let mut w1 = edge(c.u, c.v, a.u, a.v, pu, pv);
                let mut w2 = edge(a.u, a.v, b.u, b.v, pu, pv);
                if area < 0.0 {
                    w0 = -w0;
                    w1 = -w1;
                    w2 = -w2;
                }
                if w0 < -slack || w1 < -slack || w2 < -slack {
                    continue;
                }
                let inv = 1.0 / area.abs();
                let d = (w0 * a.depth + w1 * b.depth + w2 * c.depth) * inv;
                if d < near || d > far {
                    continue;
                }
                let slot = &mut depth[row * w + col];
                if slot.is_none_or(|cur| d < cur) {
                    *slot = Some(d);
                }
            }
        }
    }
    DepthBuffer {
        height: h,
        width: w,
        depth,
    }
}
