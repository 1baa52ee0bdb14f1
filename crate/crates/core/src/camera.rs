//! Orthographic view cameras and the platonic-solid viewpoint rigs.
//!
//! Pixel convention: pixel `(row, col)` covers the continuous square
//! `[col, col + 1) x [row, row + 1)` in `(u, v)` coordinates, so its center is
//! `(col + 0.5, row + 0.5)`. `u` grows along the camera's right vector and `v`
//! grows against its up vector (row 0 is the top of the image). The window
//! spans `[-ortho_half_width, ortho_half_width]` on both image axes and the
//! optical axis passes through the world origin.
//!
//! Depth is measured along `view_dir` from the eye, which sits at distance
//! `(near_depth + far_depth) / 2` from the origin, opposite to `view_dir`.

use crate::error::{Error, Result};
use crate::{Point3, Vec3};

/// Distance from the eye to the origin for rig cameras.
pub const DEFAULT_CAMERA_DISTANCE: f64 = 3.0;
/// Half-depth of the clipping slab around the origin.
pub const DEFAULT_DEPTH_MARGIN: f64 = 2.0;
/// Half-extent of the orthographic window; the unit bounding sphere fits exactly.
pub const DEFAULT_HALF_WIDTH: f64 = 1.0;

const ORTHONORMAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub u: f64,
    pub v: f64,
    pub depth: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViewCamera {
    view_dir: Vec3,
    up: Vec3,
    right: Vec3,
    ortho_half_width: f64,
    near_depth: f64,
    far_depth: f64,
    height: usize,
    width: usize,
}

impl ViewCamera {
    /// Builds a camera from explicit parameters. `view_dir` and `up` must be
    /// unit length and orthogonal; they are stored verbatim.
    pub fn new(
        view_dir: Vec3,
        up: Vec3,
        ortho_half_width: f64,
        near_depth: f64,
        far_depth: f64,
        height: usize,
        width: usize,
    ) -> Result<Self> {
        let finite = view_dir.iter().chain(up.iter()).all(|c| c.is_finite())
            && ortho_half_width.is_finite()
            && near_depth.is_finite()
            && far_depth.is_finite();
        if !finite {
            return Err(Error::InvalidCamera("non-finite parameter".into()));
        }
        if (view_dir.norm() - 1.0).abs() > ORTHONORMAL_TOL || (up.norm() - 1.0).abs() > ORTHONORMAL_TOL {
            return Err(Error::InvalidCamera("view_dir and up must be unit vectors".into()));
        }
        if view_dir.dot(&up).abs() > ORTHONORMAL_TOL {
            return Err(Error::InvalidCamera("view_dir and up must be orthogonal".into()));
        }
        if ortho_half_width <= 0.0 {
            return Err(Error::InvalidCamera("ortho_half_width must be positive".into()));
        }
        if far_depth <= near_depth {
            return Err(Error::InvalidCamera("far_depth must exceed near_depth".into()));
        }
        if height == 0 || width == 0 {
            return Err(Error::InvalidCamera("resolution must be positive".into()));
        }
        Ok(Self {
            view_dir,
            up,
            right: view_dir.cross(&up),
            ortho_half_width,
            near_depth,
            far_depth,
            height,
            width,
        })
    }

    /// Camera looking along `view_dir` at the origin with the default window
    /// and clipping slab. The up vector is world +y made orthogonal to
    /// `view_dir`, or +x when `view_dir` is parallel to the y axis.
    pub fn looking_at_origin(view_dir: Vec3, height: usize, width: usize) -> Result<Self> {
        let norm = view_dir.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::InvalidCamera("view direction must be non-zero".into()));
        }
        let view_dir = view_dir / norm;
        let up = default_up(&view_dir);
        Self::new(
            view_dir,
            up,
            DEFAULT_HALF_WIDTH,
            DEFAULT_CAMERA_DISTANCE - DEFAULT_DEPTH_MARGIN,
            DEFAULT_CAMERA_DISTANCE + DEFAULT_DEPTH_MARGIN,
            height,
            width,
        )
    }

    pub fn view_dir(&self) -> Vec3 {
        self.view_dir
    }

    pub fn up(&self) -> Vec3 {
        self.up
    }

    pub fn right(&self) -> Vec3 {
        self.right
    }

    pub fn ortho_half_width(&self) -> f64 {
        self.ortho_half_width
    }

    pub fn near_depth(&self) -> f64 {
        self.near_depth
    }

    pub fn far_depth(&self) -> f64 {
        self.far_depth
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn pixel_count(&self) -> usize {
        self.height * self.width
    }

    /// Same camera at another resolution.
    pub fn with_resolution(&self, height: usize, width: usize) -> Result<Self> {
        Self::new(
            self.view_dir,
            self.up,
            self.ortho_half_width,
            self.near_depth,
            self.far_depth,
            height,
            width,
        )
    }

    /// Eye position; the origin lies on the optical axis at mid-slab depth.
    pub fn eye(&self) -> Point3 {
        -self.view_dir * (0.5 * (self.near_depth + self.far_depth))
    }

    /// World size of one pixel along `right`.
    pub fn pitch_u(&self) -> f64 {
        2.0 * self.ortho_half_width / self.width as f64
    }

    /// World size of one pixel along `up`.
    pub fn pitch_v(&self) -> f64 {
        2.0 * self.ortho_half_width / self.height as f64
    }

    /// Largest of the two pixel pitches.
    pub fn pixel_pitch(&self) -> f64 {
        self.pitch_u().max(self.pitch_v())
    }

    pub fn project(&self, p: &Point3) -> Projection {
        let rel = p - self.eye();
        let x = rel.dot(&self.right);
        let y = rel.dot(&self.up);
        Projection {
            u: 0.5 * self.width as f64 + x / self.pitch_u(),
            v: 0.5 * self.height as f64 - y / self.pitch_v(),
            depth: rel.dot(&self.view_dir),
        }
    }

    pub fn backproject(&self, u: f64, v: f64, depth: f64) -> Point3 {
        let x = (u - 0.5 * self.width as f64) * self.pitch_u();
        let y = (0.5 * self.height as f64 - v) * self.pitch_v();
        self.eye() + self.view_dir * depth + self.right * x + self.up * y
    }

    pub fn pixel_center(row: usize, col: usize) -> (f64, f64) {
        (col as f64 + 0.5, row as f64 + 0.5)
    }

    /// Pixel containing continuous coordinates `(u, v)`, if inside the grid.
    pub fn pixel_at(&self, u: f64, v: f64) -> Option<(usize, usize)> {
        if !(u.is_finite() && v.is_finite()) {
            return None;
        }
        let col = u.floor();
        let row = v.floor();
        if col < 0.0 || row < 0.0 || col >= self.width as f64 || row >= self.height as f64 {
            return None;
        }
        Some((row as usize, col as usize))
    }

    pub fn check_pixel(&self, row: usize, col: usize) -> Result<()> {
        if row >= self.height || col >= self.width {
            return Err(Error::PixelOutOfRange {
                row,
                col,
                height: self.height,
                width: self.width,
            });
        }
        Ok(())
    }

    /// Backprojection of the pixel center onto the far clipping plane.
    pub fn far_point(&self, row: usize, col: usize) -> Result<Point3> {
        self.check_pixel(row, col)?;
        Ok(self.far_point_unchecked(row, col))
    }

    pub(crate) fn far_point_unchecked(&self, row: usize, col: usize) -> Point3 {
        let (u, v) = Self::pixel_center(row, col);
        self.backproject(u, v, self.far_depth)
    }

    /// Point on the near plane through the pixel center; rays start here.
    pub fn ray_origin(&self, row: usize, col: usize) -> Point3 {
        let (u, v) = Self::pixel_center(row, col);
        self.backproject(u, v, self.near_depth)
    }

    /// Clamps a point into the box spanned by the window and the clipping
    /// slab. Points already inside are returned bit-for-bit unchanged.
    pub fn clamp_to_frustum(&self, p: &Point3) -> Point3 {
        let rel = p - self.eye();
        let hw = self.ortho_half_width;
        let (x0, y0, d0) = (rel.dot(&self.right), rel.dot(&self.up), rel.dot(&self.view_dir));
        let x = x0.clamp(-hw, hw);
        let y = y0.clamp(-hw, hw);
        let d = d0.clamp(self.near_depth, self.far_depth);
        if (x, y, d) == (x0, y0, d0) {
            return *p;
        }
        self.eye() + self.view_dir * d + self.right * x + self.up * y
    }
}

fn default_up(view_dir: &Vec3) -> Vec3 {
    let world_y = Vec3::y();
    let candidate = world_y - view_dir * view_dir.dot(&world_y);
    if candidate.norm() > 1e-9 {
        return candidate.normalize();
    }
    let world_x = Vec3::x();
    (world_x - view_dir * view_dir.dot(&world_x)).normalize()
}

/// Ordered set of cameras shared by every view of an MVPC.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewRig {
    cameras: Vec<ViewCamera>,
}

impl ViewRig {
    pub fn new(cameras: Vec<ViewCamera>) -> Result<Self> {
        if cameras.is_empty() {
            return Err(Error::InvalidViewCount(0));
        }
        let (h, w) = (cameras[0].height(), cameras[0].width());
        if cameras.iter().any(|c| c.height() != h || c.width() != w) {
            return Err(Error::ShapeMismatch("rig cameras must share one resolution".into()));
        }
        Ok(Self { cameras })
    }

    pub fn cameras(&self) -> &[ViewCamera] {
        &self.cameras
    }

    pub fn camera(&self, index: usize) -> &ViewCamera {
        &self.cameras[index]
    }

    pub fn len(&self) -> usize {
        self.cameras.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cameras.is_empty()
    }

    pub fn height(&self) -> usize {
        self.cameras[0].height()
    }

    pub fn width(&self) -> usize {
        self.cameras[0].width()
    }
}

/// Unit directions from the origin to the rig's camera positions.
///
/// * 4: alternating cube vertices `(1,1,1), (1,-1,-1), (-1,1,-1), (-1,-1,1)`.
/// * 6: `+x, -x, +y, -y, +z, -z`.
/// * 8: `(±1,±1,±1)/√3` in binary order with x the slowest sign.
pub fn rig_positions(n: usize) -> Result<Vec<Vec3>> {
    let raw: Vec<Vec3> = match n {
        4 => vec![
            Vec3::new(1.0, 1.0, 1.0),
            Vec3::new(1.0, -1.0, -1.0),
            Vec3::new(-1.0, 1.0, -1.0),
            Vec3::new(-1.0, -1.0, 1.0),
        ],
        6 => vec![
            Vec3::x(),
            -Vec3::x(),
            Vec3::y(),
            -Vec3::y(),
            Vec3::z(),
            -Vec3::z(),
        ],
        8 => {
            let mut v = Vec::with_capacity(8);
            for sx in [1.0, -1.0] {
                for sy in [1.0, -1.0] {
                    for sz in [1.0, -1.0] {
                        v.push(Vec3::new(sx, sy, sz));
                    }
                }
            }
            v
        }
        other => return Err(Error::InvalidViewCount(other)),
    };
    Ok(raw.into_iter().map(|v| v.normalize()).collect())
}

/// Rig of `n` orthographic cameras placed on a platonic solid and looking at
/// the origin.
pub fn make_rig(n: usize, height: usize, width: usize) -> Result<ViewRig> {
    let cameras = rig_positions(n)?
        .into_iter()
        .map(|pos| ViewCamera::looking_at_origin(-pos, height, width))
        .collect::<Result<Vec<_>>>()?;
    ViewRig::new(cameras)
}
