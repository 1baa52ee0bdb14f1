//! Grid-embedded point clouds: one view ([`PointGridMap`]) and the union over
//! a rig ([`Mvpc`]).

use crate::camera::{ViewCamera, ViewRig};
use crate::error::{Error, Result};
use crate::{Point3, VISIBILITY_THRESHOLD};

/// One view's point grid: every pixel stores a 3D point and a visibility.
/// Storage is row-major, `index = row * width + col`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointGridMap {
    pub camera: ViewCamera,
    pub points: Vec<Point3>,
    pub visibility: Vec<f64>,
}

impl PointGridMap {
    pub fn new(camera: ViewCamera, points: Vec<Point3>, visibility: Vec<f64>) -> Result<Self> {
        let n = camera.pixel_count();
        if points.len() != n || visibility.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "grid {}x{} needs {} entries, got {} points and {} visibilities",
                camera.height(),
                camera.width(),
                n,
                points.len(),
                visibility.len()
            )));
        }
        Ok(Self {
            camera,
            points,
            visibility,
        })
    }

    /// Every pixel on the far plane with visibility zero.
    pub fn empty(camera: ViewCamera) -> Self {
        let points = far_points(&camera);
        let visibility = vec![0.0; camera.pixel_count()];
        Self {
            camera,
            points,
            visibility,
        }
    }

    pub fn height(&self) -> usize {
        self.camera.height()
    }

    pub fn width(&self) -> usize {
        self.camera.width()
    }

    #[inline]
    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.width() + col
    }

    pub fn point(&self, row: usize, col: usize) -> Point3 {
        self.points[self.index(row, col)]
    }

    pub fn vis(&self, row: usize, col: usize) -> f64 {
        self.visibility[self.index(row, col)]
    }

    pub fn is_visible(&self, idx: usize) -> bool {
        self.visibility[idx] >= VISIBILITY_THRESHOLD
    }

    pub fn visible_count(&self) -> usize {
        (0..self.visibility.len()).filter(|&i| self.is_visible(i)).count()
    }

    /// Stored depth of every pixel along the view direction.
    pub fn depths(&self) -> Vec<f64> {
        self.points.iter().map(|p| self.camera.project(p).depth).collect()
    }
}

/// Far-plane point for every pixel of a camera, row-major.
pub fn far_points(camera: &ViewCamera) -> Vec<Point3> {
    let mut out = Vec::with_capacity(camera.pixel_count());
    for row in 0..camera.height() {
        for col in 0..camera.width() {
            out.push(camera.far_point_unchecked(row, col));
        }
    }
    out
}

/// Multi-view point cloud: one [`PointGridMap`] per rig camera.
#[derive(Debug, Clone, PartialEq)]
pub struct Mvpc {
    pub rig: ViewRig,
    pub views: Vec<PointGridMap>,
}

impl Mvpc {
    pub fn new(rig: ViewRig, views: Vec<PointGridMap>) -> Result<Self> {
        if rig.len() != views.len() {
            return Err(Error::ShapeMismatch(format!(
                "rig has {} cameras but {} views were given",
                rig.len(),
                views.len()
            )));
        }
        for (i, (cam, view)) in rig.cameras().iter().zip(&views).enumerate() {
            if cam != &view.camera {
                return Err(Error::ShapeMismatch(format!("view {i} camera differs from the rig")));
            }
        }
        Ok(Self { rig, views })
    }

    /// All pixels invisible and parked on the far plane.
    pub fn empty(rig: ViewRig) -> Self {
        let views = rig.cameras().iter().cloned().map(PointGridMap::empty).collect();
        Self { rig, views }
    }

    pub fn view_count(&self) -> usize {
        self.views.len()
    }

    pub fn height(&self) -> usize {
        self.rig.height()
    }

    pub fn width(&self) -> usize {
        self.rig.width()
    }

    /// Error unless `other` has the same rig (and therefore resolution).
    pub fn check_compatible(&self, other: &Mvpc) -> Result<()> {
        if self.rig != other.rig {
            return Err(Error::ShapeMismatch(format!(
                "rigs differ: {} views at {}x{} vs {} views at {}x{}",
                self.view_count(),
                self.height(),
                self.width(),
                other.view_count(),
                other.height(),
                other.width()
            )));
        }
        Ok(())
    }

    /// True when every stored coordinate and visibility is finite.
    pub fn is_finite(&self) -> bool {
        self.views.iter().all(|v| {
            v.points.iter().all(|p| p.iter().all(|c| c.is_finite()))
                && v.visibility.iter().all(|x| x.is_finite())
        })
    }
}
